#pragma once

#include <cctype>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fairtax/couplings.hpp"
#include "fairtax/errors.hpp"
#include "fairtax/frontier.hpp"
#include "fairtax/marginals.hpp"
#include "fairtax/mechanism.hpp"
#include "fairtax/orders.hpp"

namespace fairtax {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Number formatting: 12 significant digits everywhere, for byte-identical
// output across runs.
// ---------------------------------------------------------------------------

inline std::string format_sig(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

namespace detail {

inline void emit_json(const Json& j, std::ostream& os, int indent) {
  const std::string pad(indent, ' ');
  const std::string pad_in(indent + 2, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      std::size_t i = 0;
      for (auto it = j.begin(); it != j.end(); ++it, ++i) {
        os << pad_in << Json(it.key()).dump() << ": ";
        emit_json(it.value(), os, indent + 2);
        os << (i + 1 < j.size() ? ",\n" : "\n");
      }
      os << pad << "}";
      break;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        os << pad_in;
        emit_json(j[i], os, indent + 2);
        os << (i + 1 < j.size() ? ",\n" : "\n");
      }
      os << pad << "]";
      break;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (std::isfinite(v)) {
        os << format_sig(v);
      } else {
        os << Json(format_sig(v)).dump();  // "inf" / "-inf" / "nan" as strings
      }
      break;
    }
    default:
      os << j.dump();
  }
}

}  // namespace detail

/// Serializes with objects/arrays indented and floats at 12 significant
/// digits; non-finite floats become strings.
inline void write_json(const Json& j, std::ostream& os) {
  detail::emit_json(j, os, 0);
  os << "\n";
}

inline std::string json_string(const Json& j) {
  std::ostringstream os;
  write_json(j, os);
  return os.str();
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    std::size_t a = 0, b = field.size();
    while (a < b && std::isspace(static_cast<unsigned char>(field[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(field[b - 1]))) --b;
    fields.push_back(field.substr(a, b - a));
  }
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

/// Reads a CSV with a non-numeric header row and numeric body.
inline CsvTable read_csv(std::istream& is) {
  CsvTable table;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (table.header.empty()) {
      table.header = fields;
      continue;
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      try {
        std::size_t pos = 0;
        row.push_back(std::stod(f, &pos));
        if (pos != f.size()) throw UsageError("trailing characters");
      } catch (const std::exception&) {
        throw UsageError("CSV: cannot parse number '" + f + "'");
      }
    }
    if (row.size() != table.header.size()) {
      throw UsageError("CSV: row width does not match header");
    }
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw UsageError("CSV: empty input");
  return table;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open CSV file: " + path);
  return read_csv(is);
}

inline void write_csv(std::ostream& os, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    os << header[i] << (i + 1 < header.size() ? "," : "\n");
  }
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      os << format_sig(row[i]) << (i + 1 < row.size() ? "," : "\n");
    }
  }
}

// ---------------------------------------------------------------------------
// Importers
// ---------------------------------------------------------------------------

/// Tabulated marginal from CSV with header `theta,cdf`, both columns
/// strictly increasing.
inline MarginalDistribution read_table_marginal(const std::string& path) {
  const CsvTable table = read_csv_file(path);
  if (table.header.size() != 2 || table.header[0] != "theta" ||
      table.header[1] != "cdf") {
    throw UsageError("table marginal CSV must have header theta,cdf: " + path);
  }
  std::vector<double> theta, cdf;
  for (const auto& row : table.rows) {
    theta.push_back(row[0]);
    cdf.push_back(row[1]);
  }
  return tabulated_marginal(std::move(theta), std::move(cdf), "table:" + path);
}

/// Grid copula cell masses from a headerless CSV matrix.
inline std::vector<std::vector<double>> read_grid_matrix(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open grid matrix file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& f : split_csv_line(line)) {
      try {
        row.push_back(std::stod(f));
      } catch (const std::exception&) {
        throw UsageError("grid matrix: cannot parse '" + f + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw UsageError("grid matrix: empty file " + path);
  return rows;
}

inline void write_samples_csv(std::ostream& os,
                              const std::vector<std::vector<double>>& points) {
  if (points.empty()) throw UsageError("no samples to write");
  std::vector<std::string> header;
  for (std::size_t i = 0; i < points.front().size(); ++i) {
    header.push_back("x" + std::to_string(i + 1));
  }
  write_csv(os, header, points);
}

/// Tax schedule CSV with header `q,sigma`.
inline void write_tax_csv(std::ostream& os, const TaxPolicy& policy) {
  std::vector<std::vector<double>> rows;
  for (double q : policy.knots()) rows.push_back({q, policy(q)});
  write_csv(os, {"q", "sigma"}, rows);
}

inline TaxPolicy read_tax_csv(const std::string& path) {
  const CsvTable table = read_csv_file(path);
  if (table.header.size() != 2 || table.header[0] != "q" ||
      table.header[1] != "sigma") {
    throw UsageError("tax schedule CSV must have header q,sigma: " + path);
  }
  std::vector<double> q, sigma;
  for (const auto& row : table.rows) {
    q.push_back(row[0]);
    sigma.push_back(row[1]);
  }
  return TaxPolicy::tabulated(std::move(q), std::move(sigma));
}

// ---------------------------------------------------------------------------
// Spec-string grammar
// ---------------------------------------------------------------------------

/// `uniform`, `power:<alpha>`, `texp:<lambda>`, or `table:<path>`.
inline MarginalDistribution parse_marginal(const std::string& spec) {
  if (spec == "uniform") return uniform_marginal();
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  auto numeric_arg = [&]() {
    try {
      std::size_t pos = 0;
      const double v = std::stod(arg, &pos);
      if (pos != arg.size()) throw UsageError("bad number");
      return v;
    } catch (const std::exception&) {
      throw UsageError("marginal spec '" + spec + "': bad parameter '" + arg + "'");
    }
  };
  if (head == "power") return power_marginal(numeric_arg());
  if (head == "texp") return truncated_exponential_marginal(numeric_arg());
  if (head == "table") {
    if (arg.empty()) throw UsageError("marginal spec 'table:' needs a path");
    return read_table_marginal(arg);
  }
  throw UsageError("unknown marginal spec: '" + spec +
                   "' (expected uniform | power:<a> | texp:<l> | table:<path>)");
}

/// `independent`, `monotone`, `antitone`, `gaussian:<rho>`, or `grid:<path>`.
inline Coupling parse_coupling(const std::string& spec, MarginalDistribution m1,
                               MarginalDistribution m2) {
  if (spec == "independent") {
    return Coupling::independent({std::move(m1), std::move(m2)});
  }
  if (spec == "monotone") return Coupling::comonotone({std::move(m1), std::move(m2)});
  if (spec == "antitone") {
    return Coupling::countermonotone(std::move(m1), std::move(m2));
  }
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (head == "gaussian") {
    try {
      std::size_t pos = 0;
      const double rho = std::stod(arg, &pos);
      if (pos != arg.size()) throw UsageError("bad number");
      return Coupling::gaussian(std::move(m1), std::move(m2), rho);
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception&) {
      throw UsageError("coupling spec '" + spec + "': bad rho '" + arg + "'");
    }
  }
  if (head == "grid") {
    if (arg.empty()) throw UsageError("coupling spec 'grid:' needs a path");
    return Coupling::grid(std::move(m1), std::move(m2), read_grid_matrix(arg));
  }
  throw UsageError(
      "unknown coupling spec: '" + spec +
      "' (expected independent | monotone | antitone | gaussian:<rho> | grid:<path>)");
}

// ---------------------------------------------------------------------------
// JSON views of domain objects
// ---------------------------------------------------------------------------

inline Json to_json(const OrderVerdict& v) {
  Json j;
  j["dominates"] = v.dominates;
  j["margin"] = v.margin;
  if (v.witness.empty()) {
    j["witness"] = nullptr;
  } else {
    j["witness"] = v.witness;
  }
  return j;
}

inline Json to_json(const RegularityReport& r) {
  Json j;
  j["myerson_regular"] = r.myerson_regular;
  j["strongly_regular"] = r.strongly_regular;
  if (r.witness) {
    j["witness"] = *r.witness;
  } else {
    j["witness"] = nullptr;
  }
  j["grid_size"] = r.grid_size;
  return j;
}

inline Json to_json(const FrontierInterval& f) {
  Json j;
  j["k_low"] = f.k_low;
  j["k_high"] = f.k_high;
  j["theta_star"] = f.monopoly;
  j["strongly_regular"] = f.strongly_regular;
  return j;
}

inline Json mechanism_to_json(const MarketMechanism& m) {
  Json j;
  j["marginal"] = m.marginal.name;
  if (m.allocation.is_threshold()) {
    j["threshold"] = m.allocation.threshold_point();
  } else {
    j["breakpoints"] = m.allocation.breakpoints();
    j["values"] = m.allocation.values();
  }
  Json tax;
  if (m.tax.is_excise()) {
    tax["kind"] = "excise";
    tax["C"] = m.tax.as_excise().lump_sum;
    tax["tau"] = m.tax.as_excise().per_unit;
  } else {
    tax["kind"] = "table";
    std::vector<double> q = m.tax.knots(), sigma;
    for (double x : q) sigma.push_back(m.tax(x));
    tax["q"] = q;
    tax["sigma"] = sigma;
  }
  j["tax"] = tax;
  return j;
}

/// Inverse of mechanism_to_json; the marginal is reconstructed from its
/// spec-string name.
inline MarketMechanism mechanism_from_json(const Json& j) {
  MarginalDistribution marginal = parse_marginal(j.at("marginal").get<std::string>());
  AllocationRule allocation =
      j.contains("threshold")
          ? AllocationRule::threshold(j.at("threshold").get<double>())
          : AllocationRule(j.at("breakpoints").get<std::vector<double>>(),
                           j.at("values").get<std::vector<double>>());
  const Json& tax = j.at("tax");
  TaxPolicy policy =
      tax.at("kind").get<std::string>() == "excise"
          ? TaxPolicy::excise(
                {tax.at("C").get<double>(), tax.at("tau").get<double>()})
          : TaxPolicy::tabulated(tax.at("q").get<std::vector<double>>(),
                                 tax.at("sigma").get<std::vector<double>>());
  return {std::move(allocation), std::move(policy), std::move(marginal)};
}

}  // namespace fairtax
