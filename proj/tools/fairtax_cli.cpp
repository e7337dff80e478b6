// fairtax: fairness-efficiency frontiers for commodity taxation in
// monopolistic screening markets.
//
// Subcommands: analyze, frontier, couplings, oracle, reproduce-section5.
// Exit codes: 0 success, 1 acceptance failure, 2 usage error, 3 precondition
// failure. FAIRTAX_OUT_DIR sets the default directory for relative output
// paths.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "fairtax/fairtax.hpp"

namespace {

using fairtax::Json;

std::string resolve_out(const std::string& path) {
  if (path.empty() || path.front() == '/') return path;
  const char* dir = std::getenv("FAIRTAX_OUT_DIR");
  if (dir == nullptr || *dir == '\0') return path;
  std::string joined(dir);
  if (joined.back() != '/') joined += '/';
  return joined + path;
}

void emit_json(const Json& j, const std::string& out) {
  if (out.empty()) {
    fairtax::write_json(j, std::cout);
    return;
  }
  const std::string path = resolve_out(out);
  std::ofstream os(path);
  if (!os) throw fairtax::UsageError("cannot open output file: " + path);
  fairtax::write_json(j, os);
}

void emit_csv(const std::vector<std::string>& header,
              const std::vector<std::vector<double>>& rows,
              const std::string& out) {
  if (out.empty()) {
    fairtax::write_csv(std::cout, header, rows);
    return;
  }
  const std::string path = resolve_out(out);
  std::ofstream os(path);
  if (!os) throw fairtax::UsageError("cannot open output file: " + path);
  fairtax::write_csv(os, header, rows);
}

std::pair<fairtax::MarginalDistribution, fairtax::MarginalDistribution>
parse_marginal_pair(const std::string& spec) {
  const auto comma = spec.find(',');
  if (comma == std::string::npos) {
    throw fairtax::UsageError("--marginals expects two comma-separated specs");
  }
  return {fairtax::parse_marginal(spec.substr(0, comma)),
          fairtax::parse_marginal(spec.substr(comma + 1))};
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

int cmd_analyze(const std::string& marginal_spec, int grid, int table_grid,
                const std::string& out, const std::string& format) {
  const auto d = fairtax::parse_marginal(marginal_spec);
  const auto report = fairtax::regularity(d, grid);
  if (format == "csv") {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i <= table_grid; ++i) {
      const double t = static_cast<double>(i) / table_grid;
      rows.push_back({t, d.cdf(t), d.pdf(t), fairtax::virtual_value(d, t),
                      fairtax::w_function(d, t)});
    }
    emit_csv({"theta", "cdf", "pdf", "psi", "W"}, rows, out);
    return 0;
  }
  Json j;
  j["marginal"] = d.name;
  j["theta_star"] = fairtax::monopoly_threshold(d);
  j["regularity"] = fairtax::to_json(report);
  emit_json(j, out);
  return 0;
}

// ---------------------------------------------------------------------------
// frontier
// ---------------------------------------------------------------------------

int cmd_frontier(const std::string& marginal_spec, int sweep_steps,
                 bool include_monopoly, int gini_grid, const std::string& out,
                 const std::string& sweep_out) {
  const auto d = fairtax::parse_marginal(marginal_spec);
  const auto interval = fairtax::frontier_interval(d);
  if (!interval.strongly_regular) {
    std::cerr << "warning: " << d.name
              << " is not strongly regular; the interval is uncertified\n";
  }
  emit_json(fairtax::to_json(interval), out);
  if (sweep_steps > 0) {
    const auto rows =
        fairtax::frontier_sweep(d, sweep_steps, include_monopoly, gini_grid);
    std::vector<std::vector<double>> table;
    for (const auto& r : rows) {
      table.push_back({r.k, r.tau, r.lump_sum, r.mean_rent, r.lowest_type_rent,
                       r.consumer_price, r.gini, r.frontier ? 1.0 : 0.0});
    }
    emit_csv({"k", "tau", "C", "mean_rent", "lowest_type_rent",
              "consumer_price", "gini", "frontier"},
             table, sweep_out);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// couplings
// ---------------------------------------------------------------------------

int cmd_couplings(const std::string& marginals_spec,
                  const std::vector<std::string>& compare,
                  const std::vector<std::string>& battery,
                  const std::string& sample_spec, int grid, int count,
                  std::uint64_t seed, const std::string& out) {
  auto [m1, m2] = parse_marginal_pair(marginals_spec);
  if (!compare.empty()) {
    const auto f = fairtax::parse_coupling(compare[0], m1, m2);
    const auto g = fairtax::parse_coupling(compare[1], m1, m2);
    const auto verdict = fairtax::supermodular_compare(f, g, grid);
    Json j = fairtax::to_json(verdict);
    j["first"] = f.describe();
    j["second"] = g.describe();
    j["grid_size"] = grid;
    emit_json(j, out);
    return 0;
  }
  if (!battery.empty()) {
    const auto f = fairtax::parse_coupling(battery[0], m1, m2);
    const auto g = fairtax::parse_coupling(battery[1], m1, m2);
    Json entries = Json::array();
    for (const auto& e :
         fairtax::supermodular_test_battery(f, g, seed, count, grid)) {
      Json row;
      row["function"] = e.function_id;
      row["gap"] = e.gap;
      entries.push_back(row);
    }
    Json j;
    j["first"] = f.describe();
    j["second"] = g.describe();
    j["entries"] = entries;
    emit_json(j, out);
    return 0;
  }
  if (!sample_spec.empty()) {
    const auto c = fairtax::parse_coupling(sample_spec, m1, m2);
    const auto points = fairtax::sample(c, seed, count);
    if (out.empty()) {
      fairtax::write_samples_csv(std::cout, points);
    } else {
      std::ofstream os(resolve_out(out));
      if (!os) throw fairtax::UsageError("cannot open output file: " + out);
      fairtax::write_samples_csv(os, points);
    }
    return 0;
  }
  throw fairtax::UsageError(
      "couplings: choose one of --compare, --battery, --sample");
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

Json report_to_json(const fairtax::DominanceScanReport& r) {
  Json j;
  j["m"] = r.m;
  j["candidates"] = r.candidate_count;
  j["thresholds"] = r.threshold_count;
  j["seed"] = r.seed;
  Json analytic;
  analytic["k_low"] = r.k_low;
  analytic["k_high"] = r.k_high;
  analytic["theta_star"] = r.monopoly;
  j["analytic"] = analytic;
  Json snapped;
  snapped["frontier_low_index"] = r.frontier_low_index;
  snapped["frontier_high_index"] = r.frontier_high_index;
  snapped["monopoly_index"] = r.monopoly_index;
  snapped["snap_low"] = r.snap_low;
  snapped["snap_high"] = r.snap_high;
  snapped["snap_monopoly"] = r.snap_monopoly;
  j["snapped"] = snapped;
  j["strict_dominations"] = r.strict_domination_count;
  j["frontier_undominated"] = r.frontier_undominated;
  j["off_frontier_all_dominated"] = r.off_frontier_all_dominated;
  j["undominated_off_frontier"] = r.undominated_off_frontier;
  j["monopoly_dominated_by_frontier"] = r.monopoly_dominated_by_frontier;
  j["undominated_all_thresholds"] = r.undominated_all_thresholds;
  j["undominated_nonthresholds"] = r.undominated_nonthresholds;
  Json violations = Json::array();
  for (const auto& pair : r.frontier_dominations) {
    violations.push_back({{"dominator", pair[0]}, {"dominated", pair[1]}});
  }
  j["frontier_violations"] = violations;
  return j;
}

void dump_candidate_atoms(const fairtax::DiscreteInstance& inst, int index,
                          const std::string& dir) {
  const auto atoms = inst.rent_atoms(index);
  std::vector<std::vector<double>> rows;
  for (const auto& [v, w] : atoms) rows.push_back({v, w});
  const std::string path =
      resolve_out(dir + "/candidate_" + std::to_string(index) + "_atoms.csv");
  std::ofstream os(path);
  if (os) fairtax::write_csv(os, {"rent", "weight"}, rows);
}

int cmd_oracle(const std::string& marginal_spec, int m, int random_count,
               std::uint64_t seed, const std::string& out,
               const std::string& dump_dir) {
  const auto d = fairtax::parse_marginal(marginal_spec);
  const auto inst = fairtax::DiscreteInstance::build(d, m, random_count, seed);
  const auto report = fairtax::dominance_scan(inst);
  emit_json(report_to_json(report), out);
  if (!dump_dir.empty()) {
    for (const auto& pair : report.frontier_dominations) {
      dump_candidate_atoms(inst, pair[0], dump_dir);
      dump_candidate_atoms(inst, pair[1], dump_dir);
    }
    for (int idx : report.undominated_nonthresholds) {
      dump_candidate_atoms(inst, idx, dump_dir);
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// reproduce-section5
// ---------------------------------------------------------------------------

int cmd_reproduce_section5(const std::string& out) {
  const auto u = fairtax::uniform_marginal();
  bool all_pass = true;
  Json j;

  // W(theta) = 3 - 4 theta
  double w_dev = 0.0;
  for (int i = 0; i <= 1024; ++i) {
    const double t = i / 1024.0;
    w_dev = std::max(w_dev, std::abs(fairtax::w_function(u, t) - (3.0 - 4.0 * t)));
  }
  const bool w_ok = w_dev < 1e-8;
  all_pass = all_pass && w_ok;
  Json w_formula;
  w_formula["max_abs_deviation"] = w_dev;
  w_formula["spot"] = {{"theta", 0.75}, {"W", fairtax::w_function(u, 0.75)}};
  w_formula["pass"] = w_ok;
  j["w_formula"] = w_formula;

  // frontier interval [2/3, 3/4] and the monopoly threshold 1/2
  const auto interval = fairtax::frontier_interval(u);
  const bool frontier_ok = std::abs(interval.k_low - 2.0 / 3.0) < 1e-8 &&
                           std::abs(interval.k_high - 0.75) < 1e-8 &&
                           std::abs(interval.monopoly - 0.5) < 1e-8;
  all_pass = all_pass && frontier_ok;
  Json fr = fairtax::to_json(interval);
  fr["pass"] = frontier_ok;
  j["frontier"] = fr;

  // coupling curves at the monopoly price: H_antitone = p^2/4,
  // H_monotone = (p - 1/2)_+^2
  const int grid = 2048;
  const auto rent = fairtax::rent_function(u, 0.5);
  fairtax::RentProfile antitone{
      fairtax::Coupling::countermonotone(u, u), {rent, rent}};
  fairtax::RentProfile monotone{fairtax::Coupling::comonotone({u, u}),
                                {rent, rent}};
  const auto anti_dist = fairtax::rent_distribution(antitone, grid);
  const auto mono_dist = fairtax::rent_distribution(monotone, grid);
  const auto anti_curve = fairtax::cumulative_rents(anti_dist, grid);
  const auto mono_curve = fairtax::cumulative_rents(mono_dist, grid);
  double anti_dev = 0.0, mono_dev = 0.0;
  for (int i = 0; i <= grid; ++i) {
    const double p = anti_curve.percentiles[i];
    anti_dev = std::max(anti_dev, std::abs(anti_curve.values[i] - p * p / 4.0));
    const double expected = p > 0.5 ? (p - 0.5) * (p - 0.5) : 0.0;
    mono_dev = std::max(mono_dev, std::abs(mono_curve.values[i] - expected));
  }
  const auto coupling_verdict = fairtax::sosd_compare(anti_dist, mono_dist);
  const bool curves_ok = anti_dev < 1e-3 && mono_dev < 1e-3 &&
                         coupling_verdict.dominates &&
                         coupling_verdict.margin >= -1e-9;
  all_pass = all_pass && curves_ok;
  Json curves;
  curves["percentiles"] = anti_curve.percentiles;
  curves["antitone_H"] = anti_curve.values;
  curves["monotone_H"] = mono_curve.values;
  curves["antitone_max_deviation"] = anti_dev;
  curves["monotone_max_deviation"] = mono_dev;
  curves["antitone_dominates"] = coupling_verdict.dominates;
  curves["sosd_margin"] = coupling_verdict.margin;
  curves["pass"] = curves_ok;
  j["coupling_curves"] = curves;

  // supra-pricing: k_low - theta* = 1/6
  const auto supra = fairtax::supra_pricing_check(u);
  const bool supra_ok = supra.holds && std::abs(supra.margin - 1.0 / 6.0) < 1e-8;
  all_pass = all_pass && supra_ok;
  Json sp;
  sp["holds"] = supra.holds;
  sp["margin"] = supra.margin;
  sp["w_at_monopoly"] = supra.w_at_monopoly;
  sp["survival_at_monopoly"] = supra.survival_at_monopoly;
  sp["pass"] = supra_ok;
  j["supra_pricing"] = sp;

  j["all_pass"] = all_pass;
  emit_json(j, out);
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairness-efficiency frontiers for commodity taxation"};
  app.require_subcommand(1);

  std::string marginal_spec, marginals_spec, out, sweep_out, format = "json";
  std::string sample_spec, dump_dir;
  std::vector<std::string> compare, battery;
  int grid = 1024, table_grid = 256, sweep_steps = 0, gini_grid = 2048;
  int oracle_m = 32, random_count = 100, count = 1000;
  std::uint64_t seed = 0;
  bool include_monopoly = false;

  auto* analyze = app.add_subcommand("analyze", "marginal screening analytics");
  analyze->add_option("--marginal", marginal_spec, "marginal spec")->required();
  analyze->add_option("--grid", grid, "regularity grid size")
      ->check(CLI::Range(16, 1 << 20));
  analyze->add_option("--table-grid", table_grid, "rows in the CSV table")
      ->check(CLI::Range(2, 1 << 20));
  analyze->add_option("--format", format, "json|csv")
      ->check(CLI::IsMember({"json", "csv"}));
  analyze->add_option("--out", out, "output path (default stdout)");

  auto* frontier = app.add_subcommand("frontier", "frontier interval and sweep");
  frontier->add_option("--marginal", marginal_spec, "marginal spec")->required();
  frontier->add_option("--sweep", sweep_steps, "sweep rows (>= 2 enables CSV)")
      ->check(CLI::Range(2, 1 << 20));
  frontier->add_flag("--include-monopoly", include_monopoly,
                     "prepend the monopoly reference row");
  frontier->add_option("--gini-grid", gini_grid, "grid for gini computation")
      ->check(CLI::Range(16, 1 << 20));
  frontier->add_option("--out", out, "interval JSON path (default stdout)");
  frontier->add_option("--sweep-out", sweep_out, "sweep CSV path (default stdout)");

  auto* couplings = app.add_subcommand("couplings", "coupling comparisons");
  couplings->add_option("--marginals", marginals_spec, "two specs, comma separated")
      ->required();
  couplings->add_option("--compare", compare, "two coupling specs")->expected(2);
  couplings->add_option("--battery", battery, "two coupling specs")->expected(2);
  couplings->add_option("--sample", sample_spec, "coupling spec to sample");
  couplings->add_option("--grid", grid, "comparison grid size")
      ->check(CLI::Range(16, 1 << 14));
  couplings->add_option("--count", count, "samples / indicator count")
      ->check(CLI::PositiveNumber);
  couplings->add_option("--seed", seed, "rng seed");
  couplings->add_option("--out", out, "output path (default stdout)");

  auto* oracle = app.add_subcommand("oracle", "brute-force dominance scan");
  oracle->add_option("--marginal", marginal_spec, "marginal spec")->required();
  oracle->add_option("--grid", oracle_m, "type grid size m")
      ->check(CLI::Range(2, 512));
  oracle->add_option("--random", random_count, "random monotone candidates")
      ->check(CLI::Range(0, 100000));
  oracle->add_option("--seed", seed, "rng seed");
  oracle->add_option("--out", out, "report JSON path (default stdout)");
  oracle->add_option("--dump-dir", dump_dir,
                     "directory for failing-pair atom CSV dumps");

  auto* reproduce =
      app.add_subcommand("reproduce-section5", "re-derive the worked example");
  reproduce->add_option("--out", out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (analyze->parsed()) {
      return cmd_analyze(marginal_spec, grid, table_grid, out, format);
    }
    if (frontier->parsed()) {
      return cmd_frontier(marginal_spec, sweep_steps, include_monopoly,
                          gini_grid, out, sweep_out);
    }
    if (couplings->parsed()) {
      return cmd_couplings(marginals_spec, compare, battery, sample_spec, grid,
                           count, seed, out);
    }
    if (oracle->parsed()) {
      return cmd_oracle(marginal_spec, oracle_m, random_count, seed, out,
                        dump_dir);
    }
    if (reproduce->parsed()) {
      return cmd_reproduce_section5(out);
    }
  } catch (const fairtax::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fairtax::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
