#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairtax/errors.hpp"
#include "fairtax/marginals.hpp"
#include "fairtax/numerics.hpp"

namespace fairtax {

enum class CouplingKind {
  Independent,
  Comonotone,
  Countermonotone,
  GaussianCopula,
  GridCopula,
};

inline const char* to_string(CouplingKind k) {
  switch (k) {
    case CouplingKind::Independent: return "independent";
    case CouplingKind::Comonotone: return "monotone";
    case CouplingKind::Countermonotone: return "antitone";
    case CouplingKind::GaussianCopula: return "gaussian";
    case CouplingKind::GridCopula: return "grid";
  }
  return "?";
}

/// Outcome of a pointwise dominance test. `witness` is empty when the test
/// passes; otherwise it holds the point where the worst gap occurs (one
/// coordinate for scalar tests, two for joint-CDF tests). `margin` is the
/// minimal signed gap over the grid; ties count as dominance.
struct OrderVerdict {
  bool dominates = false;
  std::vector<double> witness;
  double margin = 0.0;
};

/// A joint distribution on [0,1]^n with fixed marginals. Parametric kinds
/// store nothing beyond their parameter; GridCopula holds an m x m matrix of
/// cell masses on the uniform percentile lattice, so rows and columns must
/// each sum to 1/m (fixed marginals) and the total to 1.
class Coupling {
 public:
  static Coupling independent(std::vector<MarginalDistribution> marginals) {
    return Coupling(CouplingKind::Independent, std::move(marginals));
  }

  static Coupling comonotone(std::vector<MarginalDistribution> marginals) {
    return Coupling(CouplingKind::Comonotone, std::move(marginals));
  }

  static Coupling countermonotone(MarginalDistribution a, MarginalDistribution b) {
    return Coupling(CouplingKind::Countermonotone, {std::move(a), std::move(b)});
  }

  static Coupling gaussian(MarginalDistribution a, MarginalDistribution b,
                           double rho) {
    if (!(rho > -1.0 && rho < 1.0)) {
      throw UsageError("gaussian copula requires rho in (-1, 1)");
    }
    Coupling c(CouplingKind::GaussianCopula, {std::move(a), std::move(b)});
    c.rho_ = rho;
    return c;
  }

  static Coupling grid(MarginalDistribution a, MarginalDistribution b,
                       std::vector<std::vector<double>> masses) {
    Coupling c(CouplingKind::GridCopula, {std::move(a), std::move(b)});
    const std::size_t m = masses.size();
    if (m == 0) throw UsageError("grid copula: empty matrix");
    const double cell_marginal = 1.0 / static_cast<double>(m);
    double total = 0.0;
    std::vector<double> col_sums(m, 0.0);
    for (const auto& row : masses) {
      if (row.size() != m) throw UsageError("grid copula: matrix must be square");
      double row_sum = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        if (!(row[j] >= 0.0)) throw UsageError("grid copula: negative cell mass");
        row_sum += row[j];
        col_sums[j] += row[j];
      }
      if (std::abs(row_sum - cell_marginal) > 1e-9) {
        throw UsageError("grid copula: row sums must equal 1/m (fixed marginals)");
      }
      total += row_sum;
    }
    for (double s : col_sums) {
      if (std::abs(s - cell_marginal) > 1e-9) {
        throw UsageError("grid copula: column sums must equal 1/m (fixed marginals)");
      }
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw UsageError("grid copula: total mass must be 1");
    }
    c.grid_ = std::move(masses);
    c.build_prefix_sums();
    return c;
  }

  CouplingKind kind() const { return kind_; }
  int dimension() const { return static_cast<int>(marginals_.size()); }
  const std::vector<MarginalDistribution>& marginals() const { return marginals_; }
  double rho() const { return rho_; }
  const std::vector<std::vector<double>>& grid_masses() const { return grid_; }

  std::string describe() const {
    if (kind_ == CouplingKind::GaussianCopula) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "gaussian:%g", rho_);
      return buf;
    }
    return to_string(kind_);
  }

  /// Copula CDF C(u, v) on the unit square; exact per kind.
  double copula_cdf(double u, double v) const {
    u = std::clamp(u, 0.0, 1.0);
    v = std::clamp(v, 0.0, 1.0);
    switch (kind_) {
      case CouplingKind::Independent:
        return u * v;
      case CouplingKind::Comonotone:
        return std::min(u, v);
      case CouplingKind::Countermonotone:
        return std::max(u + v - 1.0, 0.0);
      case CouplingKind::GaussianCopula:
        if (u == 0.0 || v == 0.0) return 0.0;
        if (u == 1.0) return v;
        if (v == 1.0) return u;
        return binorm_cdf(norm_quantile(u), norm_quantile(v), rho_);
      case CouplingKind::GridCopula: {
        const std::size_t m = grid_.size();
        const double su = u * static_cast<double>(m);
        const double sv = v * static_cast<double>(m);
        const auto iu = std::min<std::size_t>(static_cast<std::size_t>(su), m);
        const auto iv = std::min<std::size_t>(static_cast<std::size_t>(sv), m);
        const double fu = su - static_cast<double>(iu);
        const double fv = sv - static_cast<double>(iv);
        double c = prefix_[iu][iv];
        if (iu < m) c += fu * row_prefix_[iu][iv];
        if (iv < m) c += fv * col_prefix_[iv][iu];
        if (iu < m && iv < m) c += fu * fv * grid_[iu][iv];
        return c;
      }
    }
    return 0.0;
  }

  /// Joint CDF at a point in [0,1]^n. Independent and comonotone kinds work
  /// for any n >= 1; the other kinds require n = 2.
  double joint_cdf(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dimension()) {
      throw DimensionMismatchError("joint_cdf: point has dimension " +
                                   std::to_string(x.size()) + ", coupling has " +
                                   std::to_string(dimension()));
    }
    switch (kind_) {
      case CouplingKind::Independent: {
        double p = 1.0;
        for (std::size_t i = 0; i < x.size(); ++i) p *= marginals_[i].cdf(x[i]);
        return p;
      }
      case CouplingKind::Comonotone: {
        double p = 1.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
          p = std::min(p, marginals_[i].cdf(x[i]));
        }
        return p;
      }
      default:
        return copula_cdf(marginals_[0].cdf(x[0]), marginals_[1].cdf(x[1]));
    }
  }

  double joint_cdf(std::initializer_list<double> x) const {
    return joint_cdf(std::span<const double>(x.begin(), x.size()));
  }

 private:
  Coupling(CouplingKind kind, std::vector<MarginalDistribution> marginals)
      : kind_(kind), marginals_(std::move(marginals)) {
    if (marginals_.empty()) throw UsageError("coupling: needs >= 1 marginal");
    const bool pairwise_only = kind_ == CouplingKind::Countermonotone ||
                               kind_ == CouplingKind::GaussianCopula ||
                               kind_ == CouplingKind::GridCopula;
    if (pairwise_only && marginals_.size() != 2) {
      throw UnsupportedError(std::string(to_string(kind_)) +
                             " coupling is defined for n = 2 only");
    }
  }

  void build_prefix_sums() {
    const std::size_t m = grid_.size();
    prefix_.assign(m + 1, std::vector<double>(m + 1, 0.0));
    row_prefix_.assign(m, std::vector<double>(m + 1, 0.0));
    col_prefix_.assign(m, std::vector<double>(m + 1, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        row_prefix_[i][j + 1] = row_prefix_[i][j] + grid_[i][j];
        col_prefix_[j][i + 1] = col_prefix_[j][i] + grid_[i][j];
      }
    }
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        prefix_[i + 1][j + 1] =
            prefix_[i][j + 1] + prefix_[i + 1][j] - prefix_[i][j] + grid_[i][j];
      }
    }
  }

  CouplingKind kind_;
  std::vector<MarginalDistribution> marginals_;
  double rho_ = 0.0;
  std::vector<std::vector<double>> grid_;
  std::vector<std::vector<double>> prefix_;      // (m+1)^2 rectangle sums
  std::vector<std::vector<double>> row_prefix_;  // per-row partial sums
  std::vector<std::vector<double>> col_prefix_;  // per-column partial sums
};

namespace detail {

inline void require_same_marginals(const Coupling& f, const Coupling& g,
                                   int grid_size) {
  if (f.dimension() != g.dimension()) {
    throw MarginalMismatchError("couplings have different dimensions");
  }
  for (int i = 0; i < f.dimension(); ++i) {
    for (int a = 0; a < grid_size; ++a) {
      const double t = static_cast<double>(a) / (grid_size - 1);
      const double df = f.marginals()[i].cdf(t) - g.marginals()[i].cdf(t);
      if (std::abs(df) > 1e-6) {
        throw MarginalMismatchError("marginal " + std::to_string(i + 1) +
                                    " differs by " + std::to_string(df) +
                                    " at theta = " + std::to_string(t));
      }
    }
  }
}

/// Copula CDF evaluated on the (g+1) x (g+1) node lattice u = i/g.
inline std::vector<std::vector<double>> copula_cdf_nodes(const Coupling& c,
                                                         int g) {
  std::vector<std::vector<double>> nodes(g + 1, std::vector<double>(g + 1));
  for (int i = 0; i <= g; ++i) {
    const double u = static_cast<double>(i) / g;
    for (int j = 0; j <= g; ++j) {
      nodes[i][j] = c.copula_cdf(u, static_cast<double>(j) / g);
    }
  }
  return nodes;
}

}  // namespace detail

/// Pointwise joint-CDF test of F >= G over a grid_size x grid_size lattice
/// on [0,1]^2, the exact criterion for the supermodular order at n = 2 and
/// fixed marginals.
inline OrderVerdict supermodular_compare(const Coupling& f, const Coupling& g,
                                         int grid_size = 256) {
  if (f.dimension() != 2 || g.dimension() != 2) {
    throw UnsupportedError(
        "supermodular_compare: the joint-CDF criterion is exact for n = 2 only");
  }
  detail::require_same_marginals(f, g, grid_size);
  OrderVerdict verdict;
  verdict.margin = std::numeric_limits<double>::infinity();
  for (int a = 0; a < grid_size; ++a) {
    const double x = static_cast<double>(a) / (grid_size - 1);
    const double u = f.marginals()[0].cdf(x);
    for (int b = 0; b < grid_size; ++b) {
      const double y = static_cast<double>(b) / (grid_size - 1);
      const double v = f.marginals()[1].cdf(y);
      const double gap = f.copula_cdf(u, v) - g.copula_cdf(u, v);
      if (gap < verdict.margin) {
        verdict.margin = gap;
        verdict.witness = {x, y};
      }
    }
  }
  verdict.dominates = verdict.margin >= -1e-9;
  if (verdict.dominates) verdict.witness.clear();
  return verdict;
}

struct BatteryEntry {
  std::string function_id;
  double gap;  // int h dF - int h dG
};

/// Evaluates supermodular test functions against both couplings. Smooth test
/// functions (xy, min, exp(x+y)) use midpoint quadrature over percentile
/// cells; indicator functions 1{x >= a, y >= b} use the survival-function
/// identity, which is exact, so the sign of their gaps matches the joint-CDF
/// criterion at tolerance.
inline std::vector<BatteryEntry> supermodular_test_battery(
    const Coupling& f, const Coupling& g, std::uint64_t seed, int count,
    int grid_size = 512) {
  if (f.dimension() != 2 || g.dimension() != 2) {
    throw UnsupportedError("supermodular_test_battery: n = 2 only");
  }
  detail::require_same_marginals(f, g, 256);
  const auto& m1 = f.marginals()[0];
  const auto& m2 = f.marginals()[1];

  const auto nf = detail::copula_cdf_nodes(f, grid_size);
  const auto ng = detail::copula_cdf_nodes(g, grid_size);
  std::vector<double> centers(grid_size);
  for (int i = 0; i < grid_size; ++i) {
    centers[i] = (static_cast<double>(i) + 0.5) / grid_size;
  }
  std::vector<double> x1(grid_size), x2(grid_size);
  for (int i = 0; i < grid_size; ++i) {
    x1[i] = m1.quantile(centers[i]);
    x2[i] = m2.quantile(centers[i]);
  }

  auto smooth_gap = [&](const std::function<double(double, double)>& h) {
    double gap = 0.0;
    for (int i = 0; i < grid_size; ++i) {
      for (int j = 0; j < grid_size; ++j) {
        const double mf = nf[i + 1][j + 1] - nf[i][j + 1] - nf[i + 1][j] + nf[i][j];
        const double mg = ng[i + 1][j + 1] - ng[i][j + 1] - ng[i + 1][j] + ng[i][j];
        if (mf != mg) gap += (mf - mg) * h(x1[i], x2[j]);
      }
    }
    return gap;
  };

  std::vector<BatteryEntry> out;
  out.push_back({"xy", smooth_gap([](double x, double y) { return x * y; })});
  out.push_back(
      {"min", smooth_gap([](double x, double y) { return std::min(x, y); })});
  out.push_back({"exp", smooth_gap([](double x, double y) {
                   return std::exp(x + y);
                 })});

  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    const double a = rng.uniform();
    const double b = rng.uniform();
    const double ua = m1.cdf(a);
    const double vb = m2.cdf(b);
    const double gap = f.copula_cdf(ua, vb) - g.copula_cdf(ua, vb);
    char id[48];
    std::snprintf(id, sizeof id, "ind:%.6f,%.6f", a, b);
    out.push_back({id, gap});
  }
  return out;
}

/// Deterministic sampler; identical seeds give identical draws.
inline std::vector<std::vector<double>> sample(const Coupling& c,
                                               std::uint64_t seed, int count) {
  if (count < 1) throw UsageError("sample: count must be >= 1");
  Rng rng(seed);
  const int n = c.dimension();
  std::vector<std::vector<double>> points;
  points.reserve(count);
  for (int s = 0; s < count; ++s) {
    std::vector<double> x(n);
    switch (c.kind()) {
      case CouplingKind::Independent:
        for (int i = 0; i < n; ++i) x[i] = c.marginals()[i].quantile(rng.uniform());
        break;
      case CouplingKind::Comonotone: {
        const double u = rng.uniform();
        for (int i = 0; i < n; ++i) x[i] = c.marginals()[i].quantile(u);
        break;
      }
      case CouplingKind::Countermonotone: {
        const double u = rng.uniform();
        x[0] = c.marginals()[0].quantile(u);
        x[1] = c.marginals()[1].quantile(1.0 - u);
        break;
      }
      case CouplingKind::GaussianCopula: {
        const double z1 = rng.normal();
        const double z2 = c.rho() * z1 + std::sqrt(1.0 - c.rho() * c.rho()) * rng.normal();
        x[0] = c.marginals()[0].quantile(norm_cdf(z1));
        x[1] = c.marginals()[1].quantile(norm_cdf(z2));
        break;
      }
      case CouplingKind::GridCopula: {
        const auto& masses = c.grid_masses();
        const std::size_t m = masses.size();
        double pick = rng.uniform();
        std::size_t ci = m - 1, cj = m - 1;
        for (std::size_t i = 0; i < m; ++i) {
          bool done = false;
          for (std::size_t j = 0; j < m; ++j) {
            if (pick < masses[i][j]) {
              ci = i;
              cj = j;
              done = true;
              break;
            }
            pick -= masses[i][j];
          }
          if (done) break;
        }
        const double u = (static_cast<double>(ci) + rng.uniform()) / m;
        const double v = (static_cast<double>(cj) + rng.uniform()) / m;
        x[0] = c.marginals()[0].quantile(u);
        x[1] = c.marginals()[1].quantile(v);
        break;
      }
    }
    points.push_back(std::move(x));
  }
  return points;
}

}  // namespace fairtax
