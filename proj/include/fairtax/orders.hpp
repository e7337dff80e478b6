#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "fairtax/couplings.hpp"
#include "fairtax/errors.hpp"

namespace fairtax {

/// A coupling together with one rent function per market; the induced scalar
/// rent is I(theta) = sum_i I_i(theta_i).
struct RentProfile {
  Coupling coupling;
  std::vector<std::function<double(double)>> rent_functions;
};

struct RentAtom {
  double value;
  double weight;
};

/// Discrete distribution of total rents: atoms sorted by value, weights
/// summing to one.
class RentDistribution {
 public:
  explicit RentDistribution(std::vector<RentAtom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw UsageError("RentDistribution: no atoms");
    std::sort(atoms_.begin(), atoms_.end(),
              [](const RentAtom& a, const RentAtom& b) { return a.value < b.value; });
    double total = 0.0;
    for (const auto& a : atoms_) total += a.weight;
    if (std::abs(total - 1.0) > 1e-9) {
      throw UsageError("RentDistribution: weights sum to " + std::to_string(total));
    }
    // merge duplicate values
    std::vector<RentAtom> merged;
    merged.reserve(atoms_.size());
    for (const auto& a : atoms_) {
      if (!merged.empty() && merged.back().value == a.value) {
        merged.back().weight += a.weight;
      } else {
        merged.push_back(a);
      }
    }
    atoms_ = std::move(merged);
  }

  const std::vector<RentAtom>& atoms() const { return atoms_; }

  double mean() const {
    double m = 0.0;
    for (const auto& a : atoms_) m += a.value * a.weight;
    return m;
  }

 private:
  std::vector<RentAtom> atoms_;
};

/// H(p) = int_0^p R(u) du on a uniform percentile grid, R the percentile
/// curve of rents. H(1) equals the mean rent.
struct CumulativeRentCurve {
  std::vector<double> percentiles;
  std::vector<double> values;

  double mean_rent() const { return values.back(); }
};

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

/// Distribution of total rents over the coupling. For n <= 2 the coupling is
/// discretized exactly on a grid_size lattice in percentile space (cells are
/// quantile images, masses are copula rectangle sums); higher dimensions use
/// the seeded sampler.
inline RentDistribution rent_distribution(const RentProfile& rp, int grid_size,
                                          std::uint64_t seed = 0) {
  const int n = rp.coupling.dimension();
  if (static_cast<int>(rp.rent_functions.size()) != n) {
    throw DimensionMismatchError("rent profile: need one rent function per market");
  }
  std::vector<RentAtom> atoms;
  if (n == 1) {
    atoms.reserve(grid_size);
    const double w = 1.0 / grid_size;
    for (int i = 0; i < grid_size; ++i) {
      const double u = (static_cast<double>(i) + 0.5) / grid_size;
      atoms.push_back({rp.rent_functions[0](rp.coupling.marginals()[0].quantile(u)), w});
    }
  } else if (n == 2) {
    const auto nodes = detail::copula_cdf_nodes(rp.coupling, grid_size);
    std::vector<double> r1(grid_size), r2(grid_size);
    for (int i = 0; i < grid_size; ++i) {
      const double u = (static_cast<double>(i) + 0.5) / grid_size;
      r1[i] = rp.rent_functions[0](rp.coupling.marginals()[0].quantile(u));
      r2[i] = rp.rent_functions[1](rp.coupling.marginals()[1].quantile(u));
    }
    atoms.reserve(static_cast<std::size_t>(grid_size) * 8);
    double dropped = 0.0;
    for (int i = 0; i < grid_size; ++i) {
      for (int j = 0; j < grid_size; ++j) {
        const double mass =
            nodes[i + 1][j + 1] - nodes[i][j + 1] - nodes[i + 1][j] + nodes[i][j];
        if (mass > 1e-15) {
          atoms.push_back({r1[i] + r2[j], mass});
        } else {
          dropped += std::max(mass, 0.0);
        }
      }
    }
    if (!atoms.empty() && dropped > 0.0) atoms.front().weight += dropped;
  } else {
    const int count = grid_size * grid_size;
    const auto points = sample(rp.coupling, seed, count);
    const double w = 1.0 / count;
    atoms.reserve(points.size());
    for (const auto& x : points) {
      double total = 0.0;
      for (int i = 0; i < n; ++i) total += rp.rent_functions[i](x[i]);
      atoms.push_back({total, w});
    }
  }
  return RentDistribution(std::move(atoms));
}

namespace detail {

/// Evaluates H(p) of an atom distribution at arbitrary percentiles; H is
/// piecewise linear with knots at the cumulative weights.
inline std::vector<double> cumulative_curve_at(const RentDistribution& dist,
                                               const std::vector<double>& ps) {
  std::vector<double> out(ps.size());
  const auto& atoms = dist.atoms();
  std::size_t idx = 0;
  double cum_w = 0.0;
  double cum_vw = 0.0;
  for (std::size_t k = 0; k < ps.size(); ++k) {
    const double p = ps[k];
    while (idx < atoms.size() && cum_w + atoms[idx].weight <= p) {
      cum_w += atoms[idx].weight;
      cum_vw += atoms[idx].value * atoms[idx].weight;
      ++idx;
    }
    double h = cum_vw;
    if (idx < atoms.size() && p > cum_w) h += atoms[idx].value * (p - cum_w);
    out[k] = h;
  }
  return out;
}

}  // namespace detail

inline CumulativeRentCurve cumulative_rents(const RentDistribution& dist,
                                            int grid_size) {
  CumulativeRentCurve curve;
  curve.percentiles.resize(grid_size + 1);
  for (int i = 0; i <= grid_size; ++i) {
    curve.percentiles[i] = static_cast<double>(i) / grid_size;
  }
  curve.values = detail::cumulative_curve_at(dist, curve.percentiles);
  return curve;
}

inline CumulativeRentCurve cumulative_rents(const RentProfile& rp, int grid_size) {
  return cumulative_rents(rent_distribution(rp, grid_size), grid_size);
}

// ---------------------------------------------------------------------------
// Stochastic order tests
// ---------------------------------------------------------------------------

/// Second-order stochastic dominance of a over b: checks
/// int_{-inf}^t CDF_a <= int_{-inf}^t CDF_b on the merged atom grid, where
/// both integrated CDFs are piecewise linear, so the knots decide. The margin
/// is the worst signed slack; ties count as dominance.
inline OrderVerdict sosd_compare(const RentDistribution& a,
                                 const RentDistribution& b) {
  const auto& xa = a.atoms();
  const auto& xb = b.atoms();
  OrderVerdict verdict;

  // An atom at -inf makes the integrated CDF +inf everywhere, so such a
  // distribution is dominated by anything with finite support and two of
  // them tie. (They arise from rules allocating where the tail integral of
  // W diverges.)
  const bool a_divergent = !std::isfinite(xa.front().value);
  const bool b_divergent = !std::isfinite(xb.front().value);
  if (a_divergent || b_divergent) {
    if (a_divergent && b_divergent) {
      verdict.dominates = true;
      verdict.margin = 0.0;
    } else if (a_divergent) {
      verdict.dominates = false;
      verdict.margin = -std::numeric_limits<double>::infinity();
      verdict.witness = {xa.front().value};
    } else {
      verdict.dominates = true;
      verdict.margin = std::numeric_limits<double>::infinity();
    }
    return verdict;
  }

  verdict.margin = std::numeric_limits<double>::infinity();
  bool all_ge = true;
  std::size_t ia = 0, ib = 0;
  double wa = 0.0, va = 0.0, wb = 0.0, vb = 0.0;  // cumulative weight / value*weight
  while (ia < xa.size() || ib < xb.size()) {
    double t;
    if (ib >= xb.size() || (ia < xa.size() && xa[ia].value <= xb[ib].value)) {
      t = xa[ia].value;
    } else {
      t = xb[ib].value;
    }
    while (ia < xa.size() && xa[ia].value <= t) {
      wa += xa[ia].weight;
      va += xa[ia].value * xa[ia].weight;
      ++ia;
    }
    while (ib < xb.size() && xb[ib].value <= t) {
      wb += xb[ib].weight;
      vb += xb[ib].value * xb[ib].weight;
      ++ib;
    }
    const double int_a = t * wa - va;  // int_{-inf}^t CDF_a
    const double int_b = t * wb - vb;
    const double gap = int_b - int_a;
    if (gap < verdict.margin) {
      verdict.margin = gap;
      verdict.witness = {t};
    }
    if (!(gap >= -1e-9)) all_ge = false;
  }
  verdict.dominates = all_ge;
  if (verdict.dominates) verdict.witness.clear();
  return verdict;
}

/// The cumulative-rent route to the same order: a dominates b iff
/// H_a(p) >= H_b(p) on a common percentile grid.
inline OrderVerdict sosd_via_H(const CumulativeRentCurve& a,
                               const CumulativeRentCurve& b) {
  if (a.percentiles.size() != b.percentiles.size()) {
    throw GridMismatchError("sosd_via_H: percentile grids differ in size");
  }
  for (std::size_t i = 0; i < a.percentiles.size(); ++i) {
    if (a.percentiles[i] != b.percentiles[i]) {
      throw GridMismatchError("sosd_via_H: percentile grids differ");
    }
  }
  OrderVerdict verdict;
  verdict.margin = std::numeric_limits<double>::infinity();
  bool all_ge = true;
  for (std::size_t i = 0; i < a.percentiles.size(); ++i) {
    double gap = a.values[i] - b.values[i];
    if (std::isnan(gap)) gap = 0.0;  // both curves divergent: tie
    if (gap < verdict.margin) {
      verdict.margin = gap;
      verdict.witness = {a.percentiles[i]};
    }
    if (!(gap >= -1e-9)) all_ge = false;
  }
  verdict.dominates = all_ge;
  if (verdict.dominates) verdict.witness.clear();
  return verdict;
}

// ---------------------------------------------------------------------------
// Lorenz curves
// ---------------------------------------------------------------------------

struct LorenzCurve {
  std::vector<double> percentiles;
  std::vector<double> values;  // L(p) = H(p) / H(1)
};

inline LorenzCurve lorenz(const RentDistribution& dist, int grid_size = 2048) {
  const double m = dist.mean();
  if (!(m > 0.0)) {
    throw ZeroMeanError("lorenz: mean rent must be positive, got " +
                        std::to_string(m));
  }
  const auto h = cumulative_rents(dist, grid_size);
  LorenzCurve curve;
  curve.percentiles = h.percentiles;
  curve.values.resize(h.values.size());
  for (std::size_t i = 0; i < h.values.size(); ++i) {
    curve.values[i] = h.values[i] / h.values.back();
  }
  return curve;
}

/// Gini coefficient from the discrete Lorenz curve by trapezoid rule.
inline double gini(const LorenzCurve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.percentiles.size(); ++i) {
    area += 0.5 * (curve.values[i] + curve.values[i - 1]) *
            (curve.percentiles[i] - curve.percentiles[i - 1]);
  }
  return 1.0 - 2.0 * area;
}

}  // namespace fairtax
