#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fairtax/couplings.hpp"
#include "fairtax/errors.hpp"
#include "fairtax/frontier.hpp"
#include "fairtax/mechanism.hpp"
#include "fairtax/numerics.hpp"

namespace fairtax {

// The comparisons below recompute integrated CDFs from raw (value, weight)
// atoms, independent of the orders module, so the two can cross-check each
// other.

namespace oracle_detail {

struct GapStats {
  double min_gap = 0.0;  // min over t of int CDF_b - int CDF_a
  double max_gap = 0.0;
};

inline GapStats integrated_cdf_gaps(std::vector<std::pair<double, double>> a,
                                    std::vector<std::pair<double, double>> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const bool a_divergent = !std::isfinite(a.front().first);
  const bool b_divergent = !std::isfinite(b.front().first);
  if (a_divergent || b_divergent) {
    if (a_divergent && b_divergent) return {0.0, 0.0};
    const double inf = std::numeric_limits<double>::infinity();
    return a_divergent ? GapStats{-inf, -inf} : GapStats{inf, inf};
  }
  std::vector<double> ts;
  ts.reserve(a.size() + b.size());
  for (const auto& [v, w] : a) ts.push_back(v);
  for (const auto& [v, w] : b) ts.push_back(v);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

  GapStats stats{std::numeric_limits<double>::infinity(),
                 -std::numeric_limits<double>::infinity()};
  std::size_t ia = 0, ib = 0;
  double wa = 0.0, va = 0.0, wb = 0.0, vb = 0.0;
  for (double t : ts) {
    while (ia < a.size() && a[ia].first <= t) {
      wa += a[ia].second;
      va += a[ia].first * a[ia].second;
      ++ia;
    }
    while (ib < b.size() && b[ib].first <= t) {
      wb += b[ib].second;
      vb += b[ib].first * b[ib].second;
      ++ib;
    }
    const double gap = (t * wb - vb) - (t * wa - va);
    stats.min_gap = std::min(stats.min_gap, gap);
    stats.max_gap = std::max(stats.max_gap, gap);
  }
  return stats;
}

/// Weak dominance of a over b with tolerance 1e-9; ties count.
inline bool weakly_dominates(const GapStats& ab) { return ab.min_gap >= -1e-9; }

/// Strict dominance additionally needs a gap above 1e-6 somewhere.
inline bool strictly_dominates(const GapStats& ab) {
  return weakly_dominates(ab) && ab.max_gap > 1e-6;
}

}  // namespace oracle_detail

// ---------------------------------------------------------------------------
// Discrete instances
// ---------------------------------------------------------------------------

/// A desk-scale stand-in for the quantifier over all increasing allocations:
/// types at cell midpoints with pdf-proportional weights, candidate rules
/// given by every grid threshold plus seeded random monotone step functions
/// with at most 4 steps (thresholds are the extreme points of the monotone
/// class, so few-step rules are the natural stress family).
struct DiscreteInstance {
  int m = 0;
  std::uint64_t seed = 0;
  MarginalDistribution marginal;
  std::vector<double> types;
  std::vector<double> weights;
  std::vector<AllocationRule> candidates;
  int threshold_count = 0;  // candidates[0 .. threshold_count) are thresholds j/m

  static DiscreteInstance build(const MarginalDistribution& d, int m,
                                int random_count, std::uint64_t seed) {
    if (m < 2) throw UsageError("DiscreteInstance: m must be >= 2");
    DiscreteInstance inst;
    inst.m = m;
    inst.seed = seed;
    inst.marginal = d;
    inst.types.resize(m);
    inst.weights.resize(m);
    double total = 0.0;
    for (int j = 0; j < m; ++j) {
      inst.types[j] = (static_cast<double>(j) + 0.5) / m;
      inst.weights[j] = d.pdf(inst.types[j]);
      total += inst.weights[j];
    }
    for (double& w : inst.weights) w /= total;

    for (int j = 0; j <= m; ++j) {
      inst.candidates.push_back(
          AllocationRule::threshold(static_cast<double>(j) / m));
    }
    inst.threshold_count = m + 1;

    Rng rng(seed);
    for (int r = 0; r < random_count; ++r) {
      const int steps = 1 + static_cast<int>(rng.below(4));
      std::vector<double> breaks{0.0};
      while (static_cast<int>(breaks.size()) < steps) {
        const double b =
            static_cast<double>(1 + rng.below(static_cast<std::uint64_t>(m) - 1)) / m;
        if (std::find(breaks.begin(), breaks.end(), b) == breaks.end()) {
          breaks.push_back(b);
        }
      }
      std::sort(breaks.begin(), breaks.end());
      std::vector<double> vals(breaks.size());
      for (double& v : vals) v = rng.uniform();
      std::sort(vals.begin(), vals.end());
      inst.candidates.emplace_back(std::move(breaks), std::move(vals));
    }
    return inst;
  }

  /// Rent atoms of a candidate on the discrete type grid.
  std::vector<std::pair<double, double>> rent_atoms(std::size_t candidate) const {
    const auto rent = rent_function_general(marginal, candidates[candidate]);
    std::vector<std::pair<double, double>> atoms(types.size());
    for (std::size_t j = 0; j < types.size(); ++j) {
      atoms[j] = {rent(types[j]), weights[j]};
    }
    return atoms;
  }
};

// ---------------------------------------------------------------------------
// Dominance scan
// ---------------------------------------------------------------------------

struct DominanceScanReport {
  int m = 0;
  int candidate_count = 0;
  int threshold_count = 0;
  std::uint64_t seed = 0;

  double k_low = 0.0, k_high = 0.0, monopoly = 0.0;  // analytic values
  int frontier_low_index = 0, frontier_high_index = 0, monopoly_index = 0;
  double snap_low = 0.0, snap_high = 0.0, snap_monopoly = 0.0;

  int strict_domination_count = 0;
  bool frontier_undominated = false;            // (a)
  bool off_frontier_all_dominated = false;      // (b), full form
  bool monopoly_dominated_by_frontier = false;  // (b), monopoly instance
  bool undominated_all_thresholds = false;      // (c)

  std::vector<std::array<int, 2>> frontier_dominations;  // (a) violations
  std::vector<int> undominated_off_frontier;             // (b) gaps
  std::vector<int> undominated_nonthresholds;            // (c) violations
};

/// Pairwise SOSD scan over all candidates. Grid thresholds inside the
/// snapped frontier interval should be undominated; every other threshold
/// should be dominated by one of them; and every candidate that survives
/// undominated should be a threshold rule (the extreme points win). A
/// non-threshold rule may well dominate a worse rule, so the converse is
/// not checked.
inline DominanceScanReport dominance_scan(const DiscreteInstance& inst) {
  DominanceScanReport report;
  report.m = inst.m;
  report.candidate_count = static_cast<int>(inst.candidates.size());
  report.threshold_count = inst.threshold_count;
  report.seed = inst.seed;

  const FrontierInterval interval = frontier_interval(inst.marginal);
  report.k_low = interval.k_low;
  report.k_high = interval.k_high;
  report.monopoly = interval.monopoly;
  auto snap = [&](double k) {
    return static_cast<int>(std::lround(k * inst.m));
  };
  report.frontier_low_index = snap(interval.k_low);
  report.frontier_high_index = snap(interval.k_high);
  report.monopoly_index = snap(interval.monopoly);
  report.snap_low =
      std::abs(interval.k_low - static_cast<double>(report.frontier_low_index) / inst.m);
  report.snap_high = std::abs(interval.k_high -
                              static_cast<double>(report.frontier_high_index) / inst.m);
  report.snap_monopoly =
      std::abs(interval.monopoly -
               static_cast<double>(report.monopoly_index) / inst.m);

  const std::size_t n = inst.candidates.size();
  std::vector<std::vector<std::pair<double, double>>> atoms(n);
  for (std::size_t i = 0; i < n; ++i) atoms[i] = inst.rent_atoms(i);

  std::vector<std::vector<bool>> strict(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto stats = oracle_detail::integrated_cdf_gaps(atoms[i], atoms[j]);
      strict[i][j] = oracle_detail::strictly_dominates(stats);
      if (strict[i][j]) ++report.strict_domination_count;
    }
  }

  auto is_frontier_threshold = [&](std::size_t idx) {
    return static_cast<int>(idx) >= report.frontier_low_index &&
           static_cast<int>(idx) <= report.frontier_high_index;
  };

  report.frontier_undominated = true;
  for (std::size_t j = 0; j < n; ++j) {
    if (static_cast<int>(j) >= inst.threshold_count || !is_frontier_threshold(j)) {
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (strict[i][j]) {
        report.frontier_undominated = false;
        report.frontier_dominations.push_back(
            {static_cast<int>(i), static_cast<int>(j)});
      }
    }
  }

  report.off_frontier_all_dominated = true;
  for (int j = 0; j < inst.threshold_count; ++j) {
    if (is_frontier_threshold(j)) continue;
    bool dominated = false;
    for (int i = report.frontier_low_index;
         i <= report.frontier_high_index && !dominated; ++i) {
      dominated = strict[i][j];
    }
    if (!dominated) {
      report.off_frontier_all_dominated = false;
      report.undominated_off_frontier.push_back(j);
    }
  }

  report.monopoly_dominated_by_frontier = false;
  for (int i = report.frontier_low_index; i <= report.frontier_high_index; ++i) {
    if (strict[i][report.monopoly_index]) {
      report.monopoly_dominated_by_frontier = true;
      break;
    }
  }

  report.undominated_all_thresholds = true;
  for (std::size_t j = inst.threshold_count; j < n; ++j) {
    bool dominated = false;
    for (std::size_t i = 0; i < n && !dominated; ++i) {
      dominated = i != j && strict[i][j];
    }
    if (!dominated) {
      report.undominated_all_thresholds = false;
      report.undominated_nonthresholds.push_back(static_cast<int>(j));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Dimension additivity
// ---------------------------------------------------------------------------

struct AdditivityCase {
  std::array<double, 2> profile_a;  // thresholds (market 1, market 2)
  std::array<double, 2> profile_b;
  bool market1_dominates = false;
  bool market2_dominates = false;
  bool implied = false;  // both per-market verdicts dominate
  bool joint_dominates = false;
  bool consistent = false;  // implied => joint
};

/// Verifies, by explicit convolution of atom lists under the independent
/// coupling, that per-market SOSD verdicts imply the joint verdict for each
/// supplied pair of threshold profiles.
inline std::vector<AdditivityCase> additivity_scan(
    const MarginalDistribution& d1, const MarginalDistribution& d2,
    const std::vector<std::array<double, 4>>& k_pairs, int grid = 256) {
  auto market_atoms = [&](const MarginalDistribution& d, double k) {
    const auto rent = rent_function(d, k);
    std::vector<std::pair<double, double>> atoms(grid);
    for (int i = 0; i < grid; ++i) {
      const double u = (static_cast<double>(i) + 0.5) / grid;
      atoms[i] = {rent(d.quantile(u)), 1.0 / grid};
    }
    return atoms;
  };
  auto convolve = [](const std::vector<std::pair<double, double>>& a,
                     const std::vector<std::pair<double, double>>& b) {
    std::vector<std::pair<double, double>> joint;
    joint.reserve(a.size() * b.size());
    for (const auto& [va, wa] : a) {
      for (const auto& [vb, wb] : b) joint.emplace_back(va + vb, wa * wb);
    }
    return joint;
  };

  std::vector<AdditivityCase> out;
  for (const auto& ks : k_pairs) {
    AdditivityCase row;
    row.profile_a = {ks[0], ks[1]};
    row.profile_b = {ks[2], ks[3]};
    const auto a1 = market_atoms(d1, ks[0]);
    const auto a2 = market_atoms(d2, ks[1]);
    const auto b1 = market_atoms(d1, ks[2]);
    const auto b2 = market_atoms(d2, ks[3]);
    row.market1_dominates = oracle_detail::weakly_dominates(
        oracle_detail::integrated_cdf_gaps(a1, b1));
    row.market2_dominates = oracle_detail::weakly_dominates(
        oracle_detail::integrated_cdf_gaps(a2, b2));
    row.implied = row.market1_dominates && row.market2_dominates;
    row.joint_dominates = oracle_detail::weakly_dominates(
        oracle_detail::integrated_cdf_gaps(convolve(a1, a2), convolve(b1, b2)));
    row.consistent = !row.implied || row.joint_dominates;
    out.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fairness scan over coupling families
// ---------------------------------------------------------------------------

struct FairnessPair {
  std::string first, second;
  bool sm_dominates = false;  // first >= second pointwise in the joint CDF
  double sm_margin = 0.0;
  bool applicable = false;          // sm_dominates
  bool fairness_direction_ok = false;  // second's rents SOSD-dominate first's
};

struct FairnessScanReport {
  std::vector<FairnessPair> pairs;
  int applicable_count = 0;
  bool theorem_direction_holds = false;  // all applicable pairs pass
  bool antitone_maximally_fair = false;  // countermonotone rents dominate all
};

/// For every ordered coupling pair where the joint-CDF test certifies the
/// supermodular order, asserts that the dominated coupling's rent
/// distribution is the fairer one, and checks that the antitone coupling's
/// rent distribution dominates every family member's. Thresholds fix the
/// per-market mechanisms.
inline FairnessScanReport fairness_scan(const MarginalDistribution& m1,
                                        const MarginalDistribution& m2,
                                        const std::vector<Coupling>& family,
                                        std::array<double, 2> thresholds,
                                        int grid = 256) {
  if (family.size() < 2) throw UsageError("fairness_scan: need >= 2 couplings");
  for (const auto& c : family) {
    if (c.dimension() != 2) throw UnsupportedError("fairness_scan: n = 2 only");
    detail::require_same_marginals(family.front(), c, 128);
  }

  const auto rent1 = rent_function(m1, thresholds[0]);
  const auto rent2 = rent_function(m2, thresholds[1]);
  std::vector<double> r1(grid), r2(grid);
  for (int i = 0; i < grid; ++i) {
    const double u = (static_cast<double>(i) + 0.5) / grid;
    r1[i] = rent1(m1.quantile(u));
    r2[i] = rent2(m2.quantile(u));
  }

  const std::size_t nfam = family.size();
  std::vector<std::vector<std::vector<double>>> nodes(nfam);
  std::vector<std::vector<std::pair<double, double>>> atoms(nfam);
  for (std::size_t c = 0; c < nfam; ++c) {
    nodes[c] = detail::copula_cdf_nodes(family[c], grid);
    atoms[c].reserve(static_cast<std::size_t>(grid) * 8);
    for (int i = 0; i < grid; ++i) {
      for (int j = 0; j < grid; ++j) {
        const double mass = nodes[c][i + 1][j + 1] - nodes[c][i][j + 1] -
                            nodes[c][i + 1][j] + nodes[c][i][j];
        if (mass > 1e-15) atoms[c].emplace_back(r1[i] + r2[j], mass);
      }
    }
    double total = 0.0;
    for (auto& [v, w] : atoms[c]) total += w;
    for (auto& [v, w] : atoms[c]) w /= total;  // absorb dropped zero cells
  }

  FairnessScanReport report;
  report.theorem_direction_holds = true;
  for (std::size_t f = 0; f < nfam; ++f) {
    for (std::size_t g = 0; g < nfam; ++g) {
      if (f == g) continue;
      FairnessPair pair;
      pair.first = family[f].describe();
      pair.second = family[g].describe();
      double margin = std::numeric_limits<double>::infinity();
      for (int i = 0; i <= grid; ++i) {
        for (int j = 0; j <= grid; ++j) {
          margin = std::min(margin, nodes[f][i][j] - nodes[g][i][j]);
        }
      }
      pair.sm_margin = margin;
      pair.sm_dominates = margin >= -1e-9;
      pair.applicable = pair.sm_dominates;
      if (pair.applicable) {
        ++report.applicable_count;
        pair.fairness_direction_ok = oracle_detail::weakly_dominates(
            oracle_detail::integrated_cdf_gaps(atoms[g], atoms[f]));
        if (!pair.fairness_direction_ok) report.theorem_direction_holds = false;
      }
      report.pairs.push_back(std::move(pair));
    }
  }

  report.antitone_maximally_fair = true;
  std::size_t antitone = nfam;
  for (std::size_t c = 0; c < nfam; ++c) {
    if (family[c].kind() == CouplingKind::Countermonotone) antitone = c;
  }
  if (antitone == nfam) {
    report.antitone_maximally_fair = false;  // no antitone member supplied
  } else {
    for (std::size_t c = 0; c < nfam; ++c) {
      if (c == antitone) continue;
      if (!oracle_detail::weakly_dominates(
              oracle_detail::integrated_cdf_gaps(atoms[antitone], atoms[c]))) {
        report.antitone_maximally_fair = false;
      }
    }
  }
  return report;
}

}  // namespace fairtax
