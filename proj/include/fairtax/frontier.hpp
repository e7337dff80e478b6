#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fairtax/errors.hpp"
#include "fairtax/marginals.hpp"
#include "fairtax/mechanism.hpp"
#include "fairtax/orders.hpp"

namespace fairtax {

/// The set of thresholds on the fairness-efficiency frontier:
/// {theta : 0 <= W(theta) <= 1 - F(theta)}, an interval under strong
/// regularity since W and W/(1-F) are nonincreasing. For inputs that are not
/// strongly regular the same construction runs on the positive range of W
/// and the result is flagged as uncertified rather than rejected.
struct FrontierInterval {
  double k_low = 0.0;
  double k_high = 0.0;
  double monopoly = 0.0;  // theta*, the unregulated threshold
  bool strongly_regular = false;
};

namespace detail {

/// Scans for the last sign change of fn (from >= 0 to < 0) on [0,1] and
/// bisects inside the bracket. Assumes fn(1) < 0 <= fn(0) up to the scan
/// resolution; for nonincreasing fn this is the unique crossing.
inline double falling_root(const std::function<double(double)>& fn,
                           int scan_points = 4096, double tol = 1e-10) {
  double lo = 0.0;
  double hi = 1.0;
  double prev = 0.0;
  bool bracketed = false;
  for (int i = 0; i <= scan_points; ++i) {
    const double t = static_cast<double>(i) / scan_points;
    const double v = fn(t);
    if (i > 0 && prev >= 0.0 && v < 0.0) {
      lo = static_cast<double>(i - 1) / scan_points;
      hi = t;
      bracketed = true;  // keep the last crossing
    }
    prev = v;
  }
  if (!bracketed) return prev >= 0.0 ? 1.0 : 0.0;
  return bisect(fn, lo, hi, tol);
}

}  // namespace detail

inline FrontierInterval frontier_interval(const MarginalDistribution& d) {
  FrontierInterval interval;
  interval.strongly_regular = regularity(d).strongly_regular;
  interval.monopoly = monopoly_threshold(d);
  interval.k_high =
      detail::falling_root([&](double t) { return w_function(d, t); });
  interval.k_low = detail::falling_root(
      [&](double t) { return w_function(d, t) - (1.0 - d.cdf(t)); });
  if (interval.k_low > interval.k_high) {
    throw Error("frontier_interval: degenerate interval for " + d.name);
  }
  return interval;
}

/// The excise tax implementing threshold k with binding budget balance:
/// tau = psi(k) so the firm's best response is 1{theta >= k}, and the lump
/// sum C = tau (1 - F(k)) rebates the expected take.
inline ExciseTax excise_for_threshold(const MarginalDistribution& d, double k) {
  if (k < 0.0 || k > 1.0) throw UsageError("excise_for_threshold: k in [0,1]");
  const double tau = virtual_value(d, k);
  return {tau * (1.0 - d.cdf(k)), tau};
}

struct SweepRow {
  double k = 0.0;
  double tau = 0.0;
  double lump_sum = 0.0;        // C
  double mean_rent = 0.0;       // int (1 - F - W) 1{theta >= k} dtheta
  double lowest_type_rent = 0.0;  // (1 - F(k)) psi(k)
  double consumer_price = 0.0;  // firm price plus tau = k
  double gini = 0.0;
  bool frontier = true;
};

namespace detail {

inline SweepRow sweep_row(const MarginalDistribution& d, double k, bool frontier,
                          int gini_grid) {
  SweepRow row;
  row.frontier = frontier;
  row.k = k;
  const ExciseTax tax = excise_for_threshold(d, k);
  row.tau = tax.per_unit;
  row.lump_sum = tax.lump_sum;
  row.lowest_type_rent = -w_antiderivative_tail(d, k);
  row.mean_rent =
      integrate([&](double t) { return 1.0 - d.cdf(t); }, k, 1.0, 1e-10) +
      row.lowest_type_rent;
  row.consumer_price = k;
  RentProfile profile{Coupling::independent({d}), {rent_function(d, k)}};
  row.gini = gini(lorenz(rent_distribution(profile, gini_grid), gini_grid));
  return row;
}

}  // namespace detail

/// Tabulates the frontier: `steps` thresholds spread uniformly over
/// [k_low, k_high], optionally preceded by the monopoly reference row
/// (labeled frontier = false).
inline std::vector<SweepRow> frontier_sweep(const MarginalDistribution& d,
                                            int steps,
                                            bool include_monopoly = false,
                                            int gini_grid = 2048) {
  if (steps < 2) throw UsageError("frontier_sweep: steps must be >= 2");
  const FrontierInterval interval = frontier_interval(d);
  std::vector<SweepRow> rows;
  if (include_monopoly) {
    rows.push_back(detail::sweep_row(d, interval.monopoly, false, gini_grid));
  }
  for (int i = 0; i < steps; ++i) {
    const double k = interval.k_low + (interval.k_high - interval.k_low) * i /
                                          (steps - 1);
    rows.push_back(detail::sweep_row(d, k, true, gini_grid));
  }
  return rows;
}

struct SupraPricingReport {
  bool holds = false;
  double margin = 0.0;  // k_low - theta*
  double k_low = 0.0;
  double monopoly = 0.0;
  double w_at_monopoly = 0.0;
  double survival_at_monopoly = 0.0;  // 1 - F(theta*)
};

/// Verifies that every frontier threshold rations more than the unregulated
/// monopolist: k_low > theta*, and directly that W(theta*) > 1 - F(theta*).
inline SupraPricingReport supra_pricing_check(const MarginalDistribution& d) {
  if (!regularity(d).strongly_regular) {
    throw NotStronglyRegularError("supra_pricing_check requires strong regularity: " +
                                  d.name);
  }
  const FrontierInterval interval = frontier_interval(d);
  SupraPricingReport report;
  report.k_low = interval.k_low;
  report.monopoly = interval.monopoly;
  report.margin = interval.k_low - interval.monopoly;
  report.w_at_monopoly = w_function(d, interval.monopoly);
  report.survival_at_monopoly = 1.0 - d.cdf(interval.monopoly);
  report.holds = report.margin > 0.0 &&
                 report.w_at_monopoly > report.survival_at_monopoly;
  return report;
}

}  // namespace fairtax
