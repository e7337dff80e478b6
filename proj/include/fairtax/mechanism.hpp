#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fairtax/errors.hpp"
#include "fairtax/marginals.hpp"
#include "fairtax/numerics.hpp"

namespace fairtax {

// ---------------------------------------------------------------------------
// Allocation rules
// ---------------------------------------------------------------------------

/// A nondecreasing right-continuous step function [0,1] -> [0,1].
/// breakpoints are segment start points (the first is always 0); values[j]
/// holds on [breakpoints[j], breakpoints[j+1]).
class AllocationRule {
 public:
  AllocationRule(std::vector<double> breakpoints, std::vector<double> values)
      : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
    if (breakpoints_.empty() || breakpoints_.size() != values_.size()) {
      throw UsageError("AllocationRule: one value per segment required");
    }
    if (breakpoints_.front() != 0.0) {
      throw UsageError("AllocationRule: first breakpoint must be 0");
    }
    for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
      if (breakpoints_[i] < 0.0 || breakpoints_[i] > 1.0 || values_[i] < -1e-12 ||
          values_[i] > 1.0 + 1e-12) {
        throw UsageError("AllocationRule: breakpoints and values must lie in [0,1]");
      }
      if (i > 0 && !(breakpoints_[i] > breakpoints_[i - 1])) {
        throw UsageError("AllocationRule: breakpoints must be strictly increasing");
      }
      if (i > 0 && values_[i] < values_[i - 1] - 1e-12) {
        throw NotMonotoneError("AllocationRule: values must be nondecreasing");
      }
      values_[i] = std::clamp(values_[i], 0.0, 1.0);
    }
  }

  /// The threshold rule 1{theta >= k}.
  static AllocationRule threshold(double k) {
    if (k < 0.0 || k > 1.0) throw UsageError("threshold must lie in [0,1]");
    if (k == 0.0) return AllocationRule({0.0}, {1.0});
    return AllocationRule({0.0, k}, {0.0, 1.0});
  }

  static AllocationRule constant(double q) { return AllocationRule({0.0}, {q}); }

  /// Staircase sampling of a nondecreasing function on `segments` equal
  /// cells, each taking the function's value at its left endpoint.
  static AllocationRule from_function(const std::function<double(double)>& f,
                                      int segments) {
    if (segments < 1) throw UsageError("from_function: segments must be >= 1");
    std::vector<double> bp(segments), vals(segments);
    for (int j = 0; j < segments; ++j) {
      bp[j] = static_cast<double>(j) / segments;
      vals[j] = f(bp[j]);
    }
    return AllocationRule(std::move(bp), std::move(vals));
  }

  double operator()(double theta) const {
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), theta);
    const std::size_t idx = static_cast<std::size_t>(it - breakpoints_.begin());
    return values_[idx == 0 ? 0 : idx - 1];
  }

  /// int_0^theta q(s) ds, exact for the step function.
  double integral_to(double theta) const {
    theta = std::clamp(theta, 0.0, 1.0);
    double acc = 0.0;
    for (std::size_t j = 0; j < breakpoints_.size(); ++j) {
      const double lo = breakpoints_[j];
      if (lo >= theta) break;
      const double hi = j + 1 < breakpoints_.size() ? breakpoints_[j + 1] : 1.0;
      acc += values_[j] * (std::min(hi, theta) - lo);
    }
    return acc;
  }

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t segments() const { return values_.size(); }
  double segment_end(std::size_t j) const {
    return j + 1 < breakpoints_.size() ? breakpoints_[j + 1] : 1.0;
  }

  /// True for rules of the form 1{theta >= k}.
  bool is_threshold() const {
    if (values_.size() == 1) return values_[0] == 1.0;
    return values_.size() == 2 && values_[0] == 0.0 && values_[1] == 1.0;
  }

  double threshold_point() const {
    if (!is_threshold()) throw Error("allocation rule is not a threshold rule");
    return values_.size() == 1 ? 0.0 : breakpoints_[1];
  }

  bool strictly_increasing() const {
    for (std::size_t i = 1; i < values_.size(); ++i) {
      if (!(values_[i] > values_[i - 1])) return false;
    }
    return values_.size() > 1;
  }

 private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Tax policies
// ---------------------------------------------------------------------------

/// Affine tax schedule sigma(q) = C - tau q. tau > 0 taxes each unit, the
/// lump sum C accrues to everyone including non-buyers.
struct ExciseTax {
  double lump_sum = 0.0;  // C
  double per_unit = 0.0;  // tau
  double operator()(double q) const { return lump_sum - per_unit * q; }
};

/// Per-market tax schedule sigma_i(q): either an excise tax or a tabulated
/// (quantity, value) schedule with monotone-cubic interpolation. Defined on
/// all of [0, 1].
class TaxPolicy {
 public:
  static TaxPolicy excise(ExciseTax t) { return TaxPolicy(t); }

  static TaxPolicy tabulated(std::vector<double> quantities,
                             std::vector<double> sigma_values) {
    if (quantities.size() < 2 || quantities.front() != 0.0 || quantities.back() != 1.0) {
      throw UsageError("tax schedule must be tabulated from q = 0 to q = 1");
    }
    TaxPolicy p(std::make_shared<CubicHermite>(std::move(quantities),
                                               std::move(sigma_values)));
    return p;
  }

  double operator()(double q) const {
    if (is_excise()) return std::get<ExciseTax>(repr_)(q);
    return (*std::get<std::shared_ptr<CubicHermite>>(repr_))(q);
  }

  bool is_excise() const { return std::holds_alternative<ExciseTax>(repr_); }

  const ExciseTax& as_excise() const { return std::get<ExciseTax>(repr_); }

  /// Quantity knots where the schedule is pinned; {0, 1} for excise taxes.
  std::vector<double> knots() const {
    if (is_excise()) return {0.0, 1.0};
    return std::get<std::shared_ptr<CubicHermite>>(repr_)->knots_x();
  }

  /// The same policy shifted by a constant transfer.
  TaxPolicy shifted(double delta) const {
    if (delta == 0.0) return *this;
    if (is_excise()) {
      ExciseTax t = as_excise();
      t.lump_sum += delta;
      return TaxPolicy(t);
    }
    const auto& interp = *std::get<std::shared_ptr<CubicHermite>>(repr_);
    std::vector<double> y = interp.knots_y();
    for (double& v : y) v += delta;
    return TaxPolicy(std::make_shared<CubicHermite>(interp.knots_x(), std::move(y)));
  }

 private:
  explicit TaxPolicy(ExciseTax t) : repr_(t) {}
  explicit TaxPolicy(std::shared_ptr<CubicHermite> interp)
      : repr_(std::move(interp)) {}

  std::variant<ExciseTax, std::shared_ptr<CubicHermite>> repr_;
};

struct MarketMechanism {
  AllocationRule allocation;
  TaxPolicy tax;
  MarginalDistribution marginal;
};

// ---------------------------------------------------------------------------
// Firm best responses
// ---------------------------------------------------------------------------

/// The firm's optimal allocation under an excise tax: the threshold rule
/// 1{psi(theta) >= tau}, located by bisection to 1e-10. Requires Myerson
/// regularity.
inline AllocationRule best_response_excise(const MarginalDistribution& d,
                                           const ExciseTax& t) {
  detail::require_myerson_regular(d);
  return AllocationRule::threshold(virtual_value_inverse(d, t.per_unit));
}

/// Pointwise firm best response to an arbitrary tax policy: for each theta on
/// a uniform grid, maximizes psi(theta) Q + sigma(Q) - sigma(0) over Q. The
/// candidate set is the policy's knots plus a uniform refinement, and ties
/// resolve to the largest maximizer (matching right-continuity of step
/// rules). Returns the chosen Q per grid point.
inline std::vector<double> best_response_check(const MarginalDistribution& d,
                                               const TaxPolicy& tax,
                                               int theta_grid = 512,
                                               int q_grid = 256) {
  std::vector<double> candidates = tax.knots();
  for (int i = 0; i <= q_grid; ++i) {
    candidates.push_back(static_cast<double>(i) / q_grid);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  std::vector<double> sigma(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) sigma[i] = tax(candidates[i]);

  std::vector<double> response(theta_grid);
  for (int a = 0; a < theta_grid; ++a) {
    const double theta = static_cast<double>(a) / (theta_grid - 1);
    const double psi = virtual_value(d, theta);
    double best = -std::numeric_limits<double>::infinity();
    double best_q = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      // psi * 0 is 0 by convention even when psi = -inf (no purchase, no
      // virtual surplus), so the bottom type under a vanishing density still
      // best-responds with Q = 0 instead of propagating NaN.
      const double objective =
          (candidates[i] == 0.0 ? 0.0 : psi * candidates[i]) + sigma[i];
      if (objective >= best - 1e-13) {
        if (objective > best) best = objective;
        best_q = candidates[i];  // largest near-maximizer (right-continuity)
      }
    }
    response[a] = best_q;
  }
  return response;
}

// ---------------------------------------------------------------------------
// Taxes implementing a given allocation
// ---------------------------------------------------------------------------

/// Constructs a tax policy rendering the nondecreasing rule q optimal for
/// the firm: sigma(Q) = int_0^Q [(1-F)/f - theta](q^{-1}(s)) ds with
/// sigma(0) = 0. For a step rule the generalized inverse makes the integrand
/// piecewise constant in s, so the integral is evaluated in closed form (the
/// limit of the strictly-increasing approximation). Threshold rules come
/// back as the excise tax with tau = psi(k); other rules are tabulated with
/// knots pinched around each kink so the interpolant reproduces the
/// piecewise-linear schedule to ~1e-6.
inline TaxPolicy tax_for_allocation(const MarginalDistribution& d,
                                    const AllocationRule& q) {
  if (q.is_threshold()) {
    return TaxPolicy::excise(
        {0.0, virtual_value(d, q.threshold_point())});
  }

  // Knots of the piecewise-linear schedule: the attained values, with the
  // integrand -psi(q^{-1}(s)) constant between consecutive ones.
  struct Piece {
    double upto;   // s-interval end
    double slope;  // d sigma / d s on the interval
  };
  std::vector<Piece> pieces;
  const auto& values = q.values();
  const auto& bp = q.breakpoints();
  if (values.front() > 0.0) {
    // s below the lowest attained value: generalized inverse is 0.
    pieces.push_back({values.front(), -virtual_value(d, 0.0)});
  }
  for (std::size_t j = 1; j < values.size(); ++j) {
    if (values[j] > values[j - 1]) {
      pieces.push_back({values[j], -virtual_value(d, bp[j])});
    }
  }
  if (pieces.empty() || pieces.back().upto < 1.0) {
    // Quantities above the attained range are never chosen; a slope bias of
    // 1e-8 below -psi(1) keeps the top type strictly at its target instead
    // of indifferent across the unattained range.
    pieces.push_back({1.0, -virtual_value(d, 1.0) - 1e-8});
  }

  const double pinch = 1e-6;
  std::vector<double> knots{0.0};
  double s_prev = 0.0;
  double sigma_prev = 0.0;
  std::vector<double> sig{0.0};
  auto push_knot = [&](double s, double slope) {
    if (s <= knots.back()) return;
    sig.push_back(sigma_prev + slope * (s - s_prev));
    knots.push_back(s);
    sigma_prev = sig.back();
    s_prev = s;
  };
  for (std::size_t p = 0; p < pieces.size(); ++p) {
    const double end = pieces[p].upto;
    const double slope = pieces[p].slope;
    if (end - pinch > knots.back()) push_knot(end - pinch, slope);
    push_knot(end, slope);
    if (p + 1 < pieces.size() && end + pinch < pieces[p + 1].upto) {
      push_knot(end + pinch, pieces[p + 1].slope);
    }
  }
  if (knots.back() < 1.0) push_knot(1.0, pieces.back().slope);
  return TaxPolicy::tabulated(std::move(knots), std::move(sig));
}

// ---------------------------------------------------------------------------
// Revenue and budgets
// ---------------------------------------------------------------------------

/// Expected tax take E_F[sigma(q(theta))], exact over the step rule's
/// segments.
inline double expected_tax(const MarginalDistribution& d, const AllocationRule& q,
                           const TaxPolicy& sigma) {
  double acc = 0.0;
  for (std::size_t j = 0; j < q.segments(); ++j) {
    const double mass = d.cdf(q.segment_end(j)) - d.cdf(q.breakpoints()[j]);
    acc += sigma(q.values()[j]) * mass;
  }
  return acc;
}

/// Firm revenue: Myersonian revenue plus the policy distortion,
/// R = int q psi f dtheta + int (sigma(q) - sigma(0)) f dtheta.
inline double revenue(const MarginalDistribution& d, const AllocationRule& q,
                      const TaxPolicy& sigma) {
  double myersonian = 0.0;
  for (std::size_t j = 0; j < q.segments(); ++j) {
    const double v = q.values()[j];
    if (v == 0.0) continue;
    const double lo = q.breakpoints()[j];
    const double hi = q.segment_end(j);
    // psi f = theta f - (1 - F), smooth on the segment interior.
    myersonian += v * integrate(
                          [&](double t) {
                            return t * d.pdf(t) - (1.0 - d.cdf(t));
                          },
                          lo, hi, 1e-10);
  }
  const double distortion = expected_tax(d, q, sigma) - sigma(0.0);
  return myersonian + distortion;
}

struct BudgetNormalization {
  std::vector<TaxPolicy> policies;
  std::vector<double> pre_expectations;  // E_{F_i}[sigma_i(q_i)] before shifting
  bool feasible = false;                 // joint expected tax revenue <= 0
};

/// Rearranges lump sums so every market but the last is exactly demeaned and
/// the last absorbs the total, preserving the joint schedule. `feasible`
/// flags whether the joint expectation was budget balanced to begin with.
inline BudgetNormalization budget_normalize(
    const std::vector<TaxPolicy>& policies,
    const std::vector<MarketMechanism>& mechanisms) {
  if (policies.size() != mechanisms.size() || policies.empty()) {
    throw UsageError("budget_normalize: one mechanism per policy required");
  }
  BudgetNormalization result;
  double total = 0.0;
  for (std::size_t i = 0; i < policies.size(); ++i) {
    const double e =
        expected_tax(mechanisms[i].marginal, mechanisms[i].allocation, policies[i]);
    result.pre_expectations.push_back(e);
    total += e;
  }
  result.feasible = total <= 1e-9;
  double carried = 0.0;
  for (std::size_t i = 0; i < policies.size(); ++i) {
    if (i + 1 < policies.size()) {
      result.policies.push_back(policies[i].shifted(-result.pre_expectations[i]));
      carried += result.pre_expectations[i];
    } else {
      result.policies.push_back(policies[i].shifted(carried));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Information rents
// ---------------------------------------------------------------------------

/// Rent function of a threshold mechanism at threshold k under binding
/// budget-balanced financing: I(theta) = max(theta - k, 0) + (1-F(k)) psi(k).
inline std::function<double(double)> rent_function(const MarginalDistribution& d,
                                                   double k) {
  if (k < 0.0 || k > 1.0) throw UsageError("rent_function: k must lie in [0,1]");
  const double lump = -w_antiderivative_tail(d, k);
  return [k, lump](double theta) { return std::max(theta - k, 0.0) + lump; };
}

/// Rent function of an arbitrary nondecreasing rule:
/// I(theta) = int_0^theta q - int_0^1 W q, with the W integral evaluated
/// through the exact tail antiderivative per segment.
inline std::function<double(double)> rent_function_general(
    const MarginalDistribution& d, const AllocationRule& q) {
  double wq = 0.0;
  for (std::size_t j = 0; j < q.segments(); ++j) {
    const double v = q.values()[j];
    if (v == 0.0) continue;
    wq += v * (w_antiderivative_tail(d, q.breakpoints()[j]) -
               w_antiderivative_tail(d, q.segment_end(j)));
  }
  return [q, wq](double theta) { return q.integral_to(theta) - wq; };
}

}  // namespace fairtax
