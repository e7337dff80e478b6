#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fairtax/errors.hpp"
#include "fairtax/numerics.hpp"

namespace fairtax {

/// A regular valuation distribution on [0, 1], fully supported with an
/// everywhere positive continuous density. pdf_derivative is optional; when
/// absent, slopes that need f' fall back to a centered finite difference of
/// the virtual value (step 1e-5).
struct MarginalDistribution {
  std::function<double(double)> cdf;
  std::function<double(double)> pdf;
  std::function<double(double)> quantile;
  std::function<double(double)> pdf_derivative;  // may be empty
  std::string name;

  bool has_pdf_derivative() const { return static_cast<bool>(pdf_derivative); }
};

struct RegularityReport {
  bool myerson_regular = false;
  bool strongly_regular = false;
  std::optional<double> witness;  // first grid point violating the failed check
  int grid_size = 0;
};

// ---------------------------------------------------------------------------
// Built-in families
// ---------------------------------------------------------------------------

inline MarginalDistribution uniform_marginal() {
  MarginalDistribution d;
  d.cdf = [](double t) { return t; };
  d.pdf = [](double) { return 1.0; };
  d.quantile = [](double u) { return u; };
  d.pdf_derivative = [](double) { return 0.0; };
  d.name = "uniform";
  return d;
}

/// Power family with cdf t^alpha (Beta(alpha, 1)). Strongly regular for
/// alpha >= 1; the density vanishes at 0 when alpha > 1, so psi(0) = -inf
/// and tail integrals of W diverge at k = 0. IEEE infinities propagate
/// through comparisons, which is the intended behaviour.
inline MarginalDistribution power_marginal(double alpha) {
  if (!(alpha > 0.0)) throw UsageError("power marginal requires alpha > 0");
  MarginalDistribution d;
  d.cdf = [alpha](double t) { return std::pow(t, alpha); };
  d.pdf = [alpha](double t) { return alpha * std::pow(t, alpha - 1.0); };
  d.quantile = [alpha](double u) { return std::pow(u, 1.0 / alpha); };
  d.pdf_derivative = [alpha](double t) {
    return alpha * (alpha - 1.0) * std::pow(t, alpha - 2.0);
  };
  char buf[32];
  std::snprintf(buf, sizeof buf, "power:%g", alpha);
  d.name = buf;
  return d;
}

/// Exponential with rate lambda truncated to [0, 1]. Myerson regular but not
/// strongly regular (the density decreases).
inline MarginalDistribution truncated_exponential_marginal(double lambda) {
  if (!(lambda > 0.0)) throw UsageError("texp marginal requires lambda > 0");
  const double z = 1.0 - std::exp(-lambda);
  MarginalDistribution d;
  d.cdf = [lambda, z](double t) { return (1.0 - std::exp(-lambda * t)) / z; };
  d.pdf = [lambda, z](double t) { return lambda * std::exp(-lambda * t) / z; };
  d.quantile = [lambda, z](double u) { return -std::log1p(-u * z) / lambda; };
  d.pdf_derivative = [lambda, z](double t) {
    return -lambda * lambda * std::exp(-lambda * t) / z;
  };
  char buf[32];
  std::snprintf(buf, sizeof buf, "texp:%g", lambda);
  d.name = buf;
  return d;
}

/// Marginal built from (theta, cdf) pairs by monotone cubic interpolation.
/// The data must be strictly increasing in both columns and span the full
/// unit square corners (0,0) and (1,1).
inline MarginalDistribution tabulated_marginal(std::vector<double> theta,
                                               std::vector<double> cdf_values,
                                               std::string name = "table") {
  if (theta.size() != cdf_values.size() || theta.size() < 2) {
    throw UsageError("tabulated marginal: need matching columns with >= 2 rows");
  }
  for (std::size_t i = 1; i < theta.size(); ++i) {
    if (!(theta[i] > theta[i - 1]) || !(cdf_values[i] > cdf_values[i - 1])) {
      throw UsageError("tabulated marginal: columns must be strictly increasing");
    }
  }
  if (theta.front() != 0.0 || theta.back() != 1.0 || cdf_values.front() != 0.0 ||
      cdf_values.back() != 1.0) {
    throw UsageError("tabulated marginal: must span theta 0..1 with cdf 0..1");
  }
  auto interp = std::make_shared<CubicHermite>(std::move(theta), std::move(cdf_values));
  MarginalDistribution d;
  d.cdf = [interp](double t) { return std::clamp((*interp)(t), 0.0, 1.0); };
  d.pdf = [interp](double t) { return interp->derivative(t); };
  d.quantile = [interp](double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return bisect([&](double t) { return (*interp)(t) - u; }, 0.0, 1.0, 1e-12);
  };
  d.pdf_derivative = [interp](double t) { return interp->second_derivative(t); };
  d.name = std::move(name);
  return d;
}

// ---------------------------------------------------------------------------
// Screening analytics
// ---------------------------------------------------------------------------

/// Myersonian virtual value psi(theta) = theta - (1 - F) / f.
inline double virtual_value(const MarginalDistribution& d, double theta) {
  const double survival = 1.0 - d.cdf(theta);
  if (survival <= 0.0) return theta;  // 0/0 guard at the top of the support
  return theta - survival / d.pdf(theta);
}

/// psi'(theta), from the closed form 2 + (1 - F) f' / f^2 when f' is
/// available, else a centered finite difference of psi (one-sided at the
/// boundary).
inline double virtual_value_slope(const MarginalDistribution& d, double theta,
                                  double fd_step = 1e-5) {
  if (d.has_pdf_derivative()) {
    const double survival = 1.0 - d.cdf(theta);
    if (survival <= 0.0) return 2.0;
    const double f = d.pdf(theta);
    const double ratio = survival * d.pdf_derivative(theta) / (f * f);
    // 0/0 at a boundary where the density vanishes: f ~ c theta^k there, so
    // f'/f^2 ~ k/(c theta^{k+1}) and the one-sided limit is +inf.
    if (std::isnan(ratio)) return std::numeric_limits<double>::infinity();
    return 2.0 + ratio;
  }
  const double lo = std::max(0.0, theta - fd_step);
  const double hi = std::min(1.0, theta + fd_step);
  return (virtual_value(d, hi) - virtual_value(d, lo)) / (hi - lo);
}

/// W(theta) = (1 - F) psi' - f psi, the monopolist's marginal allocation
/// response per unit of expected government spending. Evaluated as
/// (1 - F)(psi' + 1) - theta f, which is the same expression with f psi
/// expanded; this form stays NaN-free when f vanishes at a boundary.
inline double w_function(const MarginalDistribution& d, double theta) {
  const double survival = 1.0 - d.cdf(theta);
  return survival * (virtual_value_slope(d, theta) + 1.0) - theta * d.pdf(theta);
}

/// Tail integral of W: returns the exact antiderivative value
/// int_k^1 W(s) ds = -(1 - F(k)) psi(k), since (1 - F) psi is an
/// antiderivative of W.
inline double w_antiderivative_tail(const MarginalDistribution& d, double k) {
  const double survival = 1.0 - d.cdf(k);
  if (survival <= 0.0) return 0.0;
  return -survival * virtual_value(d, k);
}

/// Grid check of Myerson regularity (psi nondecreasing) and strong
/// regularity (f nondecreasing and log f midpoint-concave). A report with a
/// witness is a valid return, not an error.
inline RegularityReport regularity(const MarginalDistribution& d,
                                   int grid_size = 1024) {
  if (grid_size < 16) throw UsageError("regularity: grid_size must be >= 16");
  const double tol = 1e-9;
  RegularityReport report;
  report.grid_size = grid_size;

  std::vector<double> grid(grid_size);
  for (int i = 0; i < grid_size; ++i) {
    grid[i] = static_cast<double>(i) / (grid_size - 1);
  }

  report.myerson_regular = true;
  double prev = virtual_value(d, grid[0]);
  for (int i = 1; i < grid_size; ++i) {
    const double cur = virtual_value(d, grid[i]);
    if (!(cur >= prev - tol)) {
      report.myerson_regular = false;
      report.witness = grid[i];
      break;
    }
    prev = cur;
  }

  bool density_ok = true;
  std::optional<double> density_witness;
  std::vector<double> logf(grid_size);
  for (int i = 0; i < grid_size; ++i) logf[i] = std::log(d.pdf(grid[i]));
  for (int i = 1; i < grid_size && density_ok; ++i) {
    if (!(d.pdf(grid[i]) >= d.pdf(grid[i - 1]) - tol)) {
      density_ok = false;
      density_witness = grid[i];
    }
  }
  for (int i = 1; i + 1 < grid_size && density_ok; ++i) {
    if (!(logf[i] >= 0.5 * (logf[i - 1] + logf[i + 1]) - tol)) {
      density_ok = false;
      density_witness = grid[i];
    }
  }

  // Strong regularity implies Myerson regularity; the conjunction keeps the
  // report consistent even if grid noise splits the two checks.
  report.strongly_regular = density_ok && report.myerson_regular;
  if (report.myerson_regular && !density_ok) report.witness = density_witness;
  return report;
}

namespace detail {

inline void require_myerson_regular(const MarginalDistribution& d,
                                    int check_grid = 512) {
  const double tol = 1e-9;
  double prev = virtual_value(d, 0.0);
  for (int i = 1; i < check_grid; ++i) {
    const double t = static_cast<double>(i) / (check_grid - 1);
    const double cur = virtual_value(d, t);
    if (!(cur >= prev - tol)) {
      throw NotRegularError("virtual value nonmonotone near theta = " +
                            std::to_string(t) + " for marginal " + d.name);
    }
    prev = cur;
  }
}

}  // namespace detail

/// Smallest type with psi(theta) >= tau, by bisection to 1e-10. Returns 0 if
/// psi(0) >= tau and 1 if psi stays below tau everywhere.
inline double virtual_value_inverse(const MarginalDistribution& d, double tau) {
  if (virtual_value(d, 0.0) >= tau) return 0.0;
  if (virtual_value(d, 1.0) < tau) return 1.0;
  return bisect([&](double t) { return virtual_value(d, t) - tau; }, 0.0, 1.0,
                1e-10);
}

/// The unregulated monopoly threshold theta* solving psi(theta*) = 0.
inline double monopoly_threshold(const MarginalDistribution& d) {
  detail::require_myerson_regular(d);
  return virtual_value_inverse(d, 0.0);
}

}  // namespace fairtax
