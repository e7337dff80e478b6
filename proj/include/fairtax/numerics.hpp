#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "fairtax/errors.hpp"

namespace fairtax {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

namespace detail {

inline double simpson_step(const std::function<double(double)>& f, double a,
                           double fa, double b, double fb, double m, double fm,
                           double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b] to an absolute tolerance.
/// The interval is first split into fixed panels so that a symmetric
/// integrand cannot fool the error estimate into terminating early.
inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double abs_tol = 1e-8) {
  if (a == b) return 0.0;
  const int panels = 8;
  const double width = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    const double hi = p + 1 == panels ? b : a + (p + 1) * width;
    const double m = 0.5 * (lo + hi);
    const double flo = f(lo);
    const double fhi = f(hi);
    const double fm = f(m);
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
    total += detail::simpson_step(f, lo, flo, hi, fhi, m, fm, whole,
                                  abs_tol / panels, 44);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Root finding
// ---------------------------------------------------------------------------

/// Bisection on a bracket [lo, hi] with f(lo) and f(hi) of opposite sign
/// (either may be zero). Returns the midpoint of the final bracket.
inline double bisect(const std::function<double(double)>& f, double lo,
                     double hi, double tol = 1e-10) {
  double flo = f(lo);
  if (flo == 0.0) return lo;
  double fhi = f(hi);
  if (fhi == 0.0) return hi;
  if ((flo < 0.0) == (fhi < 0.0)) {
    throw Error("bisect: endpoints do not bracket a root");
  }
  const bool rising = flo < 0.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket at floating resolution
    const double fmid = f(mid);
    if (fmid == 0.0) return mid;
    if ((fmid < 0.0) == rising) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Monotone cubic (Fritsch-Carlson) interpolation
// ---------------------------------------------------------------------------

/// Piecewise cubic Hermite interpolant with Fritsch-Carlson slopes.
/// Monotone data yields a monotone interpolant; non-monotone data is handled
/// with zero slopes at local extrema (the usual PCHIP behaviour).
class CubicHermite {
 public:
  CubicHermite(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) {
      throw Error("CubicHermite: need at least two knots with matching sizes");
    }
    for (std::size_t i = 1; i < n; ++i) {
      if (!(x_[i] > x_[i - 1])) {
        throw Error("CubicHermite: knots must be strictly increasing");
      }
    }
    slopes_.resize(n);
    std::vector<double> h(n - 1), d(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      d[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    if (n == 2) {
      slopes_[0] = slopes_[1] = d[0];
      return;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (d[i - 1] == 0.0 || d[i] == 0.0 || (d[i - 1] < 0.0) != (d[i] < 0.0)) {
        slopes_[i] = 0.0;
      } else {
        const double w1 = 2.0 * h[i] + h[i - 1];
        const double w2 = h[i] + 2.0 * h[i - 1];
        slopes_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
      }
    }
    slopes_[0] = endpoint_slope(h[0], h[1], d[0], d[1]);
    slopes_[n - 1] = endpoint_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
  }

  double operator()(double x) const {
    const auto [i, t, h] = locate(x);
    const double t2 = t * t;
    const double t3 = t2 * t;
    return y_[i] * (2.0 * t3 - 3.0 * t2 + 1.0) +
           h * slopes_[i] * (t3 - 2.0 * t2 + t) +
           y_[i + 1] * (-2.0 * t3 + 3.0 * t2) + h * slopes_[i + 1] * (t3 - t2);
  }

  double derivative(double x) const {
    const auto [i, t, h] = locate(x);
    const double t2 = t * t;
    return (y_[i] * (6.0 * t2 - 6.0 * t) + h * slopes_[i] * (3.0 * t2 - 4.0 * t + 1.0) +
            y_[i + 1] * (-6.0 * t2 + 6.0 * t) + h * slopes_[i + 1] * (3.0 * t2 - 2.0 * t)) /
           h;
  }

  double second_derivative(double x) const {
    const auto [i, t, h] = locate(x);
    return (y_[i] * (12.0 * t - 6.0) + h * slopes_[i] * (6.0 * t - 4.0) +
            y_[i + 1] * (-12.0 * t + 6.0) + h * slopes_[i + 1] * (6.0 * t - 2.0)) /
           (h * h);
  }

  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }
  const std::vector<double>& knots_x() const { return x_; }
  const std::vector<double>& knots_y() const { return y_; }

 private:
  struct Cell {
    std::size_t i;
    double t;
    double h;
  };

  Cell locate(double x) const {
    x = std::clamp(x, x_.front(), x_.back());
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - x_.begin());
    i = std::clamp<std::size_t>(i, 1, x_.size() - 1) - 1;
    const double h = x_[i + 1] - x_[i];
    return {i, (x - x_[i]) / h, h};
  }

  // Three-point endpoint formula with the Fritsch-Carlson limiters.
  static double endpoint_slope(double h0, double h1, double d0, double d1) {
    double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (m * d0 <= 0.0) {
      m = 0.0;
    } else if (d0 * d1 <= 0.0 && std::abs(m) > 3.0 * std::abs(d0)) {
      m = 3.0 * d0;
    }
    return m;
  }

  std::vector<double> x_, y_, slopes_;
};

// ---------------------------------------------------------------------------
// Normal distribution helpers
// ---------------------------------------------------------------------------

inline double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
}

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Inverse standard normal CDF: Acklam's rational approximation polished
/// with one Halley step, accurate to full double precision for p in (0,1).
inline double norm_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = norm_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * kPi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

namespace detail {

inline std::pair<std::vector<double>, std::vector<double>> make_gauss_legendre(
    int order) {
  std::vector<double> nodes(order), weights(order);
  for (int i = 0; i < order; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (order + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) {
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        break;
      }
    }
  }
  return {std::move(nodes), std::move(weights)};
}

/// Gauss-Legendre rule on [-1, 1] used by the bivariate normal CDF.
inline const std::pair<std::vector<double>, std::vector<double>>&
gauss_legendre_48() {
  static const auto rule = make_gauss_legendre(48);
  return rule;
}

}  // namespace detail

/// Bivariate standard normal CDF P(X <= h, Y <= k) at correlation rho,
/// via the tetrachoric identity dPhi2/drho = phi2(h, k; rho) integrated from
/// the independent case with composite Gauss-Legendre. Absolute accuracy is
/// well inside 1e-7 for |rho| <= 0.99.
inline double binorm_cdf(double h, double k, double rho) {
  if (std::isinf(h) || std::isinf(k)) {
    if (h < 0.0 || k < 0.0) return 0.0;
    return std::isinf(h) ? norm_cdf(k) : norm_cdf(h);
  }
  if (rho <= -1.0) return std::max(0.0, norm_cdf(h) + norm_cdf(k) - 1.0);
  if (rho >= 1.0) return std::min(norm_cdf(h), norm_cdf(k));
  double result = norm_cdf(h) * norm_cdf(k);
  if (rho == 0.0) return result;
  const auto& [nodes, weights] = detail::gauss_legendre_48();
  const int segments = std::abs(rho) > 0.9 ? 6 : 2;
  const double step = rho / segments;
  double integral = 0.0;
  for (int s = 0; s < segments; ++s) {
    const double lo = s * step;
    const double mid = lo + 0.5 * step;
    const double half = 0.5 * step;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double r = mid + half * nodes[i];
      const double om = 1.0 - r * r;
      const double dens = std::exp(-0.5 * (h * h - 2.0 * r * h * k + k * k) / om) /
                          (2.0 * kPi * std::sqrt(om));
      integral += weights[i] * half * dens;
    }
  }
  return std::clamp(result + integral, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Deterministic random numbers
// ---------------------------------------------------------------------------

/// Seeded generator producing identical streams across platforms. The
/// uniform/normal draws avoid std distributions, whose output is
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller on explicit uniforms.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }

  /// Integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return gen_() % n; }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fairtax
