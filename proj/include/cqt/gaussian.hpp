#pragma once

// Norm of the 3N-dimensional Gaussian |Psi(Q)|^2 = exp(-a Q^2):
// f(a) = (pi / a)^{3N/2}, and what it costs to keep f within epsilon of 1.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "cqt/error.hpp"
#include "cqt/hilbert.hpp"

namespace cqt {

enum class Magnitude { finite, overflow, underflow };

/// Value held as its natural logarithm, with overflow and underflow of exp() made explicit.
struct ExtendedReal {
  double log_value;
  Magnitude flag;

  static ExtendedReal from_log(double log_value) {
    static const double hi = std::log(std::numeric_limits<double>::max());
    static const double lo = std::log(std::numeric_limits<double>::min());
    const Magnitude flag = log_value > hi ? Magnitude::overflow : log_value < lo ? Magnitude::underflow
                                                                                 : Magnitude::finite;
    return {log_value, flag};
  }

  /// exp(log_value); +inf for overflow, 0 for underflow.
  double value() const {
    switch (flag) {
      case Magnitude::overflow: return std::numeric_limits<double>::infinity();
      case Magnitude::underflow: return 0.0;
      default: return std::exp(log_value);
    }
  }
};

inline const char* to_string(Magnitude m) {
  switch (m) {
    case Magnitude::overflow: return "overflow";
    case Magnitude::underflow: return "underflow";
    default: return "finite";
  }
}

/// (pi / a)^{D/2} over D coordinates, as exp((D/2)(ln pi - ln a)).
inline ExtendedReal gaussian_norm_analytic_dims(int coordinate_dims, double a) {
  detail::require(a > 0.0 && std::isfinite(a), "gaussian_norm: a must be positive");
  detail::require(coordinate_dims >= 1, "gaussian_norm: need at least one coordinate");
  return ExtendedReal::from_log(0.5 * coordinate_dims * std::log(std::numbers::pi / a));
}

/// f(a) = (pi / a)^{3N/2} for N particles.
inline ExtendedReal gaussian_norm_analytic(int particles, double a) {
  detail::require(particles >= 1, "gaussian_norm_analytic: N must be >= 1");
  return gaussian_norm_analytic_dims(3 * particles, a);
}

inline constexpr int kGaussianMaxDims = 6;

/// Trapezoid integral of exp(-a x^2) on M nodes over [-L, L].
inline double gaussian_norm_1d_quadrature(double a, double half_width, Index points) {
  detail::require(a > 0.0 && std::isfinite(a), "gaussian_norm_quadrature: a must be positive");
  detail::require(half_width > 0.0, "gaussian_norm_quadrature: half width must be positive");
  detail::require(points >= 2, "gaussian_norm_quadrature: need M >= 2");
  const double h = 2.0 * half_width / static_cast<double>(points - 1);
  double s = 0.0;
  for (Index j = 0; j < points; ++j) {
    const double x = -half_width + static_cast<double>(j) * h;
    const double w = (j == 0 || j == points - 1) ? 0.5 : 1.0;
    s += w * std::exp(-a * x * x);
  }
  return s * h;
}

/// Quadrature of exp(-a Q^2) over [-L, L]^D for D <= 6, using exp(-a Q^2) = prod_d exp(-a x_d^2).
inline double gaussian_norm_quadrature(int coordinate_dims, double a, double half_width, Index points) {
  detail::require(coordinate_dims >= 1, "gaussian_norm_quadrature: need at least one coordinate");
  if (coordinate_dims > kGaussianMaxDims)
    throw ResourceCapExceeded("gaussian_norm_quadrature: 3N = " + std::to_string(coordinate_dims) +
                              " exceeds the tensor-grid cap of 6 coordinates");
  return std::pow(gaussian_norm_1d_quadrature(a, half_width, points), coordinate_dims);
}

/// Same integral by enumerating every node of the D-dimensional tensor grid and
/// evaluating exp(-a Q^2) at the full configuration. Capped at 1e8 nodes.
inline double gaussian_norm_tensor_grid(int coordinate_dims, double a, double half_width, Index points) {
  detail::require(coordinate_dims >= 1, "gaussian_norm_tensor_grid: need at least one coordinate");
  detail::require(a > 0.0 && std::isfinite(a), "gaussian_norm_tensor_grid: a must be positive");
  detail::require(half_width > 0.0 && points >= 2, "gaussian_norm_tensor_grid: bad grid");
  if (coordinate_dims > kGaussianMaxDims ||
      std::pow(static_cast<double>(points), coordinate_dims) > 1e8)
    throw ResourceCapExceeded("gaussian_norm_tensor_grid: grid exceeds 1e8 nodes or 6 coordinates");
  const double h = 2.0 * half_width / static_cast<double>(points - 1);
  std::vector<Index> idx(static_cast<std::size_t>(coordinate_dims), 0);
  double total = 0.0;
  while (true) {
    double q2 = 0.0;
    double w = 1.0;
    for (Index j : idx) {
      const double x = -half_width + static_cast<double>(j) * h;
      q2 += x * x;
      w *= (j == 0 || j == points - 1) ? 0.5 * h : h;
    }
    total += w * std::exp(-a * q2);
    std::size_t d = 0;
    while (d < idx.size() && ++idx[d] == points) idx[d++] = 0;
    if (d == idx.size()) break;
  }
  return total;
}

enum class LimitBehavior { diverges_to_0, constant_1, diverges_to_inf };

inline const char* to_string(LimitBehavior b) {
  switch (b) {
    case LimitBehavior::diverges_to_0: return "diverges_to_0";
    case LimitBehavior::constant_1: return "constant_1";
    default: return "diverges_to_inf";
  }
}

struct TrichotomyResult {
  LimitBehavior behavior;
  std::vector<ExtendedReal> sequence;  ///< f(N) for N = 1..N_max
};

/// Behavior of (pi/a)^{3N/2} as N grows: 0 for a > pi, 1 for a = pi, infinity for a < pi.
///
/// Equality with pi cannot be decided for a real input, so the caller declares
/// the precision of a: constant_1 is reported exactly when |a - pi| <= declared_precision.
/// The default 0 accepts only the double closest to pi.
inline TrichotomyResult limit_trichotomy(double a, int n_max, double declared_precision = 0.0) {
  detail::require(a > 0.0 && std::isfinite(a), "limit_trichotomy: a must be positive");
  detail::require(n_max >= 1, "limit_trichotomy: N_max must be >= 1");
  detail::require(declared_precision >= 0.0, "limit_trichotomy: declared precision must be nonnegative");
  TrichotomyResult out;
  out.behavior = std::abs(a - std::numbers::pi) <= declared_precision ? LimitBehavior::constant_1
                 : a > std::numbers::pi                               ? LimitBehavior::diverges_to_0
                                                                      : LimitBehavior::diverges_to_inf;
  out.sequence.reserve(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n) out.sequence.push_back(gaussian_norm_analytic(n, a));
  return out;
}

struct PrecisionReport {
  int particles;             ///< N
  double epsilon;
  double delta_max;          ///< largest |a/pi - 1| with |f - 1| <= epsilon
  int pi_digits_required;    ///< max(1, ceil(log10(pi / delta_max)))
  double pi_digits;          ///< log10(pi / delta_max) before rounding
};

/// Solves |(1 + delta)^{-3N/2} - 1| <= epsilon for the largest admissible |delta| by bisection.
///
/// For delta < 0 the norm exceeds 1 and the admissible range ends before
/// |delta| = 1; the bound on the a > pi side is always the larger one.
inline PrecisionReport precision_requirement(int particles, double epsilon) {
  detail::require(particles >= 1, "precision_requirement: N must be >= 1");
  detail::require(epsilon > 0.0 && epsilon < 1.0, "precision_requirement: epsilon must lie in (0, 1)");
  const double exponent = 1.5 * particles;
  const auto excess = [&](double delta) { return std::abs(std::expm1(-exponent * std::log1p(delta))) - epsilon; };

  double lo = 0.0;
  double hi = 1.0;
  while (excess(hi) <= 0.0) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw NumericalFailure("precision_requirement: bracket diverged");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) <= 0.0 ? lo : hi) = mid;
  }
  const double delta = lo;
  if (!(delta > 0.0)) throw NumericalFailure("precision_requirement: no admissible delta found");

  const double digits = std::log10(std::numbers::pi / delta);
  const int required = std::max(1, static_cast<int>(std::ceil(digits)));
  return {particles, epsilon, delta, required, digits};
}

}  // namespace cqt
