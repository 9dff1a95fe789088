#pragma once

// Particle in a hard-wall box [0, a] truncated to the lowest N levels.

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "cqt/hilbert.hpp"

namespace cqt {

struct BoxSystem {
  double mass = 1.0;
  double width = 1.0;  ///< a
  double hbar = 1.0;
  Index cutoff = 1;    ///< N, number of retained levels

  void validate() const {
    detail::require(mass > 0.0 && std::isfinite(mass), "BoxSystem: mass must be positive");
    detail::require(width > 0.0 && std::isfinite(width), "BoxSystem: width must be positive");
    detail::require(hbar > 0.0 && std::isfinite(hbar), "BoxSystem: hbar must be positive");
    detail::require(cutoff >= 1, "BoxSystem: cutoff must be >= 1");
  }

  /// pi^2 hbar^2 / (2 m a^2), the ground-state energy.
  double energy_scale() const {
    return std::numbers::pi * std::numbers::pi * hbar * hbar / (2.0 * mass * width * width);
  }
};

/// E_n = n^2 pi^2 hbar^2 / (2 m a^2), n >= 1.
inline double energy(Index n, const BoxSystem& system) {
  detail::require(n >= 1, "energy: level must be >= 1, got " + std::to_string(n));
  system.validate();
  const double nn = static_cast<double>(n);
  return nn * nn * system.energy_scale();
}

/// Diagonal H_nm = E_n delta_nm over levels 1..N.
inline OperatorMatrix hamiltonian_matrix(const BoxSystem& system) {
  system.validate();
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(system.cutoff, system.cutoff);
  for (Index n = 1; n <= system.cutoff; ++n) h(n - 1, n - 1) = energy(n, system);
  return OperatorMatrix(std::move(h), true);
}

inline constexpr double kBoxNormTolerance = 1e-10;

/// Energy-basis coefficients c_1..c_N of a box state.
class BoxState {
 public:
  BoxState(BoxSystem system, Eigen::VectorXcd coeffs, Norm norm = Norm::unchecked)
      : system_(system), coeffs_(std::move(coeffs)), unit_(norm == Norm::unit) {
    system_.validate();
    if (coeffs_.size() != system_.cutoff)
      throw DimensionMismatch("BoxState: coefficient count vs cutoff", coeffs_.size(), system_.cutoff);
    detail::require(detail::all_finite(coeffs_), "BoxState: non-finite coefficient");
    if (unit_)
      detail::require(std::abs(coeffs_.squaredNorm() - 1.0) <= kBoxNormTolerance,
                      "BoxState: flagged normalized but sum |c_n|^2 = " + std::to_string(coeffs_.squaredNorm()));
  }

  /// Pure energy eigenstate |n>, n in 1..N.
  static BoxState level(const BoxSystem& system, Index n) {
    detail::require(n >= 1 && n <= system.cutoff, "BoxState::level: level out of range");
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(system.cutoff);
    c(n - 1) = 1.0;
    return BoxState(system, std::move(c), Norm::unit);
  }

  const BoxSystem& system() const noexcept { return system_; }
  const Eigen::VectorXcd& coeffs() const noexcept { return coeffs_; }
  bool is_normalized() const noexcept { return unit_; }

 private:
  BoxSystem system_;
  Eigen::VectorXcd coeffs_;
  bool unit_;
};

namespace detail {

/// sin(pi t) with exact zeros at integer t.
inline double sin_pi(double t) {
  double r = std::fmod(t, 2.0);
  if (r < 0.0) r += 2.0;
  constexpr double pi = std::numbers::pi;
  if (r <= 0.5) return std::sin(pi * r);
  if (r <= 1.5) return std::sin(pi * (1.0 - r));
  return -std::sin(pi * (2.0 - r));
}

}  // namespace detail

/// Psi(x) = sqrt(2/a) sum_n c_n sin(n pi x / a) for x in [0, a].
inline Complex eval_wavefunction(const BoxState& state, double x) {
  const double a = state.system().width;
  detail::require(x >= 0.0 && x <= a, "eval_wavefunction: x = " + std::to_string(x) + " outside [0, a]");
  const double t = x / a;
  Complex sum = 0.0;
  const auto& c = state.coeffs();
  for (Index n = 1; n <= c.size(); ++n) sum += c(n - 1) * detail::sin_pi(static_cast<double>(n) * t);
  return std::sqrt(2.0 / a) * sum;
}

/// |c_n|^2, the probability of measuring E_n. Requires sum |c_n|^2 = 1 within 1e-10.
inline std::vector<double> probabilities(const BoxState& state) {
  const auto& c = state.coeffs();
  std::vector<double> p(static_cast<std::size_t>(c.size()));
  double total = 0.0;
  for (Index n = 0; n < c.size(); ++n) {
    p[static_cast<std::size_t>(n)] = std::norm(c(n));
    total += p[static_cast<std::size_t>(n)];
  }
  detail::require(std::abs(total - 1.0) <= kBoxNormTolerance,
                  "probabilities: state is not normalized (sum = " + std::to_string(total) + ")");
  return p;
}

/// c_n -> exp(-i E_n t / hbar) c_n
inline BoxState spectral_evolve(const BoxState& state, double t) {
  detail::require(std::isfinite(t), "spectral_evolve: non-finite time");
  const BoxSystem& sys = state.system();
  Eigen::VectorXcd c = state.coeffs();
  for (Index n = 1; n <= c.size(); ++n) c(n - 1) *= std::polar(1.0, -energy(n, sys) * t / sys.hbar);
  return BoxState(sys, std::move(c), state.is_normalized() ? Norm::unit : Norm::unchecked);
}

/// Time after which every level phase exp(-i E_n T / hbar) returns to 1: T = 4 m a^2 / (pi hbar).
inline double revival_time(const BoxSystem& system) {
  system.validate();
  return 4.0 * system.mass * system.width * system.width / (std::numbers::pi * system.hbar);
}

/// | integral_0^a |Psi(x)|^2 dx - sum |c_n|^2 | by composite Simpson.
///
/// quadrature_points is the number of subintervals; odd counts are rounded up
/// to the next even number. Requires quadrature_points >= 2N.
inline double parseval_check(const BoxState& state, Index quadrature_points) {
  const Index levels = state.coeffs().size();
  detail::require(quadrature_points >= 2 * levels,
                  "parseval_check: need at least 2N = " + std::to_string(2 * levels) + " quadrature points");
  const Index intervals = quadrature_points + (quadrature_points % 2);
  const double a = state.system().width;
  const double h = a / static_cast<double>(intervals);

  double odd = 0.0;
  double even = 0.0;
  for (Index j = 1; j < intervals; ++j) {
    const double v = std::norm(eval_wavefunction(state, static_cast<double>(j) * h));
    (j % 2 == 1 ? odd : even) += v;
  }
  // Psi vanishes at both walls, so the end-point terms are zero.
  const double integral = h / 3.0 * (4.0 * odd + 2.0 * even);
  return std::abs(integral - state.coeffs().squaredNorm());
}

}  // namespace cqt
