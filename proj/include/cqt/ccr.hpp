#pragma once

// Finite matrix realizations of momentum and position, and a quantitative
// report of how far [P, Q] stays from -i hbar 1_N.
//
// Tr[P, Q] = 0 for any square P, Q while Tr(-i hbar 1_N) = -i hbar N, so by
// Cauchy-Schwarz against 1_N every N x N pair obeys
//   || [P, Q] + i hbar 1_N ||_F >= |Tr([P, Q] + i hbar 1_N)| / sqrt(N) = hbar sqrt(N).

#include <cmath>
#include <string>
#include <vector>

#include "cqt/hilbert.hpp"

namespace cqt {

enum class CcrSchemeKind { ladder, grid };

/// Parameters of a concrete (P, Q) construction. omega applies to ladder only,
/// half_width to grid only.
struct CcrScheme {
  CcrSchemeKind kind = CcrSchemeKind::ladder;
  Index dim = 1;
  double mass = 1.0;
  double omega = 1.0;
  double half_width = 1.0;
  double hbar = 1.0;

  void validate() const {
    detail::require(dim >= 1, "CcrScheme: dim must be >= 1");
    detail::require(mass > 0.0 && std::isfinite(mass), "CcrScheme: mass must be positive");
    detail::require(omega > 0.0 && std::isfinite(omega), "CcrScheme: omega must be positive");
    detail::require(half_width > 0.0 && std::isfinite(half_width), "CcrScheme: half_width must be positive");
    detail::require(hbar > 0.0 && std::isfinite(hbar), "CcrScheme: hbar must be positive");
  }
};

struct CanonicalPair {
  OperatorMatrix momentum;
  OperatorMatrix position;
};

/// Truncated lowering operator, (a)_{n,n+1} = sqrt(n+1) with 0-based n.
inline Eigen::MatrixXcd lowering_matrix(Index dim) {
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
  for (Index n = 0; n + 1 < dim; ++n) a(n, n + 1) = std::sqrt(static_cast<double>(n + 1));
  return a;
}

/// Q = sqrt(hbar/2 m omega)(a + a^dag), P = i sqrt(m hbar omega/2)(a^dag - a).
inline CanonicalPair build_ladder_pair(const CcrScheme& scheme) {
  detail::require(scheme.kind == CcrSchemeKind::ladder, "build_ladder_pair: scheme is not ladder");
  scheme.validate();
  const Eigen::MatrixXcd a = lowering_matrix(scheme.dim);
  const Eigen::MatrixXcd ad = a.adjoint();
  const double q_scale = std::sqrt(scheme.hbar / (2.0 * scheme.mass * scheme.omega));
  const double p_scale = std::sqrt(scheme.mass * scheme.hbar * scheme.omega / 2.0);
  Eigen::MatrixXcd q = q_scale * (a + ad);
  Eigen::MatrixXcd p = (kI * p_scale) * (ad - a);
  return {OperatorMatrix(std::move(p), true), OperatorMatrix(std::move(q), true)};
}

/// Uniform grid on [-half_width, half_width]; Q diagonal, P = -i hbar D with D
/// the antisymmetrized central difference and zero beyond the end points.
inline CanonicalPair build_grid_pair(const CcrScheme& scheme) {
  detail::require(scheme.kind == CcrSchemeKind::grid, "build_grid_pair: scheme is not grid");
  scheme.validate();
  detail::require(scheme.dim >= 3, "build_grid_pair: central differences need dim >= 3");
  const Index n = scheme.dim;
  const double h = 2.0 * scheme.half_width / static_cast<double>(n - 1);

  Eigen::MatrixXcd q = Eigen::MatrixXcd::Zero(n, n);
  for (Index j = 0; j < n; ++j) q(j, j) = -scheme.half_width + static_cast<double>(j) * h;
  q(n - 1, n - 1) = scheme.half_width;

  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    if (j + 1 < n) d(j, j + 1) = 1.0 / (2.0 * h);
    if (j >= 1) d(j, j - 1) = -1.0 / (2.0 * h);
  }
  const Eigen::MatrixXd d_anti = 0.5 * (d - d.transpose());
  Eigen::MatrixXcd p = (-kI * scheme.hbar) * d_anti.cast<Complex>();
  return {OperatorMatrix(std::move(p), true), OperatorMatrix(std::move(q), true)};
}

inline CanonicalPair build_pair(const CcrScheme& scheme) {
  return scheme.kind == CcrSchemeKind::ladder ? build_ladder_pair(scheme) : build_grid_pair(scheme);
}

/// Smallest possible || [P, Q] + i hbar 1_N ||_F over all N x N pairs.
inline double ccr_lower_bound(Index dim, double hbar) {
  detail::require(dim >= 1, "ccr_lower_bound: dim must be >= 1");
  detail::require(hbar > 0.0, "ccr_lower_bound: hbar must be positive");
  return hbar * std::sqrt(static_cast<double>(dim));
}

struct CcrReport {
  OperatorMatrix commutator;  ///< [P, Q]
  Complex trace;              ///< Tr [P, Q]
  double deviation;           ///< || [P, Q] + i hbar 1_N ||_F
  double lower_bound;         ///< hbar sqrt(N)
  std::vector<Complex> diagonal_residuals;  ///< diag([Q, P] / (i hbar)); all ones if the CCR held
};

inline CcrReport ccr_report(const OperatorMatrix& p, const OperatorMatrix& q, double hbar) {
  detail::require_same_dim(p.dim(), q.dim(), "ccr_report");
  detail::require(hbar > 0.0, "ccr_report: hbar must be positive");
  OperatorMatrix c = commutator(p, q);
  const Index n = c.dim();
  const Complex tr = trace(c);

  Eigen::MatrixXcd shifted = c.entries();
  shifted.diagonal().array() += kI * hbar;
  const double deviation = shifted.norm();

  std::vector<Complex> residuals(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) residuals[static_cast<std::size_t>(i)] = -c(i, i) / (kI * hbar);

  return CcrReport{std::move(c), tr, deviation, ccr_lower_bound(n, hbar), std::move(residuals)};
}

}  // namespace cqt
