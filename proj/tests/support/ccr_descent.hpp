#pragma once

// Gradient descent on F(P, Q) = || [P, Q] + i hbar 1 ||_F^2 over Hermitian pairs,
// used to look for pairs that beat the hbar sqrt(N) bound.

#include <Eigen/Dense>

#include "support/random.hpp"

namespace cqt::testing {

struct DescentOutcome {
  Eigen::MatrixXcd p;
  Eigen::MatrixXcd q;
  double initial_deviation;
  double final_deviation;
};

inline double ccr_objective(const Eigen::MatrixXcd& p, const Eigen::MatrixXcd& q, double hbar) {
  Eigen::MatrixXcd r = p * q - q * p;
  r.diagonal().array() += std::complex<double>(0.0, hbar);
  return r.squaredNorm();
}

/// Steepest descent with backtracking. With R = [P, Q] + i hbar 1 the
/// Hermitian-projected gradients are herm(R Q - Q R) for P and herm(P R - R P) for Q.
inline DescentOutcome minimize_ccr_deviation(Eigen::Index n, double hbar, Rng& rng, int iterations = 400) {
  Eigen::MatrixXcd p = random_hermitian(n, rng);
  Eigen::MatrixXcd q = random_hermitian(n, rng);
  auto herm = [](const Eigen::MatrixXcd& m) -> Eigen::MatrixXcd { return 0.5 * (m + m.adjoint()); };

  double f = ccr_objective(p, q, hbar);
  const double initial = std::sqrt(f);
  double step = 1e-2;
  for (int it = 0; it < iterations; ++it) {
    Eigen::MatrixXcd r = p * q - q * p;
    r.diagonal().array() += std::complex<double>(0.0, hbar);
    const Eigen::MatrixXcd gp = herm(r * q - q * r);
    const Eigen::MatrixXcd gq = herm(p * r - r * p);
    const double gnorm2 = gp.squaredNorm() + gq.squaredNorm();
    if (gnorm2 == 0.0) break;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      const Eigen::MatrixXcd p_try = p - step * gp;
      const Eigen::MatrixXcd q_try = q - step * gq;
      const double f_try = ccr_objective(p_try, q_try, hbar);
      if (f_try < f) {
        p = p_try;
        q = q_try;
        f = f_try;
        step *= 1.5;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  return {p, q, initial, std::sqrt(f)};
}

}  // namespace cqt::testing
