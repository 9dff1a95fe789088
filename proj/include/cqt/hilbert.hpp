#pragma once

// Finite-dimensional Dirac formalism: kets as coefficient vectors over a
// truncated orthonormal basis, operators as dense matrices L_nm = <n|L|m>.

#include <cmath>
#include <complex>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "cqt/error.hpp"

namespace cqt {

using Complex = std::complex<double>;
using Index = Eigen::Index;

inline constexpr Complex kI{0.0, 1.0};

namespace detail {

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) {
      const Complex z = m(i, j);
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    }
  return true;
}

}  // namespace detail

/// Whether a StateVector is asserted to have unit norm.
enum class Norm { unchecked, unit };

inline constexpr double kNormTolerance = 1e-12;

/// Coefficients Psi_n = <n|Psi> over a truncated basis of dimension dim().
///
/// Normalization is a flag rather than an invariant: intermediates of a
/// path-integral evaluation are unnormalized. Construction with Norm::unit
/// verifies | ||v|| - 1 | <= 1e-12.
class StateVector {
 public:
  explicit StateVector(Eigen::VectorXcd coeffs, Norm norm = Norm::unchecked)
      : coeffs_(std::move(coeffs)), unit_(norm == Norm::unit) {
    detail::require(coeffs_.size() >= 1, "StateVector: dimension must be positive");
    detail::require(detail::all_finite(coeffs_), "StateVector: non-finite coefficient");
    if (unit_)
      detail::require(std::abs(coeffs_.norm() - 1.0) <= kNormTolerance,
                      "StateVector: flagged normalized but norm is " + std::to_string(coeffs_.norm()));
  }

  StateVector(std::initializer_list<Complex> coeffs, Norm norm = Norm::unchecked)
      : StateVector(from_list(coeffs), norm) {}

  /// Canonical basis ket |n> (0-based index) of a space of dimension dim.
  static StateVector basis(Index dim, Index n) {
    detail::require(dim >= 1, "basis: dimension must be positive");
    detail::require(n >= 0 && n < dim, "basis: index out of range");
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
    v(n) = 1.0;
    return StateVector(std::move(v), Norm::unit);
  }

  Index dim() const noexcept { return coeffs_.size(); }
  const Eigen::VectorXcd& coeffs() const noexcept { return coeffs_; }
  Complex operator[](Index n) const { return coeffs_(n); }
  bool is_normalized() const noexcept { return unit_; }
  double norm() const { return coeffs_.norm(); }

  /// Copy scaled to unit norm; throws on the zero vector.
  StateVector normalized() const {
    const double n = norm();
    if (n == 0.0) throw InvalidArgument("StateVector::normalized: zero vector");
    return StateVector(coeffs_ / n, Norm::unit);
  }

  friend StateVector operator+(const StateVector& u, const StateVector& v) {
    detail::require_same_dim(u.dim(), v.dim(), "StateVector +");
    return StateVector(u.coeffs_ + v.coeffs_);
  }
  friend StateVector operator-(const StateVector& u, const StateVector& v) {
    detail::require_same_dim(u.dim(), v.dim(), "StateVector -");
    return StateVector(u.coeffs_ - v.coeffs_);
  }
  friend StateVector operator*(Complex alpha, const StateVector& v) { return StateVector(alpha * v.coeffs_); }

 private:
  static Eigen::VectorXcd from_list(std::initializer_list<Complex> coeffs) {
    Eigen::VectorXcd v(static_cast<Index>(coeffs.size()));
    Index i = 0;
    for (const Complex& c : coeffs) v(i++) = c;
    return v;
  }

  Eigen::VectorXcd coeffs_;
  bool unit_;
};

inline constexpr double kHermitianTolerance = 1e-12;

/// Dense square matrix of an operator in a truncated basis.
///
/// The domain is all of C^N. A hermitian_hint is verified on construction:
/// max|L_nm - conj(L_mn)| <= 1e-12 * max|L|.
class OperatorMatrix {
 public:
  explicit OperatorMatrix(Eigen::MatrixXcd entries, bool hermitian_hint = false)
      : entries_(std::move(entries)), hermitian_(hermitian_hint) {
    detail::require(entries_.rows() >= 1, "OperatorMatrix: dimension must be positive");
    if (entries_.rows() != entries_.cols())
      throw DimensionMismatch("OperatorMatrix: not square", entries_.rows(), entries_.cols());
    detail::require(detail::all_finite(entries_), "OperatorMatrix: non-finite entry");
    if (hermitian_)
      detail::require(hermiticity_defect() <= kHermitianTolerance * max_abs(),
                      "OperatorMatrix: hermitian_hint set on a non-Hermitian matrix");
  }

  static OperatorMatrix identity(Index dim) {
    detail::require(dim >= 1, "identity: dimension must be positive");
    return OperatorMatrix(Eigen::MatrixXcd::Identity(dim, dim), true);
  }
  static OperatorMatrix zero(Index dim) {
    detail::require(dim >= 1, "zero: dimension must be positive");
    return OperatorMatrix(Eigen::MatrixXcd::Zero(dim, dim), true);
  }
  static OperatorMatrix diagonal(std::span<const Complex> diag) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Index>(diag.size()), static_cast<Index>(diag.size()));
    bool real = true;
    for (std::size_t i = 0; i < diag.size(); ++i) {
      m(static_cast<Index>(i), static_cast<Index>(i)) = diag[i];
      real = real && diag[i].imag() == 0.0;
    }
    return OperatorMatrix(std::move(m), real);
  }

  Index dim() const noexcept { return entries_.rows(); }
  const Eigen::MatrixXcd& entries() const noexcept { return entries_; }
  Complex operator()(Index n, Index m) const { return entries_(n, m); }
  bool hermitian_hint() const noexcept { return hermitian_; }

  double max_abs() const { return entries_.cwiseAbs().maxCoeff(); }
  /// max_nm |L_nm - conj(L_mn)|
  double hermiticity_defect() const { return (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff(); }

  OperatorMatrix adjoint() const { return OperatorMatrix(entries_.adjoint(), hermitian_); }

  friend OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
    detail::require_same_dim(a.dim(), b.dim(), "OperatorMatrix *");
    return checked(a.entries_ * b.entries_, "operator product");
  }
  friend OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b) {
    detail::require_same_dim(a.dim(), b.dim(), "OperatorMatrix +");
    return checked(a.entries_ + b.entries_, "operator sum", a.hermitian_ && b.hermitian_);
  }
  friend OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b) {
    detail::require_same_dim(a.dim(), b.dim(), "OperatorMatrix -");
    return checked(a.entries_ - b.entries_, "operator difference", a.hermitian_ && b.hermitian_);
  }
  friend OperatorMatrix operator*(Complex alpha, const OperatorMatrix& a) {
    return checked(alpha * a.entries_, "scalar product", a.hermitian_ && alpha.imag() == 0.0);
  }

 private:
  static OperatorMatrix checked(Eigen::MatrixXcd m, const char* what, bool hermitian = false) {
    if (!detail::all_finite(m)) throw NumericalFailure(std::string(what) + ": non-finite result");
    return OperatorMatrix(std::move(m), hermitian, Unchecked{});
  }

  struct Unchecked {};
  OperatorMatrix(Eigen::MatrixXcd entries, bool hermitian, Unchecked)
      : entries_(std::move(entries)), hermitian_(hermitian) {}

  Eigen::MatrixXcd entries_;
  bool hermitian_;
};

/// <u|v> = sum_n conj(u_n) v_n
inline Complex inner_product(const StateVector& u, const StateVector& v) {
  detail::require_same_dim(u.dim(), v.dim(), "inner_product: incompatible spaces");
  return u.coeffs().dot(v.coeffs());  // Eigen conjugates the left operand
}

/// L|v>
inline StateVector apply(const OperatorMatrix& op, const StateVector& v) {
  detail::require_same_dim(op.dim(), v.dim(), "apply");
  Eigen::VectorXcd out = op.entries() * v.coeffs();
  if (!detail::all_finite(out)) throw NumericalFailure("apply: non-finite result");
  return StateVector(std::move(out));
}

inline Complex trace(const OperatorMatrix& op) { return op.entries().trace(); }

/// [A, B] = AB - BA
inline OperatorMatrix commutator(const OperatorMatrix& a, const OperatorMatrix& b) {
  detail::require_same_dim(a.dim(), b.dim(), "commutator");
  return a * b - b * a;
}

inline double frobenius_norm(const OperatorMatrix& op) { return op.entries().norm(); }

/// Leading block of a proxy matrix plus the sizes of everything the truncation drops.
///
/// With L_proxy of dimension N' split as [[H, U], [W, T]] at N, the blocks
/// U = 1_N L X and W = X L 1_N couple the retained subspace to the remainder;
/// T = X L X acts on the remainder alone.
struct TruncationSplit {
  OperatorMatrix head;
  double upper_coupling_norm;  ///< ||U||_F, the N x (N'-N) block
  double lower_coupling_norm;  ///< ||W||_F, the (N'-N) x N block
  double tail_norm;            ///< ||T||_F
  Index proxy_dim;
};

inline TruncationSplit truncation_split(const OperatorMatrix& proxy, Index n) {
  const Index np = proxy.dim();
  detail::require(n >= 1, "truncation_split: head dimension must be positive");
  detail::require(n < np, "truncation_split: head dimension " + std::to_string(n) +
                              " must be smaller than proxy dimension " + std::to_string(np));
  const auto& e = proxy.entries();
  const Index r = np - n;
  const Eigen::MatrixXcd head = e.topLeftCorner(n, n);
  const bool herm = proxy.hermitian_hint();
  return TruncationSplit{OperatorMatrix(head, herm), e.topRightCorner(n, r).norm(), e.bottomLeftCorner(r, n).norm(),
                         e.bottomRightCorner(r, r).norm(), np};
}

}  // namespace cqt
