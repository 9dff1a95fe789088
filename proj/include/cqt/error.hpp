#pragma once

#include <stdexcept>
#include <string>

namespace cqt {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument value does not hold (nonpositive mass, x outside the box, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Operands live in spaces of different dimension.
class DimensionMismatch : public Error {
 public:
  DimensionMismatch(const std::string& what, long lhs, long rhs)
      : Error(what + ": dimension " + std::to_string(lhs) + " vs " + std::to_string(rhs)),
        lhs_(lhs),
        rhs_(rhs) {}

  long lhs() const noexcept { return lhs_; }
  long rhs() const noexcept { return rhs_; }

 private:
  long lhs_;
  long rhs_;
};

/// A request would exceed a quadrature node or memory cap.
class ResourceCapExceeded : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite value or failed to converge.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

inline void require_same_dim(long lhs, long rhs, const char* what) {
  if (lhs != rhs) throw DimensionMismatch(what, lhs, rhs);
}

}  // namespace detail
}  // namespace cqt
