#pragma once

// Time-sliced propagator amplitude
//
//   A ~ (m K / (2 pi i hbar T))^{D K / 2} int exp(i S / hbar) d^D Q_1 ... d^D Q_{K-1}
//
// with the trapezoidal discrete action of a path Q_0 = Q', ..., Q_K = Q''.
// Imaginary time replaces exp(i S / hbar) by exp(-S_E / hbar) and drops the
// phase of the prefactor. The square root of -i is the principal branch
// exp(-i pi / 4), applied once per half-power.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "cqt/error.hpp"
#include "cqt/hilbert.hpp"
#include "cqt/parallel.hpp"

namespace cqt {

enum class TimeMode { real_time, imaginary_time };

/// Point Q = (x_1, y_1, z_1, ..., z_N) of configuration space, D = 3N coordinates
/// (any D >= 1 is accepted).
class Configuration {
 public:
  explicit Configuration(std::vector<double> coords) : coords_(std::move(coords)) {
    detail::require(!coords_.empty(), "Configuration: needs at least one coordinate");
    for (double c : coords_) detail::require(std::isfinite(c), "Configuration: non-finite coordinate");
  }
  Configuration(std::initializer_list<double> coords) : Configuration(std::vector<double>(coords)) {}

  std::size_t dim() const noexcept { return coords_.size(); }
  std::span<const double> coords() const noexcept { return coords_; }
  double operator[](std::size_t i) const { return coords_[i]; }

  /// Largest |coordinate|.
  double max_abs() const {
    double m = 0.0;
    for (double c : coords_) m = std::max(m, std::abs(c));
    return m;
  }

 private:
  std::vector<double> coords_;
};

inline double squared_distance(const Configuration& a, const Configuration& b) {
  detail::require_same_dim(static_cast<long>(a.dim()), static_cast<long>(b.dim()), "squared_distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// --- potentials -------------------------------------------------------------

struct FreePotential {};
/// V = (1/2) m omega^2 |Q|^2
struct HarmonicPotential {
  double omega;
};
/// V = 0 inside [0, width]^D, +infinity outside.
struct BoxPotential {
  double width;
};
/// V = sum_d sum_k c_k x_d^k, coefficients in increasing degree.
struct PolynomialPotential {
  std::vector<double> coefficients;
};

/// Closed description of V(Q).
class PotentialSpec {
 public:
  using Kind = std::variant<FreePotential, HarmonicPotential, BoxPotential, PolynomialPotential>;

  PotentialSpec() : kind_(FreePotential{}) {}

  static PotentialSpec free() { return PotentialSpec(FreePotential{}); }
  static PotentialSpec harmonic(double omega) {
    detail::require(omega > 0.0 && std::isfinite(omega), "harmonic potential: omega must be positive");
    return PotentialSpec(HarmonicPotential{omega});
  }
  static PotentialSpec box(double width) {
    detail::require(width > 0.0 && std::isfinite(width), "box potential: width must be positive");
    return PotentialSpec(BoxPotential{width});
  }
  static PotentialSpec polynomial(std::vector<double> coefficients) {
    for (double c : coefficients) detail::require(std::isfinite(c), "polynomial potential: non-finite coefficient");
    return PotentialSpec(PolynomialPotential{std::move(coefficients)});
  }

  const Kind& kind() const noexcept { return kind_; }
  bool is_free() const noexcept { return std::holds_alternative<FreePotential>(kind_); }
  const HarmonicPotential* harmonic_params() const noexcept { return std::get_if<HarmonicPotential>(&kind_); }
  /// Free and harmonic potentials make the sliced integrand an exact Gaussian.
  bool is_quadratic() const noexcept { return is_free() || harmonic_params() != nullptr; }

  std::string name() const {
    return std::visit(
        [](const auto& v) -> std::string {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, FreePotential>) return "free";
          else if constexpr (std::is_same_v<T, HarmonicPotential>) return "harmonic";
          else if constexpr (std::is_same_v<T, BoxPotential>) return "box";
          else return "polynomial";
        },
        kind_);
  }

  double operator()(std::span<const double> q, double mass) const {
    return std::visit(
        [&](const auto& v) -> double {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, FreePotential>) {
            return 0.0;
          } else if constexpr (std::is_same_v<T, HarmonicPotential>) {
            double r2 = 0.0;
            for (double x : q) r2 += x * x;
            return 0.5 * mass * v.omega * v.omega * r2;
          } else if constexpr (std::is_same_v<T, BoxPotential>) {
            for (double x : q)
              if (x < 0.0 || x > v.width) return std::numeric_limits<double>::infinity();
            return 0.0;
          } else {
            double total = 0.0;
            for (double x : q) {
              double p = 0.0;
              for (auto it = v.coefficients.rbegin(); it != v.coefficients.rend(); ++it) p = p * x + *it;
              total += p;
            }
            return total;
          }
        },
        kind_);
  }
  double operator()(const Configuration& q, double mass) const { return (*this)(q.coords(), mass); }

 private:
  explicit PotentialSpec(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

// --- discrete action --------------------------------------------------------

/// Trapezoidal potential weights (T/K)(1/2, 1, ..., 1, 1/2) over the K+1 path points.
inline std::vector<double> potential_weights(int slices, double duration) {
  detail::require(slices >= 1, "potential_weights: need K >= 1");
  const double dt = duration / slices;
  std::vector<double> w(static_cast<std::size_t>(slices) + 1, dt);
  w.front() = 0.5 * dt;
  w.back() = 0.5 * dt;
  return w;
}

/// S = (m/2)(K/T) sum ||Q_k - Q_{k-1}||^2 - (T/K)(V_0/2 + V_1 + ... + V_{K-1} + V_K/2).
/// In imaginary time the potential term enters with a plus sign (Euclidean action).
inline double action(std::span<const Configuration> path, double mass, double duration, const PotentialSpec& v,
                     TimeMode mode) {
  detail::require(path.size() >= 2, "action: a path needs at least two points (K >= 1)");
  detail::require(mass > 0.0, "action: mass must be positive");
  detail::require(duration > 0.0, "action: duration must be positive");
  const std::size_t dim = path.front().dim();
  for (const auto& q : path) detail::require_same_dim(static_cast<long>(q.dim()), static_cast<long>(dim), "action");

  const int slices = static_cast<int>(path.size()) - 1;
  double kinetic = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) kinetic += squared_distance(path[k], path[k - 1]);
  kinetic *= 0.5 * mass * slices / duration;

  const auto w = potential_weights(slices, duration);
  double potential = 0.0;
  for (std::size_t k = 0; k < path.size(); ++k) potential += w[k] * v(path[k], mass);

  return mode == TimeMode::real_time ? kinetic - potential : kinetic + potential;
}

// --- requests and results ---------------------------------------------------

/// Per-slice integration grid: M uniform nodes per coordinate on [-L, L].
struct GridSpec {
  std::optional<double> half_width;  ///< L; unset means |endpoint|_max + 6 sqrt(hbar T / m)
  Index points = 257;                ///< M
};

enum class Quadrature {
  automatic,    ///< imaginary time: tensor grid, Monte Carlo beyond the node cap; real time: gaussian
  tensor_grid,  ///< trapezoid on [-L, L]^D per intermediate slice
  monte_carlo,  ///< free Brownian-bridge sampling, imaginary time only
  gaussian,     ///< closed-form evaluation of the sliced Gaussian/Fresnel integral, quadratic V only
};

inline constexpr double kNodeCap = 1e8;

struct PropagatorRequest {
  Configuration q_start{0.0};
  Configuration q_end{0.0};
  double mass = 1.0;
  double hbar = 1.0;
  double duration = 1.0;
  int slices = 1;  ///< K
  TimeMode mode = TimeMode::imaginary_time;
  GridSpec grid{};
  Quadrature method = Quadrature::automatic;
  std::uint64_t seed = 0;
  Index mc_samples = 1 << 16;

  void validate() const {
    detail::require_same_dim(static_cast<long>(q_start.dim()), static_cast<long>(q_end.dim()),
                             "PropagatorRequest: endpoints");
    detail::require(mass > 0.0 && std::isfinite(mass), "PropagatorRequest: mass must be positive");
    detail::require(hbar > 0.0 && std::isfinite(hbar), "PropagatorRequest: hbar must be positive");
    detail::require(duration > 0.0 && std::isfinite(duration), "PropagatorRequest: duration must be positive");
    detail::require(slices >= 1, "PropagatorRequest: K must be >= 1");
    detail::require(grid.points >= 2, "PropagatorRequest: grid needs M >= 2 points");
    if (grid.half_width)
      detail::require(*grid.half_width > 0.0 && std::isfinite(*grid.half_width),
                      "PropagatorRequest: grid half width must be positive");
    detail::require(mc_samples >= 2, "PropagatorRequest: need at least two Monte Carlo samples");
  }

  std::size_t dim() const noexcept { return q_start.dim(); }

  double half_width() const {
    if (grid.half_width) return *grid.half_width;
    return std::max(q_start.max_abs(), q_end.max_abs()) + 6.0 * std::sqrt(hbar * duration / mass);
  }
};

struct PropagatorResult {
  Complex amplitude;
  int slices;
  double quadrature_points;  ///< grid nodes visited (M^D (K-1)) or Monte Carlo samples
  double estimated_error;    ///< absolute; grid: fine vs coarse grid, MC: standard error
  Quadrature method;         ///< method actually used
};

/// Exponent of the prefactor (m K / 2 pi i hbar T): D K / 2.
inline double prefactor_exponent(std::size_t dim, int slices) {
  return static_cast<double>(dim) * static_cast<double>(slices) / 2.0;
}

// --- analytic oracles -------------------------------------------------------

/// Free kernel. Real time: sqrt(m / 2 pi i hbar t) exp(i m dx^2 / 2 hbar t);
/// imaginary time: sqrt(m / 2 pi hbar tau) exp(-m dx^2 / 2 hbar tau).
inline Complex analytic_free_propagator(double x1, double x2, double mass, double hbar, double duration,
                                        TimeMode mode) {
  detail::require(duration > 0.0, "analytic_free_propagator: duration must be positive");
  detail::require(mass > 0.0 && hbar > 0.0, "analytic_free_propagator: mass and hbar must be positive");
  const double dx = x2 - x1;
  const double modulus = std::sqrt(mass / (2.0 * std::numbers::pi * hbar * duration));
  const double exponent = mass * dx * dx / (2.0 * hbar * duration);
  if (mode == TimeMode::imaginary_time) return modulus * std::exp(-exponent);
  return modulus * std::polar(1.0, exponent - std::numbers::pi / 4.0);
}

/// Mehler kernel of the oscillator V = m omega^2 x^2 / 2.
///
/// The real-time phase carries the Maslov correction exp(-i pi/2 floor(omega t / pi)),
/// which keeps the kernel continuous between caustics.
inline Complex analytic_harmonic_propagator(double x1, double x2, double mass, double omega, double hbar,
                                            double duration, TimeMode mode) {
  detail::require(duration > 0.0, "analytic_harmonic_propagator: duration must be positive");
  detail::require(mass > 0.0 && hbar > 0.0 && omega > 0.0,
                  "analytic_harmonic_propagator: mass, hbar and omega must be positive");
  const double wt = omega * duration;
  const double quad_sum = x1 * x1 + x2 * x2;
  const double cross = 2.0 * x1 * x2;
  if (mode == TimeMode::imaginary_time) {
    const double s = std::sinh(wt);
    const double c = std::cosh(wt);
    const double modulus = std::sqrt(mass * omega / (2.0 * std::numbers::pi * hbar * s));
    return modulus * std::exp(-mass * omega / (2.0 * hbar * s) * (quad_sum * c - cross));
  }
  const double s = std::sin(wt);
  const double c = std::cos(wt);
  if (std::abs(s) <= 1e-12)
    throw InvalidArgument("analytic_harmonic_propagator: omega t is a multiple of pi (caustic)");
  const double modulus = std::sqrt(mass * omega / (2.0 * std::numbers::pi * hbar * std::abs(s)));
  const double maslov = std::floor(wt / std::numbers::pi);
  const double phase = mass * omega / (2.0 * hbar * s) * (quad_sum * c - cross) - std::numbers::pi / 4.0 -
                       std::numbers::pi / 2.0 * maslov;
  return modulus * std::polar(1.0, phase);
}

/// D-dimensional oracle for a request, or nullopt when V has no closed form.
inline std::optional<Complex> analytic_propagator(const PropagatorRequest& req, const PotentialSpec& v) {
  req.validate();
  if (!v.is_quadratic()) return std::nullopt;
  const auto* h = v.harmonic_params();
  Complex amp = 1.0;
  for (std::size_t d = 0; d < req.dim(); ++d) {
    amp *= h ? analytic_harmonic_propagator(req.q_start[d], req.q_end[d], req.mass, h->omega, req.hbar, req.duration,
                                            req.mode)
             : analytic_free_propagator(req.q_start[d], req.q_end[d], req.mass, req.hbar, req.duration, req.mode);
  }
  return amp;
}

namespace detail {

inline void require_finite_amplitude(Complex a, const char* what) {
  if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
    throw NumericalFailure(std::string(what) + ": non-finite integrand or amplitude");
}

/// One-slice free kernel per coordinate, including its share (m K / 2 pi i hbar T)^{1/2}
/// of the prefactor.
struct SliceKernel {
  double kappa;    ///< m / (hbar dt)
  double modulus;  ///< sqrt(m / (2 pi hbar dt))
  TimeMode mode;

  Complex operator()(double x, double y) const {
    const double e = 0.5 * kappa * (x - y) * (x - y);
    if (mode == TimeMode::imaginary_time) return modulus * std::exp(-e);
    return modulus * std::polar(1.0, e - std::numbers::pi / 4.0);
  }
};

/// Node weight exp(-dt V / hbar) or exp(-i dt V / hbar) for the given trapezoid share.
inline Complex potential_factor(double v, double weight_dt, double hbar, TimeMode mode) {
  if (mode == TimeMode::imaginary_time) return std::exp(-weight_dt * v / hbar);
  if (!std::isfinite(v)) throw NumericalFailure("sliced_amplitude: non-finite potential in real time");
  return std::polar(1.0, -weight_dt * v / hbar);
}

inline Complex direct_amplitude(const PropagatorRequest& req, const PotentialSpec& v) {
  const double dt = req.duration / req.slices;
  const SliceKernel k{req.mass / (req.hbar * dt), std::sqrt(req.mass / (2.0 * std::numbers::pi * req.hbar * dt)),
                      req.mode};
  Complex amp = 1.0;
  for (std::size_t d = 0; d < req.dim(); ++d) amp *= k(req.q_start[d], req.q_end[d]);
  amp *= potential_factor(v(req.q_start, req.mass), 0.5 * dt, req.hbar, req.mode);
  amp *= potential_factor(v(req.q_end, req.mass), 0.5 * dt, req.hbar, req.mode);
  return amp;
}

inline double grid_node_count(std::size_t dim, Index points) {
  return std::pow(static_cast<double>(points), static_cast<double>(dim));
}

/// Contracts the chain of slice kernels over an M^D trapezoid grid.
///
/// The grid sum over all (K-1) intermediate configurations factorizes into K
/// kernel applications; the D-dimensional free kernel is a tensor product of
/// 1-D kernels and is applied one axis at a time.
inline Complex grid_contraction(const PropagatorRequest& req, const PotentialSpec& v, Index points, double half_width) {
  const std::size_t dim = req.dim();
  const int slices = req.slices;
  const double dt = req.duration / slices;
  const SliceKernel kern{req.mass / (req.hbar * dt), std::sqrt(req.mass / (2.0 * std::numbers::pi * req.hbar * dt)),
                         req.mode};

  const Index m = points;
  const double h = 2.0 * half_width / static_cast<double>(m - 1);
  std::vector<double> x(static_cast<std::size_t>(m));
  for (Index j = 0; j < m; ++j) x[static_cast<std::size_t>(j)] = -half_width + static_cast<double>(j) * h;
  x.back() = half_width;

  Index nodes = 1;
  for (std::size_t d = 0; d < dim; ++d) nodes *= m;

  // kmat(y, z): kernel between grid coordinates; start/end: kernel from Q' / to Q'' per axis.
  Eigen::MatrixXcd kmat(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) kmat(i, j) = kern(x[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(j)]);

  // Node weight: trapezoid volume times the full-slice potential factor.
  Eigen::VectorXcd weight(nodes);
  {
    std::vector<double> q(dim);
    for (Index idx = 0; idx < nodes; ++idx) {
      Index rem = idx;
      double vol = 1.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const Index j = rem % m;
        rem /= m;
        q[d] = x[static_cast<std::size_t>(j)];
        vol *= (j == 0 || j == m - 1) ? 0.5 * h : h;
      }
      weight(idx) = vol * potential_factor(v(q, req.mass), dt, req.hbar, req.mode);
    }
  }

  // psi(Q_1) = K(Q', Q_1) exp(-dt V(Q') / 2 hbar)
  Eigen::VectorXcd psi(nodes);
  {
    std::vector<Eigen::VectorXcd> axis(dim, Eigen::VectorXcd(m));
    for (std::size_t d = 0; d < dim; ++d)
      for (Index j = 0; j < m; ++j) axis[d](j) = kern(req.q_start[d], x[static_cast<std::size_t>(j)]);
    for (Index idx = 0; idx < nodes; ++idx) {
      Index rem = idx;
      Complex val = 1.0;
      for (std::size_t d = 0; d < dim; ++d) {
        val *= axis[d](rem % m);
        rem /= m;
      }
      psi(idx) = val;
    }
    psi *= potential_factor(v(req.q_start, req.mass), 0.5 * dt, req.hbar, req.mode);
  }

  Eigen::VectorXcd scratch(nodes);
  for (int step = 1; step < slices - 1; ++step) {
    psi.array() *= weight.array();
    Index stride = 1;
    for (std::size_t d = 0; d < dim; ++d) {
      const Index outer = nodes / (stride * m);
      parallel_for(static_cast<std::size_t>(outer), [&](std::size_t b, std::size_t e) {
        for (std::size_t o = b; o < e; ++o) {
          const Index off = static_cast<Index>(o) * stride * m;
          Eigen::Map<const Eigen::MatrixXcd> in(psi.data() + off, stride, m);
          Eigen::Map<Eigen::MatrixXcd> out(scratch.data() + off, stride, m);
          out.noalias() = in * kmat;
        }
      });
      psi.swap(scratch);
      stride *= m;
    }
  }

  // Close the chain onto Q''.
  psi.array() *= weight.array();
  std::vector<Eigen::VectorXcd> axis(dim, Eigen::VectorXcd(m));
  for (std::size_t d = 0; d < dim; ++d)
    for (Index j = 0; j < m; ++j) axis[d](j) = kern(x[static_cast<std::size_t>(j)], req.q_end[d]);
  Complex amp = 0.0;
  for (Index idx = 0; idx < nodes; ++idx) {
    Index rem = idx;
    Complex val = psi(idx);
    for (std::size_t d = 0; d < dim; ++d) {
      val *= axis[d](rem % m);
      rem /= m;
    }
    amp += val;
  }
  return amp * potential_factor(v(req.q_end, req.mass), 0.5 * dt, req.hbar, req.mode);
}

/// Exact value of the sliced integral over R^{D(K-1)} for V = 0 or harmonic.
///
/// Per coordinate the discrete action is S = x^T G x / 2 + g^T x + c in the
/// K-1 interior points, so the integral is Gaussian (imaginary time) or
/// Fresnel (real time) with the eigenvalue signs of G fixing the phase.
inline Complex gaussian_amplitude(const PropagatorRequest& req, const PotentialSpec& v) {
  const auto* harm = v.harmonic_params();
  const double omega2 = harm ? harm->omega * harm->omega : 0.0;
  const int slices = req.slices;
  const Index n = slices - 1;
  const double dt = req.duration / slices;
  const double kappa = req.mass / dt;
  const double hbar = req.hbar;
  const bool real = req.mode == TimeMode::real_time;
  const double sign = real ? -1.0 : 1.0;  // potential enters S with -, S_E with +
  const double pot = sign * dt * req.mass * omega2;

  double log_modulus = 0.0;
  double phase = 0.0;
  for (std::size_t d = 0; d < req.dim(); ++d) {
    const double a = req.q_start[d];
    const double b = req.q_end[d];
    // Per-coordinate prefactor (kappa / 2 pi hbar)^{K/2}, phase exp(-i pi K / 4) in real time.
    log_modulus += 0.5 * slices * std::log(kappa / (2.0 * std::numbers::pi * hbar));
    if (real) phase -= std::numbers::pi / 4.0 * slices;

    if (n == 0) {
      const double s = 0.5 * kappa * (b - a) * (b - a) + 0.25 * pot * (a * a + b * b);
      if (real) phase += s / hbar;
      else log_modulus -= s / hbar;
      continue;
    }

    const double c = 0.5 * kappa * (a * a + b * b) + 0.25 * pot * (a * a + b * b);
    Eigen::VectorXd diag = Eigen::VectorXd::Constant(n, 2.0 * kappa + pot);
    Eigen::VectorXd sub = Eigen::VectorXd::Constant(std::max<Index>(n - 1, 0), -kappa);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    g(0) -= kappa * a;
    g(n - 1) -= kappa * b;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw NumericalFailure("gaussian_amplitude: eigen-decomposition failed");
    const Eigen::VectorXd mu = es.eigenvalues();
    const double scale = mu.cwiseAbs().maxCoeff();
    for (Index j = 0; j < n; ++j)
      if (std::abs(mu(j)) <= 1e-13 * scale)
        throw NumericalFailure("gaussian_amplitude: singular quadratic form (discrete caustic)");

    // Stationary value c - g^T G^{-1} g / 2.
    const Eigen::VectorXd gt = es.eigenvectors().transpose() * g;
    double quad = 0.0;
    for (Index j = 0; j < n; ++j) quad += gt(j) * gt(j) / mu(j);
    const double s_classical = c - 0.5 * quad;

    // (2 pi hbar)^{n/2} prod_j |mu_j|^{-1/2}, phase +-pi/4 per eigenvalue in real time.
    log_modulus += 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi * hbar);
    for (Index j = 0; j < n; ++j) {
      log_modulus -= 0.5 * std::log(std::abs(mu(j)));
      if (real) phase += (mu(j) > 0.0 ? 1.0 : -1.0) * std::numbers::pi / 4.0;
    }
    if (real) phase += s_classical / hbar;
    else log_modulus -= s_classical / hbar;
  }
  const Complex amp = std::polar(std::exp(log_modulus), phase);
  require_finite_amplitude(amp, "gaussian_amplitude");
  return amp;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Imaginary-time estimate A = A_free(Q', Q'') E[exp(-(T/K) sum_k w_k V(Q_k) / hbar)]
/// with paths drawn from the free Brownian bridge between the end points.
///
/// Samples are grouped in fixed batches, each seeded from (seed, batch); the first
/// radial uniform of every path is stratified within its batch. Batch partial sums
/// are reduced in batch order, so the result depends on seed and sample count only.
inline std::pair<Complex, double> monte_carlo_amplitude(const PropagatorRequest& req, const PotentialSpec& v) {
  constexpr Index kBatch = 4096;
  const std::size_t dim = req.dim();
  const int slices = req.slices;
  const double dt = req.duration / slices;
  const double sigma2 = req.hbar * dt / req.mass;
  const Index samples = req.mc_samples;
  const Index batches = (samples + kBatch - 1) / kBatch;

  Complex free_amp = 1.0;
  for (std::size_t d = 0; d < dim; ++d)
    free_amp *= analytic_free_propagator(req.q_start[d], req.q_end[d], req.mass, req.hbar, req.duration,
                                         TimeMode::imaginary_time);
  const double v_ends = 0.5 * dt * (v(req.q_start, req.mass) + v(req.q_end, req.mass));

  std::vector<double> sum(static_cast<std::size_t>(batches), 0.0);
  std::vector<double> sum_sq(static_cast<std::size_t>(batches), 0.0);
  parallel_for(static_cast<std::size_t>(batches), [&](std::size_t b0, std::size_t b1) {
    std::vector<double> cur(dim);
    std::vector<double> q(dim);
    for (std::size_t b = b0; b < b1; ++b) {
      std::mt19937_64 rng(splitmix64(req.seed ^ splitmix64(b)));
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      const Index begin = static_cast<Index>(b) * kBatch;
      const Index count = std::min(kBatch, samples - begin);
      for (Index s = 0; s < count; ++s) {
        bool first = true;
        bool have_spare = false;
        double spare = 0.0;
        auto normal = [&]() {
          if (have_spare) {
            have_spare = false;
            return spare;
          }
          double u1 = first ? (static_cast<double>(s) + unif(rng)) / static_cast<double>(count) : unif(rng);
          first = false;
          u1 = std::max(u1, std::numeric_limits<double>::min());
          const double r = std::sqrt(-2.0 * std::log(u1));
          const double th = 2.0 * std::numbers::pi * unif(rng);
          spare = r * std::sin(th);
          have_spare = true;
          return r * std::cos(th);
        };
        for (std::size_t d = 0; d < dim; ++d) cur[d] = req.q_start[d];
        double weighted_v = v_ends;
        for (int k = 1; k < slices; ++k) {
          const double remaining = static_cast<double>(slices - k + 1);
          const double var = sigma2 * (remaining - 1.0) / remaining;
          for (std::size_t d = 0; d < dim; ++d) {
            const double mean = cur[d] + (req.q_end[d] - cur[d]) / remaining;
            q[d] = mean + std::sqrt(var) * normal();
          }
          weighted_v += dt * v(q, req.mass);
          cur.swap(q);
        }
        const double f = std::exp(-weighted_v / req.hbar);
        sum[b] += f;
        sum_sq[b] += f * f;
      }
    }
  });
  double total = 0.0;
  double total_sq = 0.0;
  for (Index b = 0; b < batches; ++b) {
    total += sum[static_cast<std::size_t>(b)];
    total_sq += sum_sq[static_cast<std::size_t>(b)];
  }
  const double ns = static_cast<double>(samples);
  const double mean = total / ns;
  const double var = std::max(0.0, total_sq / ns - mean * mean) / (ns - 1.0);
  const Complex amp = free_amp * mean;
  require_finite_amplitude(amp, "monte_carlo_amplitude");
  return {amp, std::abs(free_amp) * std::sqrt(var)};
}

}  // namespace detail

/// Time-sliced amplitude <Q'| exp(-i H T / hbar) |Q''> (or its imaginary-time analogue).
inline PropagatorResult sliced_amplitude(const PropagatorRequest& req, const PotentialSpec& v) {
  req.validate();
  const std::size_t dim = req.dim();
  const int slices = req.slices;
  const bool real = req.mode == TimeMode::real_time;

  if (slices == 1) {
    const Complex amp = detail::direct_amplitude(req, v);
    detail::require_finite_amplitude(amp, "sliced_amplitude");
    return {amp, 1, 0.0, 0.0, req.method == Quadrature::automatic ? Quadrature::tensor_grid : req.method};
  }

  Quadrature method = req.method;
  const double per_slice = detail::grid_node_count(dim, req.grid.points);
  const double nodes = per_slice * (slices - 1);
  if (method == Quadrature::automatic) {
    if (real) method = Quadrature::gaussian;
    else method = nodes <= kNodeCap ? Quadrature::tensor_grid : Quadrature::monte_carlo;
  }

  switch (method) {
    case Quadrature::gaussian: {
      if (!v.is_quadratic())
        throw InvalidArgument("sliced_amplitude: gaussian evaluation needs a free or harmonic potential; " +
                              std::string(real ? "real-time evaluation of other potentials is not supported"
                                               : "use tensor_grid or monte_carlo"));
      return {detail::gaussian_amplitude(req, v), slices, 0.0, 0.0, Quadrature::gaussian};
    }
    case Quadrature::monte_carlo: {
      if (real) throw ResourceCapExceeded("sliced_amplitude: Monte Carlo fallback is available in imaginary time only");
      auto [amp, err] = detail::monte_carlo_amplitude(req, v);
      return {amp, slices, static_cast<double>(req.mc_samples), err, Quadrature::monte_carlo};
    }
    case Quadrature::tensor_grid:
    default: {
      if (real)
        throw InvalidArgument(
            "sliced_amplitude: real-time tensor-grid quadrature with K >= 2 is ill-conditioned; use gaussian");
      if (nodes > kNodeCap)
        throw ResourceCapExceeded("sliced_amplitude: M^D (K-1) = " + std::to_string(static_cast<long long>(nodes)) +
                                  " grid nodes exceeds the cap of 1e8");
      const double L = req.half_width();
      const Complex amp = detail::grid_contraction(req, v, req.grid.points, L);
      detail::require_finite_amplitude(amp, "sliced_amplitude");
      // Coarse grid keeps every other node where possible.
      const Index coarse = std::max<Index>(2, (req.grid.points + 1) / 2);
      double err = std::abs(amp);
      if (coarse < req.grid.points) err = std::abs(amp - detail::grid_contraction(req, v, coarse, L));
      return {amp, slices, nodes, err, Quadrature::tensor_grid};
    }
  }
}

struct ConvergencePoint {
  int slices;
  Complex amplitude;
  Complex reference;
  double relative_error;   ///< |A_K - A_exact| / |A_exact|
  double estimated_error;  ///< quadrature error estimate of A_K
};

/// Relative error against the closed-form kernel for each K in slice_counts.
inline std::vector<ConvergencePoint> convergence_scan(const PropagatorRequest& request_template,
                                                      const PotentialSpec& v, std::span<const int> slice_counts) {
  const auto reference = analytic_propagator(request_template, v);
  if (!reference) throw InvalidArgument("convergence_scan: no analytic oracle for a " + v.name() + " potential");
  std::vector<ConvergencePoint> out;
  out.reserve(slice_counts.size());
  for (int k : slice_counts) {
    PropagatorRequest req = request_template;
    req.slices = k;
    const PropagatorResult r = sliced_amplitude(req, v);
    out.push_back({k, r.amplitude, *reference, std::abs(r.amplitude - *reference) / std::abs(*reference),
                   r.estimated_error});
  }
  return out;
}

/// Deviation of a profile from its reconstruction through the discretized
/// closure relation sum_j h |x_j><x_j| on M nodes over [-L, L].
///
/// Position kets on the grid are band-limited, <y|x_j> = sinc((y - x_j)/h) / h,
/// so the reconstruction is psi(y) ~ sum_j psi(x_j) sinc((y - x_j)/h). Returns the
/// largest |psi(y) - reconstruction(y)| over the midpoints between nodes.
template <typename Profile>
double identity_resolution_check(double half_width, Index points, Profile&& profile) {
  detail::require(half_width > 0.0, "identity_resolution_check: half width must be positive");
  detail::require(points >= 2, "identity_resolution_check: need M >= 2");
  const double h = 2.0 * half_width / static_cast<double>(points - 1);
  std::vector<double> x(static_cast<std::size_t>(points));
  std::vector<Complex> f(static_cast<std::size_t>(points));
  for (Index j = 0; j < points; ++j) {
    x[static_cast<std::size_t>(j)] = -half_width + static_cast<double>(j) * h;
    f[static_cast<std::size_t>(j)] = Complex(profile(x[static_cast<std::size_t>(j)]));
  }
  double worst = 0.0;
  for (Index i = 0; i + 1 < points; ++i) {
    const double y = x[static_cast<std::size_t>(i)] + 0.5 * h;
    Complex rec = 0.0;
    for (Index j = 0; j < points; ++j) {
      const double u = (y - x[static_cast<std::size_t>(j)]) / h;
      rec += f[static_cast<std::size_t>(j)] * (std::sin(std::numbers::pi * u) / (std::numbers::pi * u));
    }
    worst = std::max(worst, std::abs(Complex(profile(y)) - rec));
  }
  return worst;
}

}  // namespace cqt
