#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "cqt/gaussian.hpp"

using namespace cqt;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST(GaussianNorm, AnalyticExamples) {
  const auto one = gaussian_norm_analytic(1, kPi);
  EXPECT_EQ(one.flag, Magnitude::finite);
  EXPECT_NEAR(one.value(), 1.0, 1e-15);
  EXPECT_NEAR(gaussian_norm_analytic(2, kPi / 4).value(), 64.0, 64.0 * 1e-14);
  EXPECT_NEAR(gaussian_norm_analytic(10, 1.01 * kPi).value(), 0.8614, 1e-4);
  EXPECT_NEAR(gaussian_norm_analytic(10, 1.01 * kPi).value(), std::pow(1.01, -15.0), 1e-14);
}

TEST(GaussianNorm, APiIsOneForAnyParticleCount) {
  for (int n = 1; n <= 1000; n *= 3) EXPECT_EQ(gaussian_norm_analytic(n, kPi).log_value, 0.0);
}

TEST(GaussianNorm, OverflowAndUnderflowAreFlagged) {
  const auto big = gaussian_norm_analytic(1000, 1e-3);
  EXPECT_EQ(big.flag, Magnitude::overflow);
  EXPECT_TRUE(std::isinf(big.value()));
  EXPECT_NEAR(big.log_value, 1500.0 * std::log(kPi / 1e-3), 1e-9);

  const auto tiny = gaussian_norm_analytic(1000, 1e3);
  EXPECT_EQ(tiny.flag, Magnitude::underflow);
  EXPECT_EQ(tiny.value(), 0.0);
  EXPECT_LT(tiny.log_value, -700.0);
  EXPECT_STREQ(to_string(tiny.flag), "underflow");
}

TEST(GaussianNorm, RejectsBadArguments) {
  EXPECT_THROW(gaussian_norm_analytic(0, 1.0), InvalidArgument);
  EXPECT_THROW(gaussian_norm_analytic(1, 0.0), InvalidArgument);
  EXPECT_THROW(gaussian_norm_analytic(1, -2.0), InvalidArgument);
  EXPECT_THROW(gaussian_norm_analytic(1, std::nan("")), InvalidArgument);
}

TEST(GaussianQuadrature, ThreeDimensionalExamples) {
  EXPECT_NEAR(gaussian_norm_quadrature(3, 2.0, 6.0, 257), std::pow(kPi / 2.0, 1.5), 1e-10);
  EXPECT_NEAR(gaussian_norm_quadrature(3, 2.0, 6.0, 257), 1.96870, 1e-5);
  EXPECT_NEAR(gaussian_norm_quadrature(3, kPi, 6.0, 257), 1.0, 1e-10);
}

TEST(GaussianQuadrature, AgreesWithAnalyticAcrossParameters) {
  for (int d = 1; d <= 6; ++d)
    for (double a = 0.5; a <= 6.0; a += 0.25) {
      const double L = 6.0 / std::sqrt(a);
      const double got = gaussian_norm_quadrature(d, a, L, 256);
      const double want = gaussian_norm_analytic_dims(d, a).value();
      EXPECT_NEAR(got, want, 1e-6 * want) << d << " " << a;
    }
}

TEST(GaussianQuadrature, SeparabilityAgainstFullTensorGrid) {
  for (int d = 1; d <= 4; ++d) {
    const double a = 0.8 + 0.3 * d;
    const Index m = d <= 2 ? 201 : 41;
    const double full = gaussian_norm_tensor_grid(d, a, 5.0, m);
    const double factored = gaussian_norm_quadrature(d, a, 5.0, m);
    EXPECT_NEAR(full, factored, 1e-12 * factored) << d;
  }
}

TEST(GaussianQuadrature, CapsAtSixCoordinates) {
  EXPECT_THROW(gaussian_norm_quadrature(9, 1.0, 6.0, 256), ResourceCapExceeded);
  EXPECT_THROW(gaussian_norm_tensor_grid(6, 1.0, 6.0, 256), ResourceCapExceeded);
  EXPECT_THROW(gaussian_norm_quadrature(3, 1.0, 6.0, 1), InvalidArgument);
}

TEST(Trichotomy, ThreeRegimes) {
  const auto below = limit_trichotomy(1.0, 50);
  const auto at = limit_trichotomy(kPi, 50);
  const auto above = limit_trichotomy(4.0, 50);
  EXPECT_EQ(below.behavior, LimitBehavior::diverges_to_inf);
  EXPECT_EQ(at.behavior, LimitBehavior::constant_1);
  EXPECT_EQ(above.behavior, LimitBehavior::diverges_to_0);
  ASSERT_EQ(below.sequence.size(), 50u);
  for (std::size_t i = 1; i < 50; ++i) {
    EXPECT_GT(below.sequence[i].log_value, below.sequence[i - 1].log_value);
    EXPECT_EQ(at.sequence[i].log_value, 0.0);
    EXPECT_LT(above.sequence[i].log_value, above.sequence[i - 1].log_value);
  }
  EXPECT_STREQ(to_string(at.behavior), "constant_1");
}

TEST(Trichotomy, DeclaredPrecisionDecidesEquality) {
  EXPECT_EQ(limit_trichotomy(3.1416, 5).behavior, LimitBehavior::diverges_to_0);
  EXPECT_EQ(limit_trichotomy(3.1416, 5, 1e-4).behavior, LimitBehavior::constant_1);
  EXPECT_EQ(limit_trichotomy(3.1415, 5, 1e-5).behavior, LimitBehavior::diverges_to_inf);
}

TEST(Precision, SmallEpsilonMatchesLinearization) {
  for (int n : {1, 10, 100, 1000}) {
    const auto r = precision_requirement(n, 1e-3);
    const double linear = 2.0 * 1e-3 / (3.0 * n);
    EXPECT_NEAR(r.delta_max / linear, 1.0, 0.05) << n;
    // Independent closed form on the a > pi side: (1 + delta)^{-3N/2} = 1 - epsilon.
    EXPECT_NEAR(r.delta_max, std::expm1(-2.0 / (3.0 * n) * std::log1p(-1e-3)), 1e-12 * r.delta_max);
  }
}

TEST(Precision, InverseScalingInParticleCount) {
  double prev = precision_requirement(10, 0.01).delta_max;
  for (int n = 20; n <= 160; n *= 2) {
    const double d = precision_requirement(n, 0.01).delta_max;
    EXPECT_NEAR(prev / d, 2.0, 0.02) << n;
    prev = d;
  }
}

TEST(Precision, SingleParticleLooseTolerance) {
  const auto r = precision_requirement(1, 0.99);
  EXPECT_NEAR(r.delta_max, std::pow(0.01, -2.0 / 3.0) - 1.0, 1e-10);
  EXPECT_NEAR(r.delta_max, 20.54, 0.01);
  EXPECT_EQ(r.pi_digits_required, 1);
}

TEST(Precision, DigitsGrowWithParticleCount) {
  int prev = 0;
  for (int n = 1; n <= 1 << 20; n *= 4) {
    const auto r = precision_requirement(n, 1e-6);
    EXPECT_GE(r.pi_digits_required, prev);
    EXPECT_EQ(r.pi_digits_required, std::max(1, static_cast<int>(std::ceil(std::log10(kPi / r.delta_max)))));
    prev = r.pi_digits_required;
  }
  EXPECT_GE(prev, 12);
  EXPECT_THROW(precision_requirement(1, 0.0), InvalidArgument);
  EXPECT_THROW(precision_requirement(1, 1.0), InvalidArgument);
  EXPECT_THROW(precision_requirement(0, 0.1), InvalidArgument);
}
