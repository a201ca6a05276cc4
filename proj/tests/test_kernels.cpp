#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "randtree/kernels.hpp"

using namespace randtree;

namespace {

std::vector<double> random_vector(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(gen);
  return v;
}

long double dot_long(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return s;
}

}  // namespace

TEST(Kernels, ScalarDotMatchesExtendedPrecision) {
  std::mt19937_64 gen(1);
  for (std::size_t n : {0u, 1u, 2u, 7u, 64u, 1001u}) {
    const auto a = random_vector(gen, n);
    const auto b = random_vector(gen, n);
    EXPECT_NEAR(kernels::scalar::dot(a.data(), b.data(), n), static_cast<double>(dot_long(a, b)),
                1e-13 * static_cast<double>(n + 1));
  }
}

TEST(Kernels, VariantsAgreeWithScalar) {
  std::mt19937_64 gen(2);
  const bool avx2 = kernels::avx2::available();
  const bool neon = kernels::neon::available();
  if (!avx2 && !neon) GTEST_SKIP() << "no vector unit on this host";
  for (std::size_t n = 0; n < 300; n += 7) {
    const auto a = random_vector(gen, n);
    const auto b = random_vector(gen, n);
    const double ref = kernels::scalar::dot(a.data(), b.data(), n);
    const double qs[] = {0.0, 0.3, 0.9, 0.999, 1.0};
    if (avx2) {
      EXPECT_NEAR(kernels::avx2::dot(a.data(), b.data(), n), ref, 1e-13 * static_cast<double>(n + 1));
      for (double q : qs) {
        const double r = kernels::scalar::discounted_sum(a.data(), n, q);
        EXPECT_NEAR(kernels::avx2::discounted_sum(a.data(), n, q), r, 1e-12 * static_cast<double>(n + 1))
            << "n=" << n << " q=" << q;
      }
    }
    if (neon) {
      EXPECT_NEAR(kernels::neon::dot(a.data(), b.data(), n), ref, 1e-13 * static_cast<double>(n + 1));
      for (double q : qs) {
        const double r = kernels::scalar::discounted_sum(a.data(), n, q);
        EXPECT_NEAR(kernels::neon::discounted_sum(a.data(), n, q), r, 1e-12 * static_cast<double>(n + 1));
      }
    }
  }
}

TEST(Kernels, DiscountedSumMatchesPowerSeries) {
  std::mt19937_64 gen(3);
  const auto v = random_vector(gen, 500);
  const auto before = kernels::active_isa();
  for (double q : {0.1, 0.5, 0.95, 0.9999}) {
    long double ref = 0.0L;
    for (std::size_t i = 0; i < v.size(); ++i) ref += v[i] * std::pow(static_cast<long double>(q), i);
    for (auto isa : {kernels::Isa::Scalar, kernels::Isa::Avx2, kernels::Isa::Neon}) {
      kernels::select_isa(isa);
      EXPECT_NEAR(kernels::discounted_sum(v, q), static_cast<double>(ref), 1e-11);
    }
  }
  kernels::select_isa(before);
}

TEST(Kernels, DispatchFallsBackToScalar) {
  const auto before = kernels::active_isa();
  if (!kernels::neon::available()) {
    EXPECT_EQ(kernels::select_isa(kernels::Isa::Neon), kernels::Isa::Scalar);
  }
  EXPECT_EQ(kernels::select_isa(kernels::Isa::Scalar), kernels::Isa::Scalar);
  EXPECT_EQ(kernels::active_isa(), kernels::Isa::Scalar);
  kernels::select_isa(before);
}

TEST(Kernels, DotRejectsLengthMismatch) {
  const std::vector<double> a(3, 1.0), b(4, 1.0);
  EXPECT_THROW(kernels::dot(a, b), std::exception);
}

TEST(Kernels, DiscountedSumGeometricClosedForm) {
  // sum_{i<n} q^i = (1 - q^n) / (1 - q)
  const std::vector<double> ones(1000, 1.0);
  const auto before = kernels::active_isa();
  for (auto isa : {kernels::Isa::Scalar, kernels::Isa::Avx2}) {
    kernels::select_isa(isa);
    for (double q : {0.2, 0.7, 0.99}) {
      EXPECT_NEAR(kernels::discounted_sum(ones, q), (1.0 - std::pow(q, 1000)) / (1.0 - q), 1e-11);
    }
  }
  kernels::select_isa(before);
}
