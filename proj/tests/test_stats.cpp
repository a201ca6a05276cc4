#include <cmath>
#include <random>

#include <boost/math/special_functions/lambert_w.hpp>
#include <gtest/gtest.h>

#include "randtree/errors.hpp"
#include "randtree/stationary_laws.hpp"
#include "randtree/stats.hpp"

using namespace randtree;

TEST(Stats, MeanAccumulator) {
  MeanAccumulator a, b;
  for (int i = 1; i <= 10; ++i) (i <= 4 ? a : b).add(i);
  a.merge(b);
  const auto e = a.estimate();
  EXPECT_EQ(a.count(), 10u);
  EXPECT_NEAR(e.value, 5.5, 1e-14);
  // sample variance of 1..10 is 55/6
  EXPECT_NEAR(e.se, std::sqrt(55.0 / 6.0 / 10.0), 1e-14);
  EXPECT_NEAR(e.z(5.5), 0.0, 1e-14);
  EXPECT_NEAR(e.ci_high() - e.ci_low(), 2 * 1.96 * e.se, 1e-14);
}

TEST(Stats, EstimateZWithZeroSe) {
  Estimate e{1.0, 0.0};
  EXPECT_EQ(e.z(1.0), 0.0);
  EXPECT_TRUE(std::isinf(e.z(2.0)));
}

TEST(Stats, RegenerativeEstimatorRatio) {
  RegenerativeEstimator est(2);
  const std::vector<std::pair<std::vector<double>, double>> cycles = {
      {{1.0, 2.0}, 2.0}, {{3.0, 1.0}, 4.0}, {{0.5, 0.5}, 1.0}, {{2.0, 3.0}, 3.0}};
  for (const auto& [a, b] : cycles) est.add_cycle(a, b);
  EXPECT_EQ(est.cycles(), 4u);
  EXPECT_NEAR(est.estimate(0).value, 6.5 / 10.0, 1e-14);
  EXPECT_NEAR(est.estimate(1).value, 6.5 / 10.0, 1e-14);
  // SE by the definition.
  double ss = 0.0;
  for (const auto& [a, b] : cycles) ss += std::pow(a[0] - 0.65 * b, 2);
  EXPECT_NEAR(est.estimate(0).se, std::sqrt(ss / (4.0 * 3.0)) / 2.5, 1e-14);

  RegenerativeEstimator x(2), y(2);
  for (std::size_t i = 0; i < cycles.size(); ++i) (i < 2 ? x : y).add_cycle(cycles[i].first, cycles[i].second);
  x.merge(y);
  EXPECT_NEAR(x.estimate(0).se, est.estimate(0).se, 1e-14);
  RegenerativeEstimator one(1);
  one.add_cycle(std::vector<double>{1.0}, 1.0);
  EXPECT_THROW(one.estimate(0), InsufficientData);
}

TEST(Stats, KolmogorovTail) {
  EXPECT_NEAR(kolmogorov_tail(1.36), 0.0494, 5e-4);
  EXPECT_NEAR(kolmogorov_tail(1.63), 0.0098, 5e-4);
  EXPECT_NEAR(kolmogorov_tail(0.0), 1.0, 1e-12);
  EXPECT_LT(kolmogorov_tail(5.0), 1e-20);
}

TEST(Stats, KsUniformCalibration) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int rejects = 0;
  const int runs = 400;
  for (int r = 0; r < runs; ++r) {
    std::vector<double> s(200);
    for (auto& x : s) x = u(gen);
    if (ks_test(s, [](double x) { return std::clamp(x, 0.0, 1.0); }).p_value < 0.05) ++rejects;
  }
  EXPECT_NEAR(rejects / static_cast<double>(runs), 0.05, 0.035);
  std::vector<double> shifted(500);
  for (auto& x : shifted) x = 0.3 + 0.7 * u(gen);
  EXPECT_LT(ks_test(shifted, [](double x) { return std::clamp(x, 0.0, 1.0); }).p_value, 1e-6);
}

TEST(Stats, KsStatisticValue) {
  const auto r = ks_test({0.1, 0.2, 0.9}, [](double x) { return x; });
  // D = max(i/n - x_i, x_i - (i-1)/n) = max(2/3 - 0.2, 0.9 - 2/3) = 0.4667.
  EXPECT_NEAR(r.statistic, 2.0 / 3.0 - 0.2, 1e-14);
}

TEST(Stats, KsTwoSample) {
  const auto same = ks_two_sample({1, 2, 3, 4}, {1, 2, 3, 4});
  EXPECT_EQ(same.statistic, 0.0);
  EXPECT_NEAR(same.p_value, 1.0, 1e-12);
  const auto apart = ks_two_sample({1, 2, 3}, {4, 5, 6, 7});
  EXPECT_EQ(apart.statistic, 1.0);
}

TEST(Stats, TvDistance) {
  const std::vector<double> p{0.5, 0.3}, q{0.4, 0.4};
  // lumped tails: 0.2 and 0.2
  EXPECT_NEAR(tv_distance(p, q), 0.1, 1e-15);
  const std::vector<double> r{0.5, 0.5}, s{0.5, 0.3};
  EXPECT_NEAR(tv_distance(r, s), 0.2, 1e-15);
  EXPECT_EQ(tv_distance(p, p), 0.0);
}

TEST(Stats, LeastSquaresSlope) {
  const std::vector<double> t{0, 1, 2, 3, 4}, y{1, 3, 5, 7, 9};
  EXPECT_NEAR(least_squares_slope(t, y), 2.0, 1e-14);
}

TEST(Stats, SlopeEstimator) {
  std::vector<std::vector<std::pair<double, double>>> series;
  for (int r = 0; r < 5; ++r) {
    std::vector<std::pair<double, double>> s;
    for (int i = 0; i <= 100; ++i) s.emplace_back(i * 0.1, (3.0 + 0.1 * r) * i * 0.1 + (i < 50 ? 5.0 : 0.0));
    series.push_back(s);
  }
  const auto est = slope_estimator(series, 0.4);
  EXPECT_NEAR(est.slope, 3.2, 1e-12);
  EXPECT_EQ(est.replicas, 5u);
  EXPECT_NEAR(est.se, std::sqrt(0.025 / 5.0), 1e-12);
  EXPECT_THROW(slope_estimator({series[0]}), InsufficientData);
}

TEST(Stats, BorelSelfTestFalseAlarmRate) {
  // Sample the Borel law exactly (total progeny of a Poisson(r) Galton-Watson
  // tree) and compare the estimated P{N = k} with the pmf: z > 3 should be rare.
  const double rho = 0.2;
  const double r = -boost::math::lambert_w0(-rho);
  std::mt19937_64 gen(99);
  std::poisson_distribution<int> pois(r);
  int alarms = 0, tests = 0;
  for (int run = 0; run < 100; ++run) {
    std::vector<MeanAccumulator> acc(4);
    for (int i = 0; i < 2000; ++i) {
      long total = 1, pending = 1;
      while (pending > 0) {
        const int kids = pois(gen);
        total += kids;
        pending += kids - 1;
      }
      for (int k = 1; k <= 4; ++k) acc[k - 1].add(total == k ? 1.0 : 0.0);
    }
    for (int k = 1; k <= 4; ++k) {
      ++tests;
      if (std::abs(acc[k - 1].estimate().z(borel_pmf(rho, k))) > 3.0) ++alarms;
    }
  }
  EXPECT_LT(alarms, tests / 100 + 3);
}
