#include <cmath>

#include <gtest/gtest.h>

#include "randtree/errors.hpp"
#include "randtree/growth.hpp"
#include "randtree/model_core.hpp"
#include "randtree/volterra.hpp"

using namespace randtree;

namespace {

LaplaceEval transient_eval(double lambda, double mu) {
  const auto res = ite1_scheme({lambda, mu}, {1e-2 / mu, 50.0 / mu});
  return LaplaceEval::from_grid(res.q);
}

// delta = min of s / log(s / (lambda (1 - s p*(s)))) over the region where the
// log is positive; dense logarithmic scan, then golden-section refinement.
double delta_oracle(const LaplaceEval& e, double lambda) {
  const auto g = [&](double s) {
    const double a = s / (lambda * (1.0 - e.s_pstar(s)));
    return a > 1.0 ? s / std::log(a) : INFINITY;
  };
  double best_s = 0.0, best = INFINITY;
  for (int i = 0; i <= 4000; ++i) {
    const double s = lambda * std::pow(10.0, -3.0 + 6.0 * i / 4000.0);
    if (g(s) < best) best = g(s), best_s = s;
  }
  double lo = best_s / 1.01, hi = best_s * 1.01;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 200; ++it) {
    const double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
    if (g(a) < g(b)) {
      hi = b;
    } else {
      lo = a;
    }
  }
  return g(0.5 * (lo + hi));
}

}  // namespace

TEST(Growth, BFunctionExamples) {
  const auto pb = LaplaceEval::pure_birth();
  EXPECT_NEAR(b_function(1.0, kE, pb, 1.0), kInvE, 1e-15);
  for (double s : {0.3, 2.0, 7.0}) EXPECT_NEAR(b_function(s, 1.3, pb, 2.0), s / 1.3 + std::log(2.0 / s), 1e-14);
}

TEST(Growth, ErgodicLimitAtZero) {
  const ModelParams par{0.2, 1.0};
  const auto st = ite_scheme(par, {1e-2, 100.0});
  const auto e = LaplaceEval::from_grid(st.p);
  EXPECT_TRUE(e.proper());
  EXPECT_NEAR(b_function(1e-5, 1.0, e, par.lambda), std::log(solve_r(0.2)), 1e-3);
}

TEST(Growth, PureBirthSaddle) {
  for (double lambda : {0.5, 1.0, 3.0}) {
    EXPECT_DOUBLE_EQ(pure_birth_delta(lambda), lambda * kE);
    const auto res = solve_delta(LaplaceEval::pure_birth(), lambda);
    EXPECT_NEAR(res.delta, lambda * kE, 1e-8 * lambda);
    EXPECT_NEAR(res.s_star, lambda * kE, 1e-4 * lambda);
    EXPECT_TRUE(res.region_ok);
  }
}

TEST(Growth, ErgodicDeltaZero) {
  const ModelParams par{0.2, 1.0};
  const auto e = LaplaceEval::from_grid(ite_scheme(par, {1e-2, 100.0}).p);
  EXPECT_EQ(solve_delta(e, par.lambda).delta, 0.0);
  for (double s : {0.05, 0.5, 5.0}) {
    for (double c : {0.1, 1.0, 10.0}) EXPECT_LT(b_function(s, c, e, par.lambda) - s / c, 0.0);
  }
}

TEST(Growth, TransientDeltaMatchesMinimizationOracle) {
  const auto e = transient_eval(2.0, 1.0);
  EXPECT_FALSE(e.proper());
  EXPECT_GE(e.defect(), solve_x(2.0));
  EXPECT_LE(e.defect(), 0.5);
  const auto res = solve_delta(e, 2.0);
  EXPECT_TRUE(res.region_ok);
  EXPECT_NEAR(res.delta, delta_oracle(e, 2.0), 1e-6 * res.delta);
  EXPECT_GT(res.delta, 0.0);
  EXPECT_LT(res.delta, 2.0 * kE);
}

TEST(Growth, DeltaNonincreasingInMu) {
  double prev = pure_birth_delta(2.0);
  for (double mu : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const double d = solve_delta(transient_eval(2.0, mu), 2.0).delta;
    EXPECT_LE(d, prev * (1.0 + 1e-9)) << mu;
    prev = d;
  }
}

TEST(Growth, LaplaceEvalMonotone) {
  const auto e = transient_eval(2.0, 1.0);
  double prev = INFINITY;
  for (double s = 1e-3; s < 1e3; s *= 1.5) {
    const double v = e.s_pstar(s);
    EXPECT_LE(v, prev + 1e-14);
    EXPECT_GE(v, 0.0);
    prev = v;
  }
  const auto flat = GridFunction::sample(0.1, 50, [](double t) { return t > 1.0 ? 1.0 : 0.0; });
  EXPECT_NO_THROW(LaplaceEval::from_grid(flat));
  const auto bad = GridFunction::sample(0.1, 50, [](double t) { return t < 1.0 ? 0.5 : 0.2; });
  EXPECT_THROW(LaplaceEval::from_grid(bad), std::exception);
}

TEST(Growth, LaplaceOfExponential) {
  // p = 1 - e^{-t}: s p*(s) = 1 / (1 + s).
  const auto p = GridFunction::sample(1e-3, 40001, [](double t) { return 1.0 - std::exp(-t); });
  const auto e = LaplaceEval::from_grid(p);
  for (double s : {0.1, 1.0, 4.0}) EXPECT_NEAR(e.s_pstar(s), 1.0 / (1.0 + s), 1e-6);
}

TEST(Growth, PureBirthMeans) {
  EXPECT_EQ(pure_birth_mean_level(1.3, 0, 2.0), 1.0);
  EXPECT_NEAR(pure_birth_mean_level(1.0, 2, 1.0), 0.5, 1e-15);
  double total = 0.0;
  for (int n = 0; n < 80; ++n) total += pure_birth_mean_level(1.5, n, 3.0);
  EXPECT_NEAR(total, std::exp(4.5), 1e-10 * std::exp(4.5));
}

TEST(Growth, PureBirthPgf) {
  EXPECT_NEAR(pure_birth_volume_pgf(1.0, 2.0, 3.0), 1.0, 1e-15);
  EXPECT_NEAR(pure_birth_volume_pgf(0.3, 2.0, 0.0), 0.3, 1e-15);
  // Geometric law of N(t) with success probability e^{-lambda t}.
  const double q = std::exp(-1.0);
  for (double z : {0.2, 0.7}) {
    double series = 0.0;
    for (int k = 1; k < 400; ++k) series += q * std::pow(1.0 - q, k - 1) * std::pow(z, k);
    EXPECT_NEAR(pure_birth_volume_pgf(z, 1.0, 1.0), series, 1e-14);
  }
  for (double s = 0.0; s <= 5.0; s += 0.25) {
    EXPECT_NEAR(pure_birth_scaled_laplace(s, 1.0, 8.0), 1.0 / (1.0 + s), 1e-3);
  }
}

TEST(Growth, LevelTransforms) {
  const auto pb = LaplaceEval::pure_birth();
  EXPECT_NEAR(level_transforms(pb, 2.0, 0, 3.0).phi(), 1.0 / 3.0, 1e-15);
  for (int k : {1, 3, 6}) {
    const double s = 2.5, lambda = 1.7;
    EXPECT_NEAR(level_transforms(pb, lambda, k, s).phi(), std::pow(lambda, k) / std::pow(s, k + 1), 1e-12);
    // Termwise inversion: int e^{-st} (lambda t)^k / k! dt = lambda^k / s^{k+1}.
    double num = 0.0;
    const double h = 1e-3;
    for (int i = 0; i <= 30000; ++i) {
      const double t = i * h;
      const double w = (i == 0 || i == 30000) ? 0.5 : 1.0;
      num += w * h * std::exp(-s * t) * pure_birth_mean_level(lambda, k, t);
    }
    EXPECT_NEAR(level_transforms(pb, lambda, k, s).phi(), num, 1e-6);
  }
  const auto e = transient_eval(2.0, 1.0);
  for (int k : {0, 2, 5}) {
    const auto lt = level_transforms(e, 2.0, k, 1.3);
    EXPECT_NEAR(lt.phi_tilde() / lt.phi(), 1.0 - e.s_pstar(1.3), 1e-12);
  }
}

TEST(Growth, BSurfaceSkipsOutOfDomain) {
  const auto pb = LaplaceEval::pure_birth();
  const auto pts = b_surface(pb, 1.0, {0.5, 1.0, 2.0}, {1.0, 2.0});
  EXPECT_EQ(pts.size(), 6u);
  for (const auto& p : pts) EXPECT_NEAR(p.b, b_function(p.s, p.c, pb, 1.0), 1e-15);
}
