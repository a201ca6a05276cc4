#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/lambert_w.hpp>
#include <gtest/gtest.h>

#include "randtree/errors.hpp"
#include "randtree/model_core.hpp"
#include "randtree/volterra.hpp"

using namespace randtree;

namespace {

double oracle_r(double rho) { return -boost::math::lambert_w0(-rho); }
double oracle_x(double rho) { return boost::math::lambert_w0(1.0 / rho); }

GridSpec coarse(double mu = 1.0) { return {1e-2 / mu, 30.0 / mu}; }

double sup_diff(const GridFunction& a, const GridFunction& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

}  // namespace

TEST(Volterra, BetaFromPClosedForms) {
  const ModelParams par{0.5, 2.0};
  const double h = 1e-3;
  const auto ones = GridFunction::sample(h, 2001, [](double) { return 1.0; });
  const auto zeros = GridFunction::sample(h, 2001, [](double) { return 0.0; });
  const auto p0 = GridFunction::sample(h, 2001, [&](double t) { return 1.0 - std::exp(-par.mu * t); });
  const auto b1 = beta_from_p(ones, par);
  const auto b0 = beta_from_p(zeros, par);
  const auto bp = beta_from_p(p0, par);
  const double rho = par.lambda / par.mu;
  for (std::size_t i = 0; i < ones.size(); i += 50) {
    const double t = ones.t(i);
    EXPECT_NEAR(b1.values[i], par.mu, 1e-14);
    EXPECT_NEAR(b0.values[i], par.mu * std::exp(-par.lambda * t), 1e-10);
    EXPECT_NEAR(bp.values[i], par.mu * std::exp(-rho * (1.0 - std::exp(-par.mu * t))), 1e-6);
  }
}

TEST(Volterra, SolvePFromConstantBeta) {
  const double mu = 1.5;
  for (double h : {2e-3, 1e-3}) {
    const auto beta = GridFunction::sample(h, static_cast<std::size_t>(std::lround(5.0 / h)) + 1,
                                           [&](double) { return mu; });
    const auto p = solve_p_from_beta(beta);
    double err = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) err = std::max(err, std::abs(p.values[i] - (1.0 - std::exp(-mu * p.t(i)))));
    EXPECT_LT(err, 2.0 * h * h);
  }
  const auto zero = GridFunction::sample(1e-2, 100, [](double) { return 0.0; });
  for (double v : solve_p_from_beta(zero).values) EXPECT_EQ(v, 0.0);
}

TEST(Volterra, SolvePSecondOrder) {
  // beta = mu e^{-t} + mu (1 - e^{-t}) / 2 keeps p increasing; error against
  // the finest grid scales as h^2, so (4^2 - 1) / (2^2 - 1) = 5.
  const auto f = [](double t) { return 0.5 + 0.5 * std::exp(-t); };
  const auto solve = [&](double h) {
    return solve_p_from_beta(GridFunction::sample(h, static_cast<std::size_t>(std::lround(4.0 / h)) + 1, f));
  };
  const auto p1 = solve(4e-2), p2 = solve(2e-2), p4 = solve(1e-2);
  const double e1 = std::abs(p1.values.back() - p4.values.back());
  const double e2 = std::abs(p2.values.back() - p4.values.back());
  EXPECT_NEAR(e1 / e2, 5.0, 0.5);
}

TEST(Volterra, GridValidation) {
  GridFunction g{0.0, {1.0}};
  EXPECT_THROW(g.validate(), GridError);
  GridFunction e{0.1, {}};
  EXPECT_THROW(e.validate(), GridError);
  GridFunction n{0.1, {1.0, NAN}};
  EXPECT_THROW(n.validate(), GridError);
}

TEST(Volterra, IteMatchesRootAndResiduals) {
  const ModelParams par{0.2, 1.0};
  const auto st = ite_scheme(par, coarse());
  ASSERT_TRUE(st.converged);
  EXPECT_NEAR(st.r, oracle_r(0.2), 1e-4);
  // Fixed point: each half of the system reproduces the other.
  EXPECT_LT(sup_diff(beta_from_p(st.p, par), st.beta), 1e-6);
  EXPECT_LT(sup_diff(solve_p_from_beta(st.beta), st.p), 1e-6);
  for (std::size_t k = 1; k < st.r_history.size(); ++k) EXPECT_GE(st.r_history[k], st.r_history[k - 1] - 1e-12);
}

TEST(Volterra, IteDivergesAboveCritical) {
  EXPECT_THROW(ite_scheme({0.4, 1.0}, GridSpec::defaults_for({0.4, 1.0})), NoConvergence);
  // A short horizon caps r_k below 1; the result is still rejected.
  EXPECT_THROW(ite_scheme({0.4, 1.0}, coarse()), NoConvergence);
}

TEST(Volterra, IteSlowAtCritical) {
  SchemeOptions opts;
  opts.k_max = 10;
  const auto st = ite_scheme({kInvE, 1.0}, GridSpec::defaults_for({kInvE, 1.0}), opts);
  EXPECT_FALSE(st.converged);
  EXPECT_LE(st.r, 1.0 + 1e-3);
  EXPECT_GT(st.r, 0.5);
}

TEST(Volterra, IteScaleInvariance) {
  const auto a = ite_scheme({0.3, 1.0}, {1e-2, 30.0});
  const auto b = ite_scheme({0.6, 2.0}, {5e-3, 15.0});
  ASSERT_EQ(a.p.size(), b.p.size());
  EXPECT_LT(sup_diff(a.p, b.p), 1e-10);
  EXPECT_NEAR(a.r, b.r, 1e-10);
}

TEST(Volterra, RRecursion) {
  const auto a = r_recursion(0.2);
  EXPECT_TRUE(a.converged);
  EXPECT_NEAR(a.limit(), oracle_r(0.2), 1e-13);
  const auto c = r_recursion(kInvE, 100000, 1e-10);
  EXPECT_NEAR(c.limit(), 1.0, 1e-3);
  EXPECT_FALSE(c.diverged);
  const auto d = r_recursion(0.5);
  EXPECT_TRUE(d.diverged);
  EXPECT_GT(d.limit(), 1.0);
  for (std::size_t k = 1; k < a.r.size(); ++k) EXPECT_GE(a.r[k], a.r[k - 1]);
}

TEST(Volterra, Ite1) {
  const auto erg = ite1_scheme({0.2, 1.0}, coarse());
  EXPECT_NEAR(erg.ell_estimate, 1.0, 1e-3);
  const auto tr = ite1_scheme({2.0, 1.0}, coarse());
  EXPECT_GE(tr.ell_estimate, oracle_x(2.0) - 1e-3);
  EXPECT_LE(tr.ell_estimate, 0.5 + 1e-3);
  for (std::size_t k = 1; k < tr.ell_history.size(); ++k) EXPECT_GE(tr.ell_history[k], tr.ell_history[k - 1] - 1e-9);
}

TEST(Volterra, Ite1FirstIterate) {
  SchemeOptions opts;
  opts.k_max = 0;
  const ModelParams par{2.0, 1.0};
  const auto res = ite1_scheme(par, coarse(), opts);
  const double l0 = par.mu / (par.lambda + par.mu), th0 = par.lambda + par.mu;
  for (std::size_t i = 0; i < res.q.size(); i += 97) {
    EXPECT_NEAR(res.q.values[i], l0 * (1.0 - std::exp(-th0 * res.q.t(i))), 1e-4);
  }
}

TEST(Volterra, QBelowP) {
  const ModelParams par{0.3, 1.0};
  SchemeOptions opts;
  opts.k_max = 3;
  const auto p = ite_scheme(par, coarse(), opts);
  const auto q = ite1_scheme(par, coarse(), opts);
  for (std::size_t i = 0; i < p.p.size(); ++i) EXPECT_LE(q.q.values[i], p.p.values[i] + 1e-8);
}

TEST(Volterra, EllEstimateNonincreasing) {
  double prev = 2.0;
  for (double rho : {0.5, 1.0, 2.0, 4.0}) {
    const double ell = ite1_scheme({rho, 1.0}, coarse()).ell_estimate;
    EXPECT_LE(ell, prev + 1e-6);
    prev = ell;
  }
}

TEST(Volterra, RecAbLimits) {
  const auto erg = rec_ab({0.2, 1.0});
  EXPECT_NEAR(erg.first(), 1.0, 1e-9);
  EXPECT_NEAR(erg.second(), 0.2 / oracle_r(0.2), 1e-9);
  const auto tr = rec_ab({2.0, 1.0});
  EXPECT_NEAR(tr.first(), oracle_x(2.0), 1e-9);
  EXPECT_NEAR(tr.second(), 2.0, 1e-9);
  const auto cr = rec_ab({kInvE, 1.0}, 10'000'000, 1e-10);
  EXPECT_NEAR(cr.first(), 1.0, 1e-2);
  EXPECT_NEAR(cr.second(), kInvE, 1e-2);
}

TEST(Volterra, IncompleteGammaII) {
  for (double x : {0.3, 1.0, 2.5}) EXPECT_NEAR(incomplete_gamma_II(x, 0.0), 1.0 / x, 1e-15);
  EXPECT_NEAR(incomplete_gamma_II(1.0, 1.0), std::exp(1.0) - 1.0, 1e-14);
  double series = 0.0, term = 1.0;
  for (int n = 0; n < 30; ++n) {
    series += term / (2.0 + n);
    term *= 0.5 / (n + 1);
  }
  EXPECT_NEAR(incomplete_gamma_II(2.0, 0.5), series, 1e-15);
  using boost::math::quadrature::gauss_kronrod;
  for (double x : {0.2, 0.7, 3.0}) {
    for (double y : {0.1, 1.0, 5.0}) {
      // II(x, y) = int_0^1 u^{x-1} e^{y u} du after u = e^{-t}.
      const double q = gauss_kronrod<double, 61>::integrate(
          [&](double t) { return std::exp(-x * t + y * std::exp(-t)); }, 0.0, INFINITY, 15, 1e-14);
      EXPECT_NEAR(incomplete_gamma_II(x, y), q, 1e-10 * q) << x << " " << y;
    }
  }
}

TEST(Volterra, IncompleteGammaContinuation) {
  // Agrees with the convergent form for x > 0 and satisfies
  // II(x, y) = (e^y - y II(x + 1, y)) / x for non-integer x < 0.
  EXPECT_NEAR(incomplete_gamma_II_continued(1.3, 0.8), incomplete_gamma_II(1.3, 0.8), 1e-13);
  for (double x : {-0.5, -1.7, -2.3}) {
    const double y = 1.2;
    const double lhs = incomplete_gamma_II_continued(x, y);
    const double rhs = (std::exp(y) - y * incomplete_gamma_II_continued(x + 1.0, y)) / x;
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Volterra, LowerBoundLd) {
  const auto two = lower_bound_ld({2.0, 1.0});
  EXPECT_GT(two.first(), 0.0);
  EXPECT_LE(two.first(), 0.5);
  const auto ten = lower_bound_ld({10.0, 1.0});
  EXPECT_GE(10.0 * ten.first(), 0.9);
  EXPECT_LE(10.0 * ten.first(), 1.0);
  EXPECT_THROW(lower_bound_ld({0.2, 1.0}), InstabilityError);
}

TEST(Volterra, EpsilonBar) {
  const auto st = ite_scheme({0.2, 1.0}, coarse());
  EXPECT_NEAR(epsilon_bar(st.p, 1.0, 0.2), oracle_r(0.2), 1e-4);
  const auto flat = GridFunction::sample(0.01, 1000, [](double) { return 0.4; });
  EXPECT_NEAR(epsilon_bar(flat, 0.4, 2.0), 0.0, 1e-14);
  const auto tr = ite1_scheme({2.0, 1.0}, coarse());
  const double eb = epsilon_bar(tr.q, tr.ell_extrapolated, 2.0);
  EXPECT_TRUE(std::isfinite(eb));
  EXPECT_GT(eb, 0.0);
}
