#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>
#include <boost/math/special_functions/lambert_w.hpp>
#include <gtest/gtest.h>

#include "randtree/errors.hpp"
#include "randtree/multiclass.hpp"
#include "randtree/stationary_laws.hpp"

using namespace randtree;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double oracle_r(double rho) { return -boost::math::lambert_w0(-rho); }

double eigen_spectral_radius(const MatrixXd& a) {
  Eigen::EigenSolver<MatrixXd> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

MatrixXd random_nonneg(std::mt19937_64& gen, int n, double scale, double zero_prob) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = u(gen) < zero_prob ? 0.0 : scale * u(gen);
  }
  return a;
}

RateMatrices rates_from_rho(const MatrixXd& rho) {
  RateMatrices r;
  r.lambda = rho;
  r.mu = MatrixXd::Ones(rho.rows(), rho.cols());
  for (Eigen::Index i = 0; i < rho.rows(); ++i) r.classes.push_back(std::to_string(i));
  return r;
}

}  // namespace

TEST(Multiclass, SingleClassReduces) {
  MatrixXd rho(1, 1);
  rho << 0.2;
  const auto sol = solve_rc(rho);
  ASSERT_TRUE(sol.converged);
  EXPECT_NEAR(sol.r(0), oracle_r(0.2), 1e-13);
  const auto cls = classify_multiclass(RateMatrices::single_class({0.2, 1.0}));
  EXPECT_TRUE(cls.ergodic);
  EXPECT_NEAR(cls.r(0), oracle_r(0.2), 1e-13);
  EXPECT_NEAR(cls.m(0, 0), std::exp(cls.r(0)), 1e-12);
}

TEST(Multiclass, SymmetricCase) {
  MatrixXd rho(2, 2);
  rho << 0.1, 0.05, 0.05, 0.1;
  const auto sol = solve_rc(rho);
  ASSERT_TRUE(sol.converged);
  const double y = oracle_r(0.15);
  EXPECT_NEAR(sol.r(0), y, 1e-12);
  EXPECT_NEAR(sol.r(1), y, 1e-12);
  EXPECT_NEAR(pf_eigenvalue(rho), 0.15, 1e-13);
}

TEST(Multiclass, DiagonalDivergent) {
  MatrixXd rho(2, 2);
  rho << 0.5, 0.0, 0.0, 0.5;
  const auto sol = solve_rc(rho);
  EXPECT_TRUE(sol.divergent);
  EXPECT_FALSE(sol.converged);
  const auto cls = classify_multiclass(rates_from_rho(rho));
  EXPECT_FALSE(cls.ergodic);
  EXPECT_FALSE(cls.necessary);
}

TEST(Multiclass, PfEigenvalueExamples) {
  MatrixXd d = MatrixXd::Zero(2, 2);
  d.diagonal() << 0.1, 0.3;
  EXPECT_NEAR(pf_eigenvalue(d), 0.3, 1e-13);
  EXPECT_EQ(pf_eigenvalue(MatrixXd::Zero(3, 3)), 0.0);
  MatrixXd nil(2, 2);
  nil << 0.0, 1.0, 0.0, 0.0;
  EXPECT_EQ(pf_eigenvalue(nil), 0.0);
  MatrixXd bad(1, 1);
  bad << NAN;
  EXPECT_THROW(pf_eigenvalue(bad), std::exception);
}

TEST(Multiclass, PfEigenvalueMatchesEigenSolver) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 6;
    const MatrixXd a = random_nonneg(gen, n, 1.0, trial % 3 == 0 ? 0.6 : 0.1);
    const double pf = pf_eigenvalue(a);
    EXPECT_NEAR(pf, eigen_spectral_radius(a), 1e-9 * std::max(1.0, pf)) << a;
    EXPECT_LE(pf, a.rowwise().sum().maxCoeff() + 1e-12);
  }
}

TEST(Multiclass, PfPeriodicAndReducible) {
  MatrixXd cyc = MatrixXd::Zero(3, 3);
  cyc(0, 1) = 2.0;
  cyc(1, 2) = 0.5;
  cyc(2, 0) = 1.0;
  EXPECT_NEAR(pf_eigenvalue(cyc), 1.0, 1e-12);
  MatrixXd block = MatrixXd::Zero(4, 4);
  block.topLeftCorner(2, 2) << 0.1, 0.2, 0.2, 0.1;
  block.bottomRightCorner(2, 2) << 0.0, 0.7, 0.7, 0.0;
  block(0, 3) = 5.0;
  EXPECT_NEAR(pf_eigenvalue(block), 0.7, 1e-12);
}

TEST(Multiclass, MeanVolumeMatrix) {
  MatrixXd rho(2, 2);
  rho << 0.1, 0.05, 0.05, 0.1;
  const VectorXd r = solve_rc(rho).r;
  const MatrixXd m = mean_offspring_matrix(rho, r);
  const MatrixXd en = mean_volume_matrix(rho, r);
  EXPECT_LT((en - (MatrixXd::Identity(2, 2) - m).inverse()).cwiseAbs().maxCoeff(), 1e-13);
  // Row sums of M equal r (the fixed-point equation), so a class-blind total
  // matches the single-class mean volume 1 / (1 - r).
  EXPECT_NEAR(en.row(0).sum(), 1.0 / (1.0 - r(0)), 1e-12);
  MatrixXd big(1, 1);
  big << 1.0;
  EXPECT_THROW(mean_volume_matrix(big, VectorXd::Zero(1)), Infeasible);
}

TEST(Multiclass, HeightTailSingleClass) {
  MatrixXd rho(1, 1);
  rho << 0.2;
  const VectorXd r = solve_rc(rho).r;
  const MatrixXd tail = multiclass_height_tail(rho, r, 20);
  const auto ht = height_tail(0.2, 22);
  for (std::size_t h = 0; h <= 20; ++h) EXPECT_NEAR(tail(0, static_cast<Eigen::Index>(h)), ht.tail(h), 1e-14);
}

TEST(Multiclass, PgfMatchesBorelSeries) {
  MatrixXd rho(1, 1);
  rho << 0.25;
  const VectorXd r = solve_rc(rho).r;
  EXPECT_THROW(volume_pgf_fixed_point(rho, r, VectorXd::Zero(1)), DomainError);
  for (double z : {0.05, 0.3, 0.8, 1.0}) {
    const VectorXd zv = VectorXd::Constant(1, z);
    double series = 0.0;
    for (std::int64_t k = 1; k < 2000; ++k) series += borel_pmf(0.25, k) * std::pow(z, static_cast<double>(k));
    EXPECT_NEAR(volume_pgf_fixed_point(rho, r, zv)(0), series, 1e-12) << z;
  }
}

TEST(Multiclass, PgfDerivativeIsMeanVolume) {
  MatrixXd rho(3, 3);
  rho << 0.05, 0.1, 0.02, 0.0, 0.1, 0.1, 0.08, 0.03, 0.04;
  const VectorXd r = solve_rc(rho).r;
  const MatrixXd en = mean_volume_matrix(rho, r);
  const double h = 1e-6;
  for (int d = 0; d < 3; ++d) {
    VectorXd z = VectorXd::Ones(3);
    z(d) -= h;
    const VectorXd lo = volume_pgf_fixed_point(rho, r, z);
    const VectorXd one = volume_pgf_fixed_point(rho, r, VectorXd::Ones(3));
    for (int c = 0; c < 3; ++c) EXPECT_NEAR((one(c) - lo(c)) / h, en(c, d), 1e-4);
  }
}

TEST(Multiclass, SolutionIsSmallestFixedPoint) {
  std::mt19937_64 gen(5);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + trial % 4;
    const MatrixXd rho = random_nonneg(gen, n, 0.3 / n, 0.2);
    const auto sol = solve_rc(rho);
    if (!sol.converged) continue;
    ++checked;
    const VectorXd rhs = rho * sol.r.array().exp().matrix();
    EXPECT_LT((rhs - sol.r).cwiseAbs().maxCoeff(), 1e-12);
    // The smallest solution is stable from below: PF of the Jacobian <= 1.
    EXPECT_LE(pf_eigenvalue(mean_offspring_matrix(rho, sol.r)), 1.0 + 1e-9);
    // Plain monotone iteration from 0 never overshoots it.
    VectorXd y = VectorXd::Zero(n);
    for (int k = 0; k < 200; ++k) y = rho * y.array().exp().matrix();
    EXPECT_TRUE(((y - sol.r).array() <= 1e-12).all());
  }
  EXPECT_GT(checked, 100);
}

TEST(Multiclass, PermutationEquivariance) {
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3;
    const MatrixXd rho = random_nonneg(gen, n, 0.12, 0.2);
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), gen);
    Eigen::PermutationMatrix<Eigen::Dynamic> p(n);
    for (int i = 0; i < n; ++i) p.indices()(i) = idx[static_cast<std::size_t>(i)];
    const MatrixXd prho = p * rho * p.transpose();
    const auto a = solve_rc(rho);
    const auto b = solve_rc(prho);
    ASSERT_EQ(a.converged, b.converged);
    if (a.converged) {
      EXPECT_LT(((p * a.r) - b.r).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Multiclass, SandwichOnRandomMatrices) {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> scale(0.05, 0.6);
  int ergodic = 0, non = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + trial % 3;
    const MatrixXd rho = random_nonneg(gen, n, scale(gen) / n * 2.0, 0.25);
    const auto cls = classify_multiclass(rates_from_rho(rho));
    if (cls.inconclusive) continue;
    if (cls.sufficient) {
      EXPECT_TRUE(cls.ergodic);
    }
    if (cls.ergodic) {
      EXPECT_TRUE(cls.necessary);
    }
    EXPECT_GE(cls.rho_c.maxCoeff(), cls.pf_rho - 1e-12);
    (cls.ergodic ? ergodic : non)++;
  }
  EXPECT_GT(ergodic, 50);
  EXPECT_GT(non, 50);
}

TEST(Multiclass, HistoryIsMonotone) {
  MatrixXd rho(2, 2);
  rho << 0.2, 0.1, 0.05, 0.25;
  RcOptions opts;
  opts.record_history = true;
  const auto sol = solve_rc(rho, opts);
  ASSERT_GE(sol.history.size(), 2u);
  EXPECT_EQ(sol.history.front().cwiseAbs().maxCoeff(), 0.0);
  for (std::size_t k = 1; k < sol.history.size(); ++k) {
    EXPECT_TRUE(((sol.history[k] - sol.history[k - 1]).array() >= -1e-15).all());
  }
}

TEST(Multiclass, RatesValidation) {
  RateMatrices r;
  r.lambda = MatrixXd::Ones(2, 2);
  r.mu = MatrixXd::Ones(2, 3);
  r.classes = {"a", "b"};
  EXPECT_THROW(r.validate(), ConfigError);
  r.mu = MatrixXd::Zero(2, 2);
  EXPECT_THROW(r.validate(), ConfigError);
  r.mu = MatrixXd::Ones(2, 2);
  r.lambda(0, 1) = -1.0;
  EXPECT_THROW(r.validate(), ConfigError);
}
