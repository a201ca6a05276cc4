#pragma once

// Multiclass trees: the nonlinear fixed-point ergodicity test, Perron-Frobenius
// conditions, mean lifetimes and volumes, the stationary height law and the
// volume generating function.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "randtree/model_core.hpp"

namespace randtree {

/// lambda(c, c'): rate at which a class-c vertex gains a class-c' child.
/// mu(c, c'): death rate of a class-c' leaf whose parent has class c.
struct RateMatrices {
  std::vector<std::string> classes;
  Eigen::MatrixXd lambda;
  Eigen::MatrixXd mu;

  std::size_t size() const { return static_cast<std::size_t>(lambda.rows()); }
  /// ConfigError on shape mismatch, negative lambda, nonpositive mu or
  /// non-finite entries.
  void validate() const;
  /// rho(c, c') = lambda(c, c') / mu(c, c').
  Eigen::MatrixXd rho() const;

  static RateMatrices single_class(const ModelParams& params);
};

struct RcOptions {
  long k_max = 1'000'000;
  double tol = 1e-14;
  bool record_history = false;
};

struct RcSolution {
  Eigen::VectorXd r;
  bool converged = false;
  bool divergent = false;
  long sweeps = 0;
  std::vector<Eigen::VectorXd> history;  // r_0 = 0, r_1, ... when recorded
};

/// Smallest solution of y_c = sum_d rho(c, d) e^{y_d}, reached by the
/// monotone iteration r_{k+1} = rho e^{r_k} from r_0 = 0 and polished by
/// Newton steps, which stay below the smallest solution. Divergent as soon as
/// the Jacobian rho e^{r_k} has Perron-Frobenius eigenvalue above 1, which
/// rules out any solution.
RcSolution solve_rc(const Eigen::MatrixXd& rho, const RcOptions& opts = {});

/// Perron-Frobenius eigenvalue of a square nonnegative matrix: the maximum
/// over strongly connected components of a shifted power iteration with
/// Collatz-Wielandt bounds. ConvergenceError on the iteration cap.
double pf_eigenvalue(const Eigen::MatrixXd& a, double tol = 1e-13, long max_iter = 1'000'000);

struct MulticlassSolution {
  bool ergodic = false;
  bool sufficient = false;    // every row sum rho_c <= 1/e
  bool necessary = false;     // pf_rho <= 1/e
  bool inconclusive = false;  // iteration cap hit or pf_rho within 1e-6 of 1/e
  Eigen::VectorXd r;          // empty unless ergodic
  Eigen::MatrixXd m;          // m(b, c) = e^{r_c} / mu(b, c); empty unless ergodic
  double pf_rho = 0.0;
  Eigen::VectorXd rho_c;
  long sweeps = 0;
};

/// InconsistencyError when the verdict contradicts the sufficient or the
/// necessary condition beyond tolerance.
MulticlassSolution classify_multiclass(const RateMatrices& rates, const RcOptions& opts = {});

/// M(c, d) = rho(c, d) e^{r_d}.
Eigen::MatrixXd mean_offspring_matrix(const Eigen::MatrixXd& rho, const Eigen::VectorXd& r);

/// E N(c, d), the mean number of class-d vertices in the stationary tree
/// rooted at class c: (I - M) EN = I. Infeasible when PF(M) >= 1.
Eigen::MatrixXd mean_volume_matrix(const Eigen::MatrixXd& rho, const Eigen::VectorXd& r);

/// Column h holds P{H_c > h} per class, h = 0..h_max.
Eigen::MatrixXd multiclass_height_tail(const Eigen::MatrixXd& rho, const Eigen::VectorXd& r,
                                       std::size_t h_max);

/// phi_c(z) = z_c exp(sum_d M(c, d) (phi_d(z) - 1)), smallest fixed point by
/// monotone iteration from 0. NoConvergence on the iteration cap.
Eigen::VectorXd volume_pgf_fixed_point(const Eigen::MatrixXd& rho, const Eigen::VectorXd& r,
                                       const Eigen::VectorXd& z, double tol = 1e-14,
                                       long k_max = 1'000'000);

}  // namespace randtree
