#pragma once

// Numerical treatment of the lifetime system
//
//   beta(t) = mu exp(-lambda int_0^t (1 - p(x)) dx)
//   beta(t) = p'(t) + int_0^t beta(t - y) dp(y),     p(0) = 0,
//
// on a uniform grid, together with the monotone schemes that construct its
// solution and the scalar recursions that bound the limit of p.

#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "randtree/model_core.hpp"

namespace randtree {

/// f(0), f(h), ..., f(N h) on a uniform grid.
struct GridFunction {
  double step = 0.0;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double t(std::size_t i) const { return step * static_cast<double>(i); }
  double horizon() const { return values.empty() ? 0.0 : t(values.size() - 1); }

  /// Throws GridError on a non-positive step, an empty grid or non-finite values.
  void validate() const;

  static GridFunction sample(double step, std::size_t nodes, const std::function<double(double)>& f);
};

/// Uniform grid description: step h and horizon T (nodes = round(T/h) + 1).
struct GridSpec {
  double step = 1e-3;
  double horizon = 50.0;

  /// h = 1e-3 / mu, T = 50 / mu.
  static GridSpec defaults_for(const ModelParams& params);
  std::size_t nodes() const;
};

/// Trapezoid integral of f over its whole grid.
double trapezoid(const GridFunction& f);

/// beta(t) = mu exp(-lambda int_0^t (1 - p)), cumulative trapezoid rule.
GridFunction beta_from_p(const GridFunction& p, const ModelParams& params);

/// Forward trapezoid marching for p given beta. The current derivative enters
/// each node equation linearly and is solved for in closed form; the
/// convolution is direct O(N^2) summation. The result is clamped
/// nondecreasing. InstabilityError if p' < -instability_tol at any node.
GridFunction solve_p_from_beta(const GridFunction& beta, double instability_tol = 1e-9);

struct SchemeOptions {
  int k_max = 200;
  double tol = 1e-10;  // sup-norm change between successive p_k
  // Slack allowed on the pointwise monotonicity of p_k / q_k in k.
  double monotone_tol = 1e-8;
};

struct SchemeState {
  int k = 0;
  GridFunction p;
  GridFunction beta;
  double m = 0.0;  // int_0^T (1 - p_k)
  double r = 0.0;  // lambda m
  bool converged = false;
  std::vector<double> r_history;  // r_0, r_1, ...
};

/// Decreasing scheme started from beta_0 = mu. NoConvergence as soon as some
/// r_k exceeds 1 (no finite fixed point above 1/e); returns with
/// converged == false if k_max is reached first (slow critical case).
SchemeState ite_scheme(const ModelParams& params, const GridSpec& grid,
                       const SchemeOptions& opts = {});

struct RRecursion {
  std::vector<double> r;  // r_0 = rho, r_{k+1} = rho e^{r_k}
  bool converged = false;
  bool diverged = false;
  double limit() const { return r.back(); }
};

/// Divergence is declared once r_k > 1 + tol.
RRecursion r_recursion(double rho, int k_max = 10'000, double tol = 1e-14);

struct Ite1Result {
  int k = 0;
  GridFunction q;
  GridFunction gamma;
  double ell_estimate = 0.0;      // mean of q over the last 10% of the grid
  double ell_extrapolated = 0.0;  // plateau corrected by an exponential tail fit
  bool converged = false;
  bool tail_flat = true;  // false: q still rising at the horizon (warning)
  std::vector<double> ell_history;
};

/// Increasing scheme started from gamma_0 = mu e^{-lambda t}; defective
/// iterates, convergent for every rho.
Ite1Result ite1_scheme(const ModelParams& params, const GridSpec& grid,
                       const SchemeOptions& opts = {});

/// Mean of the last `fraction` of the grid values.
double tail_plateau(const GridFunction& f, double fraction = 0.1);

struct ExpBoundSeq {
  std::vector<std::pair<double, double>> terms;  // (a_k, b_k) or (ell_k, theta_k)
  bool converged = false;
  double first() const { return terms.back().first; }
  double second() const { return terms.back().second; }
};

/// Exponential tail bounds (a_k, b_k): a_0 = mu/(lambda+mu), b_0 = lambda+mu,
///   a_{k+1} b_{k+1} = mu exp(-lambda a_k / b_k),
///   b_{k+1} (1 - a_{k+1}) = lambda (1 - a_k).
/// ConvergenceError when k_max is reached.
ExpBoundSeq rec_ab(const ModelParams& params, int k_max = 1'000'000, double tol = 1e-14);

/// II(x, y) = sum_n y^n / (n! (x + n)) = int_0^inf exp(-x t + y e^{-t}) dt, x > 0.
double incomplete_gamma_II(double x, double y, double tol = 1e-16);

/// Meromorphic continuation of the same series to any non-integer x <= 0.
double incomplete_gamma_II_continued(double x, double y, double tol = 1e-16);

/// Limits (ell_d, theta) of the lower-bound iteration (ell_k, theta_k) with
/// ell_0 = mu/(lambda+mu), theta_0 = lambda+mu. InstabilityError when the
/// theta root cannot be bracketed or the series overflows.
ExpBoundSeq lower_bound_ld(const ModelParams& params, int k_max = 10'000, double tol = 1e-13);

/// lambda int_0^inf (ell - p(x)) dx: trapezoid on the grid plus an
/// exponential tail fitted on the last tenth of the grid.
double epsilon_bar(const GridFunction& p, double ell, double lambda);

}  // namespace randtree
