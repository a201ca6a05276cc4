#pragma once

// Growth of the transient tree: the pure-birth closed forms and the
// saddle-point characterization of the height growth rate
// delta = lim H(t) / t.

#include <vector>

#include "randtree/volterra.hpp"

namespace randtree {

/// s p*(s) = int_0^inf e^{-s t} dp(t) for real s > 0, either for the
/// pure-birth model (p = 0) or from a lifetime distribution sampled on a grid
/// and held flat at its last value beyond the horizon.
class LaplaceEval {
 public:
  static LaplaceEval pure_birth();
  /// Throws GridError if p is not CDF-like, NonmonotoneError if the
  /// resulting s p*(s) fails to be nonincreasing on a probe set of s values.
  static LaplaceEval from_grid(const GridFunction& p);

  double s_pstar(double s) const;
  /// Limit of s p*(s) as s -> 0: the mass ell of p.
  double defect() const { return ell_; }
  bool is_pure_birth() const { return pure_birth_; }
  /// True when the distribution is proper (ell = 1 up to 1e-6).
  bool proper() const { return !pure_birth_ && ell_ >= 1.0 - 1e-6; }

 private:
  LaplaceEval() = default;
  bool pure_birth_ = true;
  double step_ = 0.0;
  double ell_ = 0.0;
  std::vector<double> increments_;  // p(t_{i+1}) - p(t_i)
};

/// b(s, c) = s / c + log(lambda (1 - s p*(s)) / s).
double b_function(double s, double c, const LaplaceEval& p_star, double lambda);

struct SaddleResult {
  double delta = 0.0;
  double s_star = 0.0;
  bool region_ok = false;  // s_star > lambda (1 - s_star p*(s_star))
};

/// Solves b(s, delta) = d b / d s (s, delta) = 0. For each trial c the saddle
/// s*(c) minimizes b(., c) (root of the centrally differenced derivative);
/// b(s*(c), c) decreases in c and delta is its zero. Proper lifetime laws
/// (ergodic case) give delta = 0.
SaddleResult solve_delta(const LaplaceEval& p_star, double lambda, double tol = 1e-12);

/// lambda e, the pure-birth growth rate.
double pure_birth_delta(double lambda);

/// E X_n(t) = (lambda t)^n / n! for mu = 0.
double pure_birth_mean_level(double lambda, int n, double t);

/// E z^{N(t)} = 1 / (1 + (1/z - 1) e^{lambda t}) for mu = 0.
double pure_birth_volume_pgf(double z, double lambda, double t);

/// E exp(-s e^{-lambda t} N(t)); tends to 1 / (1 + s).
double pure_birth_scaled_laplace(double s, double lambda, double t);

/// Laplace transforms of E X_k(t) and E Y_k(t), in log space:
///   phi_k = lambda^k (1 - s p*)^k / s^{k+1},
///   phi~_k = lambda^k (1 - s p*)^{k+1} / s^{k+1}.
struct LevelTransforms {
  double log_phi = 0.0;
  double log_phi_tilde = 0.0;
  double phi() const;
  double phi_tilde() const;
};

LevelTransforms level_transforms(const LaplaceEval& p_star, double lambda, int k, double s);

struct BSurfacePoint {
  double s;
  double c;
  double b;
};

/// b on the tensor grid s_values x c_values (points outside the domain of the
/// logarithm are skipped).
std::vector<BSurfacePoint> b_surface(const LaplaceEval& p_star, double lambda,
                                     const std::vector<double>& s_values,
                                     const std::vector<double>& c_values);

}  // namespace randtree
