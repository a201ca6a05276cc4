#pragma once

// Stationary laws of the ergodic tree: volume, root degree, height, and the
// Schroeder linearization of the height-tail recursion.

#include <cstdint>
#include <vector>

namespace randtree {

/// Tail sequence of the height recursion d[h+1] = 1 - exp(-r d[h]).
/// With d[0] = 1, d[h] = P{H > h - 1} = P{H >= h}.
struct HeightTail {
  double r = 0.0;
  std::vector<double> d;

  /// P{H > h}, i.e. d[h + 1]. Requires h + 1 < d.size().
  double tail(std::size_t h) const { return d.at(h + 1); }
  /// P{H = h} = d[h] - d[h + 1].
  double pmf(std::size_t h) const { return d.at(h) - d.at(h + 1); }
};

/// P{N = k} = k^{k-1} rho^k / (r k!), evaluated in log space.
double borel_pmf(double rho, std::int64_t k);
double borel_log_pmf(double rho, std::int64_t k);

/// Smallest K with sum_{k > K} P{N = k} < tail_mass (tail computed as
/// 1 - partial sum with compensated summation).
std::int64_t borel_support_limit(double rho, double tail_mass);

/// E N = 1 / (1 - r); DomainError at rho >= 1/e.
double mean_volume(double rho);

/// Stirling form (1/r) (rho e)^k / (sqrt(2 pi) k^{3/2}).
double volume_tail_asymptotic(double rho, std::int64_t k);

/// 1 / sqrt(2 (1 - rho e)), the expansion of E N near rho = 1/e.
double mean_volume_critical_approx(double rho);

/// Poisson(r) probability of k children at the root.
double root_degree_pmf(double rho, std::int64_t k);

/// Runs the height recursion from d[0] = x0 for h_max steps (h_max + 1 terms).
HeightTail height_tail(double rho, std::size_t h_max, double x0 = 1.0);

/// Same recursion driven directly by r in (0, 1].
HeightTail height_tail_from_r(double r, std::size_t h_max, double x0 = 1.0);

struct SchroederOptions {
  double tol = 1e-13;
  std::int64_t max_steps = 10'000'000;
};

/// theta(r, x) = lim r^{-h} d_h with d_0 = x. Stops at the first h where the
/// a-priori error bound (r x^2 / 2) r^h / (1 - r) drops below tol.
/// SlowConvergence when the step count required exceeds max_steps.
double schroeder_theta(double r, double x, const SchroederOptions& opts = {});

/// Number of recursion steps schroeder_theta needs for (r, x, tol).
std::int64_t schroeder_steps(double r, double x, double tol);

/// Power-series coefficients theta_1..theta_order (index 0 holds theta_0 = 0).
std::vector<double> theta_coeffs(double r, int order);

/// Evaluates sum_i coeffs[i] x^i.
double theta_series(const std::vector<double>& coeffs, double x);

/// Inverse of theta(r, .): the omega with theta(r, omega) = y.
/// RangeError when y is outside [0, theta(r, 1) / r).
double omega_inverse(double r, double y, double tol = 1e-12);

/// theta(r,1) r^{h+1} below criticality, 2/h at rho = 1/e. Approximates
/// P{H > h}.
double height_tail_asymptotic(double rho, std::size_t h);

}  // namespace randtree
