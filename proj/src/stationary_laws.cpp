#include "randtree/stationary_laws.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "randtree/errors.hpp"
#include "randtree/model_core.hpp"

namespace randtree {

namespace {

double checked_r(double rho, const char* who) {
  if (!(rho > 0.0) || rho > kInvE + 1e-12) {
    throw DomainError(std::string(who) + ": requires 0 < rho <= 1/e");
  }
  return solve_r(rho);
}

}  // namespace

double borel_log_pmf(double rho, std::int64_t k) {
  const double r = checked_r(rho, "borel_pmf");
  if (k < 1) throw DomainError("borel_pmf: k must be >= 1");
  const double kd = static_cast<double>(k);
  return (kd - 1.0) * std::log(kd) - std::lgamma(kd + 1.0) + kd * std::log(rho) - std::log(r);
}

double borel_pmf(double rho, std::int64_t k) { return std::exp(borel_log_pmf(rho, k)); }

std::int64_t borel_support_limit(double rho, double tail_mass) {
  const double r = checked_r(rho, "borel_support_limit");
  if (!(tail_mass > 0.0)) throw DomainError("borel_support_limit: tail_mass must be > 0");
  const double log_rho = std::log(rho);
  const double log_r = std::log(r);
  // Kahan-compensated partial sums so the complement stays meaningful at 1e-12.
  double sum = 0.0;
  double comp = 0.0;
  constexpr std::int64_t kMaxSupport = 100'000'000;
  for (std::int64_t k = 1; k <= kMaxSupport; ++k) {
    const double kd = static_cast<double>(k);
    const double p = std::exp((kd - 1.0) * std::log(kd) - std::lgamma(kd + 1.0) + kd * log_rho - log_r);
    const double y = p - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
    if (1.0 - sum < tail_mass) return k;
  }
  throw ConvergenceError("borel_support_limit: tail too heavy (rho too close to 1/e)");
}

double mean_volume(double rho) {
  if (!(rho > 0.0) || rho >= kInvE) {
    throw DomainError("mean_volume: requires 0 < rho < 1/e (the mean is infinite at criticality)");
  }
  const double r = solve_r(rho);
  if (r >= 1.0) throw DomainError("mean_volume: rho numerically critical");
  return 1.0 / (1.0 - r);
}

double volume_tail_asymptotic(double rho, std::int64_t k) {
  const double r = checked_r(rho, "volume_tail_asymptotic");
  if (k < 1) throw DomainError("volume_tail_asymptotic: k must be >= 1");
  const double kd = static_cast<double>(k);
  const double log_val = kd * std::log(rho * kE) - 0.5 * std::log(2.0 * std::numbers::pi) -
                         1.5 * std::log(kd) - std::log(r);
  return std::exp(log_val);
}

double mean_volume_critical_approx(double rho) {
  if (!(rho > 0.0) || rho >= kInvE) {
    throw DomainError("mean_volume_critical_approx: requires 0 < rho < 1/e");
  }
  return 1.0 / std::sqrt(2.0 * (1.0 - rho * kE));
}

double root_degree_pmf(double rho, std::int64_t k) {
  const double r = checked_r(rho, "root_degree_pmf");
  if (k < 0) throw DomainError("root_degree_pmf: k must be >= 0");
  const double kd = static_cast<double>(k);
  return std::exp(-r + kd * std::log(r) - std::lgamma(kd + 1.0));
}

HeightTail height_tail_from_r(double r, std::size_t h_max, double x0) {
  if (!(r > 0.0) || r > 1.0) throw DomainError("height_tail: requires 0 < r <= 1");
  if (!(x0 >= 0.0)) throw DomainError("height_tail: x0 must be >= 0");
  HeightTail out;
  out.r = r;
  out.d.reserve(h_max + 1);
  out.d.push_back(x0);
  for (std::size_t h = 0; h < h_max; ++h) {
    // -expm1 keeps full relative precision when r d is tiny (critical tail).
    out.d.push_back(-std::expm1(-r * out.d.back()));
  }
  return out;
}

HeightTail height_tail(double rho, std::size_t h_max, double x0) {
  return height_tail_from_r(checked_r(rho, "height_tail"), h_max, x0);
}

std::int64_t schroeder_steps(double r, double x, double tol) {
  if (!(r > 0.0 && r < 1.0)) throw DomainError("schroeder_theta: requires 0 < r < 1");
  if (!(tol > 0.0)) throw DomainError("schroeder_theta: tol must be > 0");
  if (x == 0.0) return 0;
  const double lead = 0.5 * r * x * x / (1.0 - r);
  if (lead < tol) return 0;
  return static_cast<std::int64_t>(std::floor(std::log(tol / lead) / std::log(r))) + 1;
}

double schroeder_theta(double r, double x, const SchroederOptions& opts) {
  if (!(x >= 0.0)) throw DomainError("schroeder_theta: x must be >= 0");
  const std::int64_t steps = schroeder_steps(r, x, opts.tol);
  if (steps > opts.max_steps) {
    throw SlowConvergence("schroeder_theta: " + std::to_string(steps) +
                          " steps needed for r = " + std::to_string(r));
  }
  double d = x;
  for (std::int64_t h = 0; h < steps; ++h) d = -std::expm1(-r * d);
  return d / std::pow(r, static_cast<double>(steps));
}

std::vector<double> theta_coeffs(double r, int order) {
  if (!(r > 0.0 && r < 1.0)) throw DomainError("theta_coeffs: requires 0 < r < 1");
  if (order < 1) throw DomainError("theta_coeffs: order must be >= 1");
  const auto n = static_cast<std::size_t>(order);

  // f(x) = 1 - exp(-r x) = sum_{j>=1} (-1)^{j+1} r^j / j! x^j
  std::vector<double> f(n + 1, 0.0);
  double term = 1.0;
  for (std::size_t j = 1; j <= n; ++j) {
    term *= r / static_cast<double>(j);
    f[j] = (j % 2 == 1) ? term : -term;
  }

  // powers[i] holds the truncated series of f^i.
  std::vector<std::vector<double>> powers(n + 1);
  powers[1] = f;
  for (std::size_t i = 2; i <= n; ++i) {
    powers[i].assign(n + 1, 0.0);
    for (std::size_t a = i - 1; a <= n; ++a) {
      if (powers[i - 1][a] == 0.0) continue;
      for (std::size_t b = 1; a + b <= n; ++b) powers[i][a + b] += powers[i - 1][a] * f[b];
    }
  }

  // Matching x^k in theta(f(x)) = r theta(x):
  //   theta_k (r - r^k) = sum_{i<k} theta_i [x^k] f^i
  std::vector<double> theta(n + 1, 0.0);
  theta[1] = 1.0;
  for (std::size_t k = 2; k <= n; ++k) {
    const double denom = r - std::pow(r, static_cast<double>(k));
    if (std::abs(denom) < 1e-300) throw DegenerateError("theta_coeffs: singular coefficient equation");
    double rhs = 0.0;
    for (std::size_t i = 1; i < k; ++i) rhs += theta[i] * powers[i][k];
    theta[k] = rhs / denom;
  }
  return theta;
}

double theta_series(const std::vector<double>& coeffs, double x) {
  double acc = 0.0;
  for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
  return acc;
}

double omega_inverse(double r, double y, double tol) {
  if (!(r > 0.0 && r < 1.0)) throw DomainError("omega_inverse: requires 0 < r < 1");
  if (!(tol > 0.0)) throw DomainError("omega_inverse: tol must be > 0");
  if (y < 0.0) throw RangeError("omega_inverse: y must be >= 0");
  if (y == 0.0) return 0.0;
  SchroederOptions opts;
  opts.tol = std::min(1e-13, 0.01 * tol);
  // theta(r, .) increases to theta(r, 1) / r as x -> infinity.
  const double sup = schroeder_theta(r, 1.0, opts) / r;
  if (y >= sup) {
    throw RangeError("omega_inverse: y = " + std::to_string(y) + " outside [0, " +
                     std::to_string(sup) + ")");
  }
  double lo = 0.0;
  double hi = 1.0;
  while (schroeder_theta(r, hi, opts) < y) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw RangeError("omega_inverse: y too close to the supremum of theta");
  }
  while (hi - lo > tol * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (schroeder_theta(r, mid, opts) < y) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double height_tail_asymptotic(double rho, std::size_t h) {
  const double r = checked_r(rho, "height_tail_asymptotic");
  if (r >= 1.0) {
    if (h == 0) throw DomainError("height_tail_asymptotic: h must be >= 1 at criticality");
    return 2.0 / static_cast<double>(h);
  }
  return schroeder_theta(r, 1.0) * std::pow(r, static_cast<double>(h) + 1.0);
}

}  // namespace randtree
