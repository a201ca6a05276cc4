#include "randtree/model_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "randtree/errors.hpp"

namespace randtree {

void ModelParams::validate() const {
  if (!std::isfinite(lambda) || lambda <= 0.0) {
    throw DomainError("lambda must be finite and > 0, got " + std::to_string(lambda));
  }
  if (!std::isfinite(mu) || mu < 0.0) {
    throw DomainError("mu must be finite and >= 0, got " + std::to_string(mu));
  }
}

double ModelParams::rho() const {
  if (mu == 0.0) throw DomainError("rho is undefined for a pure-birth model (mu = 0)");
  return lambda / mu;
}

void RootSolveCfg::validate() const {
  if (!(abs_tol > 0.0)) throw DomainError("RootSolveCfg.abs_tol must be > 0");
  if (max_iter < 1) throw DomainError("RootSolveCfg.max_iter must be >= 1");
}

std::string_view regime_name(Regime regime) {
  switch (regime) {
    case Regime::Ergodic:
      return "ergodic";
    case Regime::Critical:
      return "critical";
    case Regime::Transient:
      return "transient";
    case Regime::PureBirth:
      return "pure_birth";
  }
  return "unknown";
}

double safe_newton(const std::function<double(double)>& f,
                   const std::function<double(double)>& df, double lo, double hi,
                   const RootSolveCfg& cfg) {
  cfg.validate();
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw DomainError("safe_newton: bracket does not straddle a root");
  }
  // Orient so that f(lo) < 0 < f(hi).
  if (flo > 0.0) std::swap(lo, hi);

  double x = 0.5 * (lo + hi);
  double step = std::abs(hi - lo);
  for (int it = 0; it < cfg.max_iter; ++it) {
    const double fx = f(x);
    if (fx == 0.0) return x;
    if (fx < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    if (std::abs(fx) <= cfg.abs_tol && step <= cfg.abs_tol * std::max(1.0, std::abs(x))) {
      return x;
    }
    const double a = std::min(lo, hi);
    const double b = std::max(lo, hi);
    if (std::nextafter(a, b) >= b) {
      if (std::abs(fx) <= cfg.abs_tol) return x;
      throw ConvergenceError("safe_newton: bracket collapsed with residual above tolerance");
    }
    const double d = df(x);
    double next = (d != 0.0 && std::isfinite(d)) ? x - fx / d : std::numeric_limits<double>::quiet_NaN();
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    step = std::abs(next - x);
    x = next;
  }
  throw ConvergenceError("safe_newton: iteration cap of " + std::to_string(cfg.max_iter) +
                         " reached");
}

double solve_r(double rho, const RootSolveCfg& cfg) {
  cfg.validate();
  if (!(rho > 0.0)) throw DomainError("solve_r: rho must be > 0");
  if (rho > kInvE + cfg.abs_tol) {
    throw DomainError("solve_r: rho = " + std::to_string(rho) + " exceeds 1/e");
  }
  // Within a few ulps of 1/e the root is not resolvable in double precision
  // (the map is flat there); the maximum is attained at exactly r = 1.
  if (rho >= kInvE * (1.0 - 4.0 * std::numeric_limits<double>::epsilon())) return 1.0;

  auto f = [rho](double r) { return r * std::exp(-r) - rho; };
  auto df = [](double r) { return (1.0 - r) * std::exp(-r); };
  return safe_newton(f, df, 0.0, 1.0, cfg);
}

double solve_x(double rho, const RootSolveCfg& cfg) {
  cfg.validate();
  if (!(rho > 0.0) || !std::isfinite(rho)) throw DomainError("solve_x: rho must be finite and > 0");
  const double inv = 1.0 / rho;
  // Log form x + log x = -log rho is monotone and well conditioned; its
  // residual is the relative residual of x e^x = 1/rho.
  const double log_rho = std::log(rho);
  auto g = [log_rho](double x) { return x + std::log(x) + log_rho; };
  auto dg = [](double x) { return 1.0 + 1.0 / x; };
  const double lo = 0.5 / (rho + 1.0);
  const double hi = std::max(1.0, std::log1p(inv));
  double x = safe_newton(g, dg, lo, hi, cfg);
  // One Newton polish on the direct form tightens the absolute residual.
  const double ex = std::exp(x);
  const double polished = x - (x * ex - inv) / ((1.0 + x) * ex);
  if (std::isfinite(polished) && polished > 0.0) x = polished;
  return x;
}

std::pair<double, double> ell_bounds(double rho, const RootSolveCfg& cfg) {
  if (!(rho > kInvE)) throw DomainError("ell_bounds: requires rho > 1/e");
  const double x = solve_x(rho, cfg);
  return {x, std::min(1.0, 1.0 / rho)};
}

Classification classify(const ModelParams& params, const RootSolveCfg& cfg) {
  params.validate();
  cfg.validate();
  Classification c;
  if (params.pure_birth()) {
    c.regime = Regime::PureBirth;
    c.ell_lower = 0.0;
    c.ell_upper = 0.0;
    return c;
  }
  const double rho = params.rho();
  c.rho = rho;
  c.x = solve_x(rho, cfg);
  if (std::abs(rho - kInvE) <= kCriticalBand) {
    c.regime = Regime::Critical;
    c.r = 1.0;
  } else if (rho < kInvE) {
    c.regime = Regime::Ergodic;
    c.r = solve_r(rho, cfg);
  } else {
    c.regime = Regime::Transient;
    const auto [lo, hi] = ell_bounds(rho, cfg);
    c.ell_lower = lo;
    c.ell_upper = hi;
    return c;
  }
  c.ell_lower = 1.0;
  c.ell_upper = 1.0;
  c.mean_lifetime = *c.r / params.lambda;
  return c;
}

}  // namespace randtree
