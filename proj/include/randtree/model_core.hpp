#pragma once

#include <functional>
#include <optional>
#include <string_view>
#include <utility>

namespace randtree {

inline constexpr double kInvE = 0.36787944117144233;  // e^{-1}
inline constexpr double kE = 2.718281828459045;

/// Birth rate per vertex and death rate per eligible leaf.
struct ModelParams {
  double lambda = 1.0;
  double mu = 1.0;

  /// Throws DomainError unless lambda > 0 and mu >= 0 (both finite).
  void validate() const;
  bool pure_birth() const { return mu == 0.0; }
  /// lambda / mu; throws DomainError when mu == 0.
  double rho() const;
};

struct RootSolveCfg {
  double abs_tol = 1e-12;
  int max_iter = 200;

  void validate() const;
};

enum class Regime { Ergodic, Critical, Transient, PureBirth };

std::string_view regime_name(Regime regime);

/// Half-width of the band around 1/e reported as Critical.
inline constexpr double kCriticalBand = 1e-9;

struct Classification {
  Regime regime = Regime::Ergodic;
  std::optional<double> rho;
  std::optional<double> r;  // smallest root of r e^{-r} = rho, rho <= 1/e
  std::optional<double> x;  // root of x e^x = 1/rho
  // Bounds on the limit of the lifetime distribution; both 1 when ergodic.
  std::optional<double> ell_lower;
  std::optional<double> ell_upper;
  std::optional<double> mean_lifetime;  // r / lambda, ergodic only

  bool ergodic() const { return regime == Regime::Ergodic || regime == Regime::Critical; }
};

/// Smallest root r in (0, 1] of r e^{-r} = rho.
double solve_r(double rho, const RootSolveCfg& cfg = {});

/// Positive root of x e^x = 1 / rho.
double solve_x(double rho, const RootSolveCfg& cfg = {});

Classification classify(const ModelParams& params, const RootSolveCfg& cfg = {});

/// (x, min(1, 1/rho)) for rho > 1/e.
std::pair<double, double> ell_bounds(double rho, const RootSolveCfg& cfg = {});

/// Safeguarded Newton iteration on a bracket [lo, hi] with f(lo) and f(hi) of
/// opposite signs. Newton steps that leave the bracket are replaced by
/// bisection. Converges when |f| <= cfg.abs_tol and the last step was below
/// cfg.abs_tol * max(1, |x|), or when the bracket collapses to adjacent
/// doubles. Throws ConvergenceError after cfg.max_iter iterations, DomainError
/// if the bracket does not straddle a root.
double safe_newton(const std::function<double(double)>& f,
                   const std::function<double(double)>& df, double lo, double hi,
                   const RootSolveCfg& cfg);

}  // namespace randtree
