#include "randtree/growth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "randtree/errors.hpp"
#include "randtree/kernels.hpp"
#include "randtree/model_core.hpp"

namespace randtree {

LaplaceEval LaplaceEval::pure_birth() { return LaplaceEval{}; }

LaplaceEval LaplaceEval::from_grid(const GridFunction& p) {
  p.validate();
  if (p.size() < 2) throw GridError("LaplaceEval: need at least two grid nodes");
  if (std::abs(p.values.front()) > 1e-12) throw GridError("LaplaceEval: p(0) must be 0");
  LaplaceEval ev;
  ev.pure_birth_ = false;
  ev.step_ = p.step;
  ev.increments_.resize(p.size() - 1);
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    const double d = p.values[i + 1] - p.values[i];
    if (d < -1e-12) throw GridError("LaplaceEval: p must be nondecreasing");
    ev.increments_[i] = d;
  }
  ev.ell_ = p.values.back();
  if (ev.ell_ > 1.0 + 1e-9) throw GridError("LaplaceEval: p exceeds 1");

  // s p*(s) must be nonincreasing in s and stay within [0, 1].
  double prev = std::numeric_limits<double>::infinity();
  for (double s = 1e-4; s < 1e4; s *= 1.5) {
    const double v = ev.s_pstar(s);
    if (v < -1e-12 || v > 1.0 + 1e-9 || v > prev + 1e-12) {
      throw NonmonotoneError("LaplaceEval: s p*(s) not a nonincreasing map into [0,1] at s = " +
                             std::to_string(s));
    }
    prev = v;
  }
  return ev;
}

double LaplaceEval::s_pstar(double s) const {
  if (!(s > 0.0)) throw DomainError("LaplaceEval: s must be > 0");
  if (pure_birth_) return 0.0;
  // Stieltjes trapezoid: cell i contributes dp_i (e^{-s t_i} + e^{-s t_{i+1}}) / 2.
  const double q = std::exp(-s * step_);
  return 0.5 * (1.0 + q) * kernels::discounted_sum(increments_, q);
}

double b_function(double s, double c, const LaplaceEval& p_star, double lambda) {
  if (!(s > 0.0) || !(c > 0.0)) throw DomainError("b_function: s and c must be > 0");
  const double arg = lambda * (1.0 - p_star.s_pstar(s)) / s;
  if (!(arg > 0.0)) throw DomainError("b_function: log argument is nonpositive");
  return s / c + std::log(arg);
}

namespace {

class Saddle {
 public:
  Saddle(const LaplaceEval& ev, double lambda) : ev_(ev), lambda_(lambda) {}

  // log(lambda (1 - s p*(s)) / s)
  double log_part(double s) const {
    const double arg = lambda_ * (1.0 - ev_.s_pstar(s)) / s;
    if (!(arg > 0.0)) throw DomainError("solve_delta: log argument is nonpositive");
    return std::log(arg);
  }

  double d_log_part(double s) const {
    const double h = std::max(1e-6, 1e-4 * s);
    const double lo = std::max(s - h, 0.5 * s);
    const double hi = lo + 2.0 * (s - lo);
    return (log_part(hi) - log_part(lo)) / (hi - lo);
  }

  double db_ds(double s, double c) const { return 1.0 / c + d_log_part(s); }
  double b(double s, double c) const { return s / c + log_part(s); }

  // argmin of b(., c): roots of db/ds going from negative to positive,
  // refined by bisection; the smallest b among them wins.
  std::pair<double, double> minimize(double c) const {
    const double s_min = 1e-7 * std::max(lambda_, c);
    const double s_max = 1e3 * std::max(lambda_, c);
    constexpr int kScan = 240;
    const double ratio = std::pow(s_max / s_min, 1.0 / kScan);
    double best_s = std::numeric_limits<double>::quiet_NaN();
    double best_b = std::numeric_limits<double>::infinity();
    double s_prev = s_min;
    double d_prev = db_ds(s_prev, c);
    for (int i = 1; i <= kScan; ++i) {
      const double s_cur = s_min * std::pow(ratio, i);
      const double d_cur = db_ds(s_cur, c);
      if (d_prev < 0.0 && d_cur >= 0.0) {
        double lo = s_prev;
        double hi = s_cur;
        for (int it = 0; it < 100 && hi - lo > 1e-14 * hi; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (db_ds(mid, c) < 0.0) {
            lo = mid;
          } else {
            hi = mid;
          }
        }
        const double s_root = 0.5 * (lo + hi);
        const double b_root = b(s_root, c);
        if (b_root < best_b) {
          best_b = b_root;
          best_s = s_root;
        }
      }
      s_prev = s_cur;
      d_prev = d_cur;
    }
    if (!std::isfinite(best_b)) {
      throw NoSaddle("solve_delta: no stationary point of b(., c) for c = " + std::to_string(c));
    }
    return {best_s, best_b};
  }

 private:
  const LaplaceEval& ev_;
  double lambda_;
};

}  // namespace

SaddleResult solve_delta(const LaplaceEval& p_star, double lambda, double tol) {
  if (!(lambda > 0.0)) throw DomainError("solve_delta: lambda must be > 0");
  if (!(tol > 0.0)) throw DomainError("solve_delta: tol must be > 0");
  SaddleResult out;
  if (p_star.proper()) {
    // b(s, c) <= log(lambda m) = log r <= 0 as s -> 0: no positive growth.
    out.delta = 0.0;
    out.s_star = 0.0;
    out.region_ok = true;
    return out;
  }

  const Saddle saddle(p_star, lambda);
  // b(s, c) <= s / c + log(lambda / s), whose minimum over s is negative once
  // c > lambda e: the root lies below that.
  double c_hi = lambda * kE * (1.0 + 1e-3);
  if (saddle.minimize(c_hi).second >= 0.0) {
    throw NoSaddle("solve_delta: b(s*(c), c) not negative at c = lambda e");
  }
  double c_lo = 0.5 * lambda * kE;
  int shrink = 0;
  while (saddle.minimize(c_lo).second <= 0.0) {
    c_hi = c_lo;
    c_lo *= 0.5;
    if (++shrink > 80) throw NoSaddle("solve_delta: no sign change of b(s*(c), c) in c");
  }
  for (int it = 0; it < 200 && c_hi - c_lo > tol * c_hi; ++it) {
    const double mid = 0.5 * (c_lo + c_hi);
    if (saddle.minimize(mid).second > 0.0) {
      c_lo = mid;
    } else {
      c_hi = mid;
    }
  }
  out.delta = 0.5 * (c_lo + c_hi);
  out.s_star = saddle.minimize(out.delta).first;
  out.region_ok = out.s_star > lambda * (1.0 - p_star.s_pstar(out.s_star));
  if (!out.region_ok) {
    throw NoSaddle("solve_delta: saddle s* = " + std::to_string(out.s_star) +
                   " lies outside the region s > lambda (1 - s p*(s))");
  }
  return out;
}

double pure_birth_delta(double lambda) {
  if (!(lambda > 0.0)) throw DomainError("pure_birth_delta: lambda must be > 0");
  return lambda * kE;
}

double pure_birth_mean_level(double lambda, int n, double t) {
  if (!(lambda > 0.0) || n < 0 || !(t >= 0.0)) throw DomainError("pure_birth_mean_level: bad arguments");
  if (n == 0) return 1.0;
  if (t == 0.0) return 0.0;
  const double nd = static_cast<double>(n);
  return std::exp(nd * std::log(lambda * t) - std::lgamma(nd + 1.0));
}

double pure_birth_volume_pgf(double z, double lambda, double t) {
  if (!(z > 0.0 && z <= 1.0) || !(t >= 0.0) || !(lambda > 0.0)) {
    throw DomainError("pure_birth_volume_pgf: requires 0 < z <= 1, t >= 0, lambda > 0");
  }
  return 1.0 / (1.0 + (1.0 / z - 1.0) * std::exp(lambda * t));
}

double pure_birth_scaled_laplace(double s, double lambda, double t) {
  if (!(s >= 0.0)) throw DomainError("pure_birth_scaled_laplace: s must be >= 0");
  const double scaled = s * std::exp(-lambda * t);
  // z^{-1} - 1 = expm1(scaled) for z = exp(-scaled).
  return 1.0 / (1.0 + std::expm1(scaled) * std::exp(lambda * t));
}

double LevelTransforms::phi() const { return std::exp(log_phi); }
double LevelTransforms::phi_tilde() const { return std::exp(log_phi_tilde); }

LevelTransforms level_transforms(const LaplaceEval& p_star, double lambda, int k, double s) {
  if (!(s > 0.0) || k < 0 || !(lambda > 0.0)) throw DomainError("level_transforms: bad arguments");
  const double one_minus = 1.0 - p_star.s_pstar(s);
  if (!(one_minus > 0.0)) throw DomainError("level_transforms: 1 - s p*(s) must be > 0");
  const double kd = static_cast<double>(k);
  LevelTransforms out;
  out.log_phi = kd * std::log(lambda) + kd * std::log(one_minus) - (kd + 1.0) * std::log(s);
  out.log_phi_tilde = out.log_phi + std::log(one_minus);
  return out;
}

std::vector<BSurfacePoint> b_surface(const LaplaceEval& p_star, double lambda,
                                     const std::vector<double>& s_values,
                                     const std::vector<double>& c_values) {
  std::vector<BSurfacePoint> out;
  out.reserve(s_values.size() * c_values.size());
  for (double s : s_values) {
    for (double c : c_values) {
      if (!(s > 0.0) || !(c > 0.0)) continue;
      const double arg = lambda * (1.0 - p_star.s_pstar(s)) / s;
      if (!(arg > 0.0)) continue;
      out.push_back({s, c, s / c + std::log(arg)});
    }
  }
  return out;
}

}  // namespace randtree
