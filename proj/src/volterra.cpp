#include "randtree/volterra.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "randtree/errors.hpp"
#include "randtree/kernels.hpp"

namespace randtree {

void GridFunction::validate() const {
  if (!(step > 0.0) || !std::isfinite(step)) throw GridError("grid step must be finite and > 0");
  if (values.empty()) throw GridError("grid has no nodes");
  for (double v : values) {
    if (!std::isfinite(v)) throw GridError("grid holds a non-finite value");
  }
}

GridFunction GridFunction::sample(double step, std::size_t nodes,
                                  const std::function<double(double)>& f) {
  GridFunction g;
  g.step = step;
  g.values.resize(nodes);
  for (std::size_t i = 0; i < nodes; ++i) g.values[i] = f(step * static_cast<double>(i));
  return g;
}

GridSpec GridSpec::defaults_for(const ModelParams& params) {
  params.validate();
  const double scale = params.pure_birth() ? params.lambda : params.mu;
  return GridSpec{1e-3 / scale, 50.0 / scale};
}

std::size_t GridSpec::nodes() const {
  if (!(step > 0.0) || !(horizon > 0.0)) throw GridError("GridSpec: step and horizon must be > 0");
  return static_cast<std::size_t>(std::llround(horizon / step)) + 1;
}

double trapezoid(const GridFunction& f) {
  f.validate();
  const auto& v = f.values;
  if (v.size() < 2) return 0.0;
  double s = 0.5 * (v.front() + v.back());
  for (std::size_t i = 1; i + 1 < v.size(); ++i) s += v[i];
  return s * f.step;
}

GridFunction beta_from_p(const GridFunction& p, const ModelParams& params) {
  p.validate();
  params.validate();
  GridFunction beta;
  beta.step = p.step;
  beta.values.resize(p.size());
  const double h = p.step;
  double integral = 0.0;
  beta.values[0] = params.mu;
  for (std::size_t i = 1; i < p.size(); ++i) {
    integral += 0.5 * h * ((1.0 - p.values[i - 1]) + (1.0 - p.values[i]));
    beta.values[i] = params.mu * std::exp(-params.lambda * integral);
  }
  return beta;
}

GridFunction solve_p_from_beta(const GridFunction& beta, double instability_tol) {
  beta.validate();
  const std::size_t n_nodes = beta.size();
  const double h = beta.step;
  const auto& b = beta.values;
  for (double v : b) {
    if (v < 0.0) throw GridError("solve_p_from_beta: beta must be nonnegative");
  }

  // Reversed copy so that beta(t_n - t_j), j = 1..n-1, is a contiguous run
  // matching g[1..n-1]: beta[n - j] = rev[n_nodes - 1 - n + j].
  std::vector<double> rev(b.rbegin(), b.rend());
  std::vector<double> g(n_nodes, 0.0);  // p'
  GridFunction p;
  p.step = h;
  p.values.assign(n_nodes, 0.0);

  g[0] = b[0];
  const double denom = 1.0 + 0.5 * h * b[0];
  const double floor = -instability_tol * std::max(1.0, b[0]);
  for (std::size_t n = 1; n < n_nodes; ++n) {
    double conv = 0.5 * b[n] * g[0];
    if (n > 1) {
      conv += kernels::dot(std::span<const double>(g.data() + 1, n - 1),
                           std::span<const double>(rev.data() + (n_nodes - n), n - 1));
    }
    const double gn = (b[n] - h * conv) / denom;
    if (gn < floor) {
      throw InstabilityError("solve_p_from_beta: negative density " + std::to_string(gn) +
                             " at t = " + std::to_string(h * static_cast<double>(n)) +
                             " (grid too coarse)");
    }
    g[n] = gn;
    p.values[n] = std::max(p.values[n - 1], p.values[n - 1] + 0.5 * h * (g[n - 1] + g[n]));
  }
  return p;
}

namespace {

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

double one_minus_integral(const GridFunction& p) {
  GridFunction c = p;
  for (double& v : c.values) v = 1.0 - v;
  return trapezoid(c);
}

void require_mu(const ModelParams& params, const char* who) {
  params.validate();
  if (params.pure_birth()) throw DomainError(std::string(who) + ": requires mu > 0");
}

}  // namespace

SchemeState ite_scheme(const ModelParams& params, const GridSpec& grid, const SchemeOptions& opts) {
  require_mu(params, "ite_scheme");
  const std::size_t nodes = grid.nodes();

  SchemeState st;
  st.beta.step = grid.step;
  st.beta.values.assign(nodes, params.mu);
  // p_{-1} = 1 is the fictitious predecessor of p_0.
  std::vector<double> prev(nodes, 1.0);

  for (int k = 0; k <= opts.k_max; ++k) {
    st.k = k;
    st.p = solve_p_from_beta(st.beta);
    for (std::size_t i = 0; i < nodes; ++i) {
      if (st.p.values[i] > prev[i] + opts.monotone_tol) {
        throw NonmonotoneError("ite_scheme: p_" + std::to_string(k) + " exceeds p_" +
                               std::to_string(k - 1) + " at t = " + std::to_string(st.p.t(i)));
      }
    }
    st.m = one_minus_integral(st.p);
    st.r = params.lambda * st.m;
    st.r_history.push_back(st.r);
    if (st.r > 1.0 + 1e-6) {
      throw NoConvergence("ite_scheme: r_" + std::to_string(k) + " = " + std::to_string(st.r) +
                          " > 1, the scheme diverges (rho > 1/e)");
    }
    const double change = sup_diff(st.p.values, prev);
    if (k > 0 && change <= opts.tol) {
      if (params.rho() > kInvE + kCriticalBand) {
        throw NoConvergence("ite_scheme: iterates settled at r = " + std::to_string(st.r) +
                            " only because the horizon truncates them; no limit exists for rho > 1/e");
      }
      st.converged = true;
      return st;
    }
    if (k == opts.k_max) break;
    prev = st.p.values;
    st.beta = beta_from_p(st.p, params);
  }
  return st;
}

RRecursion r_recursion(double rho, int k_max, double tol) {
  if (!(rho > 0.0)) throw DomainError("r_recursion: rho must be > 0");
  RRecursion out;
  out.r.push_back(rho);
  for (int k = 0; k < k_max; ++k) {
    const double next = rho * std::exp(out.r.back());
    const double prev = out.r.back();
    out.r.push_back(next);
    if (next > 1.0 + tol) {
      out.diverged = true;
      return out;
    }
    if (std::abs(next - prev) <= tol) {
      out.converged = true;
      return out;
    }
  }
  return out;
}

double tail_plateau(const GridFunction& f, double fraction) {
  f.validate();
  const std::size_t n = f.size();
  const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(fraction * static_cast<double>(n)));
  double s = 0.0;
  for (std::size_t i = n - count; i < n; ++i) s += f.values[i];
  return s / static_cast<double>(count);
}

Ite1Result ite1_scheme(const ModelParams& params, const GridSpec& grid, const SchemeOptions& opts) {
  require_mu(params, "ite1_scheme");
  const std::size_t nodes = grid.nodes();

  Ite1Result out;
  out.gamma = GridFunction::sample(grid.step, nodes,
                                   [&](double t) { return params.mu * std::exp(-params.lambda * t); });
  // q_{-1} = 0.
  std::vector<double> prev(nodes, 0.0);
  for (int k = 0; k <= opts.k_max; ++k) {
    out.k = k;
    out.q = solve_p_from_beta(out.gamma);
    for (std::size_t i = 0; i < nodes; ++i) {
      if (out.q.values[i] < prev[i] - opts.monotone_tol) {
        throw NonmonotoneError("ite1_scheme: q_" + std::to_string(k) + " below q_" +
                               std::to_string(k - 1) + " at t = " + std::to_string(out.q.t(i)));
      }
    }
    out.ell_history.push_back(out.q.values.back());
    const double change = sup_diff(out.q.values, prev);
    if (k > 0 && change <= opts.tol) {
      out.converged = true;
      break;
    }
    if (k == opts.k_max) break;
    prev = out.q.values;
    out.gamma = beta_from_p(out.q, params);
  }

  out.ell_estimate = tail_plateau(out.q);
  const std::size_t n = out.q.size();
  const std::size_t back = std::max<std::size_t>(1, n / 10);
  const double q_end = out.q.values[n - 1];
  const double rise = q_end - out.q.values[n - 1 - back];
  out.tail_flat = rise <= std::max(opts.tol, 1e-6);

  // Remaining mass beyond T from an exponential tail with rate b, the limit of
  // the (a_k, b_k) bounds: lambda / r below 1/e, lambda above.
  out.ell_extrapolated = q_end;
  if (rise > 0.0) {
    const double rho = params.rho();
    const double rate = rho < kInvE ? params.lambda / solve_r(rho) : params.lambda;
    const double span = out.q.step * static_cast<double>(back);
    const double growth = std::expm1(rate * span);
    if (growth > 0.0 && std::isfinite(growth)) out.ell_extrapolated = q_end + rise / growth;
  }
  return out;
}

ExpBoundSeq rec_ab(const ModelParams& params, int k_max, double tol) {
  require_mu(params, "rec_ab");
  const double lam = params.lambda;
  const double mu = params.mu;
  ExpBoundSeq seq;
  double a = mu / (lam + mu);
  double b = lam + mu;
  seq.terms.emplace_back(a, b);
  for (int k = 0; k < k_max; ++k) {
    // a' b' = P and b' - a' b' = Q give b' = P + Q, a' = P / (P + Q).
    const double prod = mu * std::exp(-lam * a / b);
    const double rest = lam * (1.0 - a);
    const double b_next = prod + rest;
    const double a_next = prod / b_next;
    const double change = std::abs(a_next - a) + std::abs(b_next - b);
    a = a_next;
    b = b_next;
    seq.terms.emplace_back(a, b);
    if (change <= tol) {
      seq.converged = true;
      return seq;
    }
  }
  throw ConvergenceError("rec_ab: no convergence within " + std::to_string(k_max) + " steps");
}

double incomplete_gamma_II_continued(double x, double y, double tol) {
  if (!(y >= 0.0)) throw DomainError("incomplete_gamma_II: y must be >= 0");
  if (x <= 0.0 && std::floor(x) == x) throw DomainError("incomplete_gamma_II: pole at nonpositive integer x");
  if (y > 700.0) throw InstabilityError("incomplete_gamma_II: y too large, series overflows");
  double coef = 1.0;  // y^n / n!
  double sum = 1.0 / x;
  constexpr int kMaxTerms = 100'000;
  for (int n = 1; n < kMaxTerms; ++n) {
    coef *= y / n;
    const double term = coef / (x + n);
    sum += term;
    if (n > y && n > -x && std::abs(term) <= tol * std::abs(sum)) return sum;
    if (coef == 0.0) return sum;
  }
  throw ConvergenceError("incomplete_gamma_II: series did not converge");
}

double incomplete_gamma_II(double x, double y, double tol) {
  if (!(x > 0.0)) throw DomainError("incomplete_gamma_II: requires x > 0");
  return incomplete_gamma_II_continued(x, y, tol);
}

ExpBoundSeq lower_bound_ld(const ModelParams& params, int k_max, double tol) {
  require_mu(params, "lower_bound_ld");
  const double lam = params.lambda;
  const double mu = params.mu;
  ExpBoundSeq seq;
  double ell = mu / (lam + mu);
  double theta = lam + mu;
  seq.terms.emplace_back(ell, theta);

  for (int k = 0; k < k_max; ++k) {
    const double y = lam * ell / theta;
    const double scale = (mu / theta) * std::exp(-y);
    const double alpha = scale * incomplete_gamma_II(lam * (1.0 - ell) / theta, y);
    const double ell_next = alpha / (1.0 + alpha);

    // theta_{k+1} = lambda (1 - ell_k) - x theta_k where x in (-1, 0) solves
    // scale * II(x, y) + 1 = 0; II decreases in x from +inf at -1 to -inf at 0.
    auto h = [&](double xx) { return scale * incomplete_gamma_II_continued(xx, y) + 1.0; };
    double lo = -1.0 + 1e-12;
    double hi = -1e-12;
    const double h_lo = h(lo);
    const double h_hi = h(hi);
    if (!(h_lo > 0.0 && h_hi < 0.0) || !std::isfinite(h_lo) || !std::isfinite(h_hi)) {
      throw InstabilityError("lower_bound_ld: theta root not bracketed at step " + std::to_string(k));
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (h(mid) > 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const double x_root = 0.5 * (lo + hi);
    const double theta_next = lam * (1.0 - ell) - x_root * theta;
    if (!std::isfinite(ell_next) || !std::isfinite(theta_next) || !(theta_next > 0.0)) {
      throw InstabilityError("lower_bound_ld: non-finite iterate at step " + std::to_string(k));
    }
    const double change = std::abs(ell_next - ell) + std::abs(theta_next - theta);
    ell = ell_next;
    theta = theta_next;
    seq.terms.emplace_back(ell, theta);
    if (change <= tol) {
      seq.converged = true;
      return seq;
    }
  }
  throw ConvergenceError("lower_bound_ld: no convergence within " + std::to_string(k_max) + " steps");
}

double epsilon_bar(const GridFunction& p, double ell, double lambda) {
  p.validate();
  if (!(lambda > 0.0)) throw DomainError("epsilon_bar: lambda must be > 0");
  constexpr double kSupTol = 1e-6;
  const double sup = *std::max_element(p.values.begin(), p.values.end());
  if (sup > ell + kSupTol) {
    throw DomainError("epsilon_bar: ell = " + std::to_string(ell) + " below sup p = " + std::to_string(sup));
  }
  GridFunction gap = p;
  for (double& v : gap.values) v = ell - v;
  double integral = trapezoid(gap);

  const std::size_t n = gap.size();
  const std::size_t back = std::max<std::size_t>(1, n / 10);
  if (n > back) {
    const double f_end = gap.values[n - 1];
    const double f_mid = gap.values[n - 1 - back];
    if (f_end > 1e-14) {
      if (!(f_mid > f_end)) throw TailNotFlat("epsilon_bar: gap to ell is not decaying at the horizon");
      const double rate = std::log(f_mid / f_end) / (gap.step * static_cast<double>(back));
      integral += f_end / rate;
    }
  }
  return lambda * integral;
}

}  // namespace randtree
