#include "randtree/multiclass.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "randtree/errors.hpp"

namespace randtree {

void RateMatrices::validate() const {
  const auto n = lambda.rows();
  if (n == 0) throw ConfigError("rates: at least one class required");
  if (lambda.cols() != n || mu.rows() != n || mu.cols() != n) {
    throw ConfigError("rates: lambda and mu must be square matrices of the same size");
  }
  if (!classes.empty() && static_cast<Eigen::Index>(classes.size()) != n) {
    throw ConfigError("rates: class list length does not match the matrix size");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!std::isfinite(lambda(i, j)) || lambda(i, j) < 0.0) {
        throw ConfigError("rates: lambda entries must be finite and >= 0");
      }
      if (!std::isfinite(mu(i, j)) || !(mu(i, j) > 0.0)) {
        throw ConfigError("rates: mu entries must be finite and > 0");
      }
    }
  }
}

Eigen::MatrixXd RateMatrices::rho() const {
  validate();
  return lambda.cwiseQuotient(mu);
}

RateMatrices RateMatrices::single_class(const ModelParams& params) {
  params.validate();
  if (params.pure_birth()) throw ConfigError("rates: mu must be > 0");
  RateMatrices out;
  out.classes = {"0"};
  out.lambda = Eigen::MatrixXd::Constant(1, 1, params.lambda);
  out.mu = Eigen::MatrixXd::Constant(1, 1, params.mu);
  return out;
}

namespace {

void check_nonnegative_square(const Eigen::MatrixXd& a, const char* who) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw DomainError(std::string(who) + ": matrix must be square and nonempty");
  }
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double v = a.data()[i];
    if (!std::isfinite(v) || v < 0.0) {
      throw DomainError(std::string(who) + ": matrix entries must be finite and >= 0");
    }
  }
}

// Strongly connected components of the support graph (Tarjan).
std::vector<std::vector<Eigen::Index>> components(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  std::vector<Eigen::Index> index(n, -1);
  std::vector<Eigen::Index> low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<Eigen::Index> stack;
  std::vector<std::vector<Eigen::Index>> out;
  Eigen::Index counter = 0;

  std::function<void(Eigen::Index)> visit = [&](Eigen::Index v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (Eigen::Index w = 0; w < n; ++w) {
      if (a(v, w) <= 0.0) continue;
      if (index[w] < 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<Eigen::Index> comp;
      Eigen::Index w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp.push_back(w);
      } while (w != v);
      out.push_back(std::move(comp));
    }
  };
  for (Eigen::Index v = 0; v < n; ++v) {
    if (index[v] < 0) visit(v);
  }
  return out;
}

// Irreducible block: B + sI is primitive, so power iteration converges and
// the Collatz-Wielandt ratios bracket the eigenvalue from both sides.
double pf_irreducible(const Eigen::MatrixXd& b, double tol, long max_iter) {
  const Eigen::Index n = b.rows();
  if (n == 1) return b(0, 0);
  const double shift = std::max(b.rowwise().sum().maxCoeff(), 1e-300);
  Eigen::MatrixXd a = b;
  a.diagonal().array() += shift;
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  for (long it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd y = a * x;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double q = y(i) / x(i);
      lo = std::min(lo, q);
      hi = std::max(hi, q);
    }
    if (hi - lo <= tol * std::max(1.0, hi - shift) + 4.0 * 2.2e-16 * hi) {
      return std::max(0.0, 0.5 * (lo + hi) - shift);
    }
    x = y / y.sum();
  }
  throw ConvergenceError("pf_eigenvalue: power iteration did not converge");
}

}  // namespace

double pf_eigenvalue(const Eigen::MatrixXd& a, double tol, long max_iter) {
  check_nonnegative_square(a, "pf_eigenvalue");
  double best = 0.0;
  for (const auto& comp : components(a)) {
    const auto k = static_cast<Eigen::Index>(comp.size());
    Eigen::MatrixXd block(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) block(i, j) = a(comp[i], comp[j]);
    }
    if (k == 1 && block(0, 0) == 0.0) continue;
    best = std::max(best, pf_irreducible(block, tol, max_iter));
  }
  return best;
}

Eigen::MatrixXd mean_offspring_matrix(const Eigen::MatrixXd& rho, const Eigen::VectorXd& r) {
  if (r.size() != rho.cols()) throw DomainError("mean_offspring_matrix: size mismatch");
  return rho * r.array().exp().matrix().asDiagonal();
}

RcSolution solve_rc(const Eigen::MatrixXd& rho, const RcOptions& opts) {
  check_nonnegative_square(rho, "solve_rc");
  if (opts.k_max < 1 || !(opts.tol > 0.0)) throw DomainError("solve_rc: bad options");
  const Eigen::Index n = rho.rows();
  const auto map = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd {
    return rho * y.array().exp().matrix();
  };
  const auto residual = [&](const Eigen::VectorXd& y) {
    return (map(y) - y).cwiseAbs().maxCoeff() / std::max(1.0, y.cwiseAbs().maxCoeff());
  };

  RcSolution out;
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
  if (opts.record_history) out.history.push_back(r);

  constexpr long kCheckEvery = 8;
  for (long k = 1; k <= opts.k_max; ++k) {
    Eigen::VectorXd next = map(r);
    // Guard the monotonicity against rounding.
    next = next.cwiseMax(r);
    out.sweeps = k;
    if (!next.allFinite()) {
      out.divergent = true;
      out.r = r;
      return out;
    }
    const double step = (next - r).cwiseAbs().maxCoeff();
    r = next;
    if (opts.record_history) out.history.push_back(r);
    if (step <= opts.tol * std::max(1.0, r.cwiseAbs().maxCoeff())) {
      out.converged = true;
      out.r = r;
      return out;
    }
    const Eigen::MatrixXd jac = mean_offspring_matrix(rho, r);
    if (!jac.allFinite() || pf_eigenvalue(jac) > 1.0) {
      out.divergent = true;
      out.r = r;
      return out;
    }
    if (k % kCheckEvery != 0) continue;
    // Newton from a subsolution of a convex monotone map stays below the
    // smallest solution; any sign of trouble falls back to plain sweeps.
    Eigen::VectorXd y = r;
    bool ok = true;
    for (int it = 0; it < 60 && ok; ++it) {
      const Eigen::MatrixXd m = mean_offspring_matrix(rho, y);
      if (!m.allFinite() || pf_eigenvalue(m) >= 1.0) {
        ok = false;
        break;
      }
      const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(n, n) - m;
      Eigen::VectorXd y_new = y + lhs.partialPivLu().solve(map(y) - y);
      if (!y_new.allFinite()) {
        ok = false;
        break;
      }
      y_new = y_new.cwiseMax(y);
      const double dy = (y_new - y).cwiseAbs().maxCoeff();
      y = y_new;
      if (dy <= opts.tol * std::max(1.0, y.cwiseAbs().maxCoeff())) break;
    }
    if (ok && residual(y) <= 10.0 * opts.tol) {
      // The Newton limit may overshoot the smallest solution by rounding only.
      out.converged = true;
      out.r = y;
      if (opts.record_history) out.history.push_back(y);
      return out;
    }
  }
  out.r = r;
  return out;
}

MulticlassSolution classify_multiclass(const RateMatrices& rates, const RcOptions& opts) {
  const Eigen::MatrixXd rho = rates.rho();
  MulticlassSolution out;
  out.rho_c = rho.rowwise().sum();
  out.pf_rho = pf_eigenvalue(rho);
  constexpr double kTol = 1e-9;
  out.sufficient = out.rho_c.maxCoeff() <= kInvE + kTol;
  out.necessary = out.pf_rho <= kInvE + kTol;

  const RcSolution sol = solve_rc(rho, opts);
  out.sweeps = sol.sweeps;
  out.ergodic = sol.converged;
  out.inconclusive = (!sol.converged && !sol.divergent) || std::abs(out.pf_rho - kInvE) < 1e-6;

  if (out.ergodic) {
    out.r = sol.r;
    const Eigen::Index n = rho.rows();
    out.m.resize(n, n);
    for (Eigen::Index b = 0; b < n; ++b) {
      for (Eigen::Index c = 0; c < n; ++c) out.m(b, c) = std::exp(out.r(c)) / rates.mu(b, c);
    }
  }

  if (out.inconclusive) return out;
  if (out.ergodic && out.pf_rho > kInvE + 1e-6) {
    throw InconsistencyError("classify_multiclass: fixed point found but PF(rho) = " +
                             std::to_string(out.pf_rho) + " > 1/e");
  }
  if (out.sufficient && !out.ergodic) {
    throw InconsistencyError("classify_multiclass: row sums <= 1/e but the iteration diverged");
  }
  if (out.sufficient) {
    const Eigen::VectorXd bound = kE * out.rho_c;
    for (Eigen::Index c = 0; c < out.r.size(); ++c) {
      if (out.r(c) > bound(c) + 1e-9) {
        throw InconsistencyError("classify_multiclass: r_c exceeds rho_c e");
      }
    }
  }
  return out;
}

Eigen::MatrixXd mean_volume_matrix(const Eigen::MatrixXd& rho, const Eigen::VectorXd& r) {
  check_nonnegative_square(rho, "mean_volume_matrix");
  const Eigen::MatrixXd m = mean_offspring_matrix(rho, r);
  const double pf = pf_eigenvalue(m);
  if (pf >= 1.0) {
    throw Infeasible("mean_volume_matrix: PF(M) = " + std::to_string(pf) + " >= 1, infinite means");
  }
  const Eigen::Index n = rho.rows();
  const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(n, n) - m;
  Eigen::MatrixXd en = lhs.partialPivLu().solve(Eigen::MatrixXd::Identity(n, n));
  if (en.minCoeff() < -1e-9 * std::max(1.0, en.cwiseAbs().maxCoeff())) {
    throw InconsistencyError("mean_volume_matrix: negative entry in (I - M)^{-1}");
  }
  return en.cwiseMax(0.0);
}

Eigen::MatrixXd multiclass_height_tail(const Eigen::MatrixXd& rho, const Eigen::VectorXd& r,
                                       std::size_t h_max) {
  check_nonnegative_square(rho, "multiclass_height_tail");
  const Eigen::MatrixXd m = mean_offspring_matrix(rho, r);
  const Eigen::Index n = rho.rows();
  Eigen::MatrixXd tail(n, static_cast<Eigen::Index>(h_max) + 1);
  for (Eigen::Index c = 0; c < n; ++c) tail(c, 0) = -std::expm1(-r(c));
  for (Eigen::Index h = 1; h < tail.cols(); ++h) {
    const Eigen::VectorXd s = m * tail.col(h - 1);
    for (Eigen::Index c = 0; c < n; ++c) tail(c, h) = -std::expm1(-s(c));
  }
  return tail;
}

Eigen::VectorXd volume_pgf_fixed_point(const Eigen::MatrixXd& rho, const Eigen::VectorXd& r,
                                       const Eigen::VectorXd& z, double tol, long k_max) {
  check_nonnegative_square(rho, "volume_pgf_fixed_point");
  if (z.size() != rho.rows()) throw DomainError("volume_pgf_fixed_point: z has the wrong size");
  for (Eigen::Index c = 0; c < z.size(); ++c) {
    if (!(z(c) > 0.0 && z(c) <= 1.0)) throw DomainError("volume_pgf_fixed_point: z must lie in (0, 1]");
  }
  const Eigen::MatrixXd m = mean_offspring_matrix(rho, r);
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(z.size());
  for (long k = 0; k < k_max; ++k) {
    const Eigen::VectorXd arg = m * (phi.array() - 1.0).matrix();
    const Eigen::VectorXd next = z.cwiseProduct(arg.array().exp().matrix());
    const double step = (next - phi).cwiseAbs().maxCoeff();
    phi = next;
    if (step <= tol) return phi;
  }
  throw NoConvergence("volume_pgf_fixed_point: no convergence (near-critical rates?)");
}

}  // namespace randtree
