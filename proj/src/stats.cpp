#include "randtree/stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "randtree/errors.hpp"

namespace randtree {

double Estimate::z(double theory) const {
  const double diff = value - theory;
  if (se > 0.0) return diff / se;
  return diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff);
}

void MeanAccumulator::add(double x) {
  ++n_;
  sum_ += x;
  sum_sq_ += x * x;
}

void MeanAccumulator::merge(const MeanAccumulator& other) {
  n_ += other.n_;
  sum_ += other.sum_;
  sum_sq_ += other.sum_sq_;
}

Estimate MeanAccumulator::estimate() const {
  if (n_ < 2) throw InsufficientData("MeanAccumulator: need at least two observations");
  const double n = static_cast<double>(n_);
  const double mean = sum_ / n;
  const double var = std::max(0.0, (sum_sq_ - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n)};
}

RegenerativeEstimator::RegenerativeEstimator(std::size_t metrics)
    : sa_(metrics, 0.0), saa_(metrics, 0.0), sab_(metrics, 0.0) {}

void RegenerativeEstimator::add_cycle(std::span<const double> a, double b) {
  if (a.size() != sa_.size()) throw DomainError("RegenerativeEstimator: metric count mismatch");
  ++n_;
  sb_ += b;
  sbb_ += b * b;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa_[i] += a[i];
    saa_[i] += a[i] * a[i];
    sab_[i] += a[i] * b;
  }
}

void RegenerativeEstimator::merge(const RegenerativeEstimator& other) {
  if (other.sa_.size() != sa_.size()) throw DomainError("RegenerativeEstimator: metric count mismatch");
  n_ += other.n_;
  sb_ += other.sb_;
  sbb_ += other.sbb_;
  for (std::size_t i = 0; i < sa_.size(); ++i) {
    sa_[i] += other.sa_[i];
    saa_[i] += other.saa_[i];
    sab_[i] += other.sab_[i];
  }
}

Estimate RegenerativeEstimator::estimate(std::size_t metric) const {
  if (n_ < 2) throw InsufficientData("RegenerativeEstimator: need at least two cycles");
  if (metric >= sa_.size()) throw DomainError("RegenerativeEstimator: metric out of range");
  const double n = static_cast<double>(n_);
  const double theta = sa_[metric] / sb_;
  const double ss = saa_[metric] - 2.0 * theta * sab_[metric] + theta * theta * sbb_;
  const double b_mean = sb_ / n;
  return {theta, std::sqrt(std::max(0.0, ss) / (n * (n - 1.0))) / b_mean};
}

double kolmogorov_tail(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

double stephens_p(double d, double n_eff) {
  const double sq = std::sqrt(n_eff);
  return kolmogorov_tail((sq + 0.12 + 0.11 / sq) * d);
}

}  // namespace

KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw InsufficientData("ks_test: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::max(static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n));
  }
  return {d, stephens_p(d, n)};
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InsufficientData("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return {d, stephens_p(d, na * nb / (na + nb))};
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DomainError("tv_distance: support size mismatch");
  double sum = 0.0;
  double mass_p = 0.0;
  double mass_q = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw DomainError("tv_distance: negative probability");
    sum += std::abs(p[i] - q[i]);
    mass_p += p[i];
    mass_q += q[i];
  }
  sum += std::abs(std::max(0.0, 1.0 - mass_p) - std::max(0.0, 1.0 - mass_q));
  return std::clamp(0.5 * sum, 0.0, 1.0);
}

double least_squares_slope(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size()) throw DomainError("least_squares_slope: size mismatch");
  if (t.size() < 2) throw InsufficientData("least_squares_slope: need at least two points");
  const double n = static_cast<double>(t.size());
  double mt = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    mt += t[i];
    my += y[i];
  }
  mt /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sxy += (t[i] - mt) * (y[i] - my);
    sxx += (t[i] - mt) * (t[i] - mt);
  }
  if (!(sxx > 0.0)) throw InsufficientData("least_squares_slope: all sample times equal");
  return sxy / sxx;
}

SlopeEstimate slope_estimator(const std::vector<std::vector<std::pair<double, double>>>& series,
                              double window) {
  if (!(window > 0.0 && window <= 1.0)) throw DomainError("slope_estimator: window must lie in (0, 1]");
  if (series.size() < 2) throw InsufficientData("slope_estimator: need at least two replicas");
  MeanAccumulator acc;
  for (const auto& s : series) {
    if (s.size() < 2) throw InsufficientData("slope_estimator: replica with fewer than two samples");
    const double t0 = s.front().first;
    const double t1 = s.back().first;
    const double cut = t1 - window * (t1 - t0);
    std::vector<double> t;
    std::vector<double> y;
    for (const auto& [ti, yi] : s) {
      if (ti >= cut) {
        t.push_back(ti);
        y.push_back(yi);
      }
    }
    acc.add(least_squares_slope(t, y));
  }
  const Estimate e = acc.estimate();
  return {e.value, e.se, series.size()};
}

}  // namespace randtree
