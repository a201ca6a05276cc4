#pragma once

// Estimators and goodness-of-fit statistics used to compare simulation
// output with the analytic laws.

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace randtree {

struct Estimate {
  double value = 0.0;
  double se = 0.0;
  double ci_low() const { return value - 1.96 * se; }
  double ci_high() const { return value + 1.96 * se; }
  /// (value - theory) / se; 0 when both coincide with se == 0.
  double z(double theory) const;
};

/// Mean and standard error of independent observations.
class MeanAccumulator {
 public:
  void add(double x);
  void merge(const MeanAccumulator& other);
  std::size_t count() const { return n_; }
  Estimate estimate() const;

 private:
  std::size_t n_ = 0;
  double sum_ = 0.0;
  double sum_sq_ = 0.0;
};

/// Regenerative ratio estimator for several time averages sharing the same
/// regeneration cycles: theta_i = sum_j A_ij / sum_j B_j, with
/// SE_i = sqrt(sum_j (A_ij - theta_i B_j)^2 / (n (n - 1))) / mean(B).
class RegenerativeEstimator {
 public:
  explicit RegenerativeEstimator(std::size_t metrics = 0);

  std::size_t metrics() const { return sa_.size(); }
  std::size_t cycles() const { return n_; }
  double total_length() const { return sb_; }
  /// a holds the per-metric cycle integrals, b the cycle length.
  void add_cycle(std::span<const double> a, double b);
  void merge(const RegenerativeEstimator& other);
  /// InsufficientData with fewer than two cycles.
  Estimate estimate(std::size_t metric) const;

 private:
  std::size_t n_ = 0;
  double sb_ = 0.0;
  double sbb_ = 0.0;
  std::vector<double> sa_;
  std::vector<double> saa_;
  std::vector<double> sab_;
};

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

/// Asymptotic Kolmogorov tail P{K > x} = 2 sum_{k>=1} (-1)^{k-1} e^{-2 k^2 x^2}.
double kolmogorov_tail(double x);

/// One-sample KS test against a continuous CDF (Stephens' small-sample
/// correction of the scaled statistic).
KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);

/// Two-sample KS test.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Total variation distance between two pmfs on {0, ..., K} with all mass
/// beyond K (1 - partial sum) lumped into one extra bin.
double tv_distance(std::span<const double> p, std::span<const double> q);

/// Least-squares slope of y against t.
double least_squares_slope(std::span<const double> t, std::span<const double> y);

struct SlopeEstimate {
  double slope = 0.0;
  double se = 0.0;
  std::size_t replicas = 0;
};

/// Per replica, the least-squares slope of H against t over the trailing
/// `window` fraction of that replica's observed time span; mean and spread
/// over replicas. InsufficientData if a replica has fewer than two points in
/// its window or fewer than two replicas are given.
SlopeEstimate slope_estimator(const std::vector<std::vector<std::pair<double, double>>>& series,
                              double window = 0.5);

}  // namespace randtree
