#pragma once

// Experiment runner: Monte Carlo replication, time averages over
// regeneration cycles and theory-versus-simulation comparisons.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "randtree/model_core.hpp"
#include "randtree/multiclass.hpp"
#include "randtree/stats.hpp"
#include "randtree/tree_sim.hpp"
#include "randtree/volterra.hpp"

namespace randtree {

enum class ExperimentKind {
  Classify,
  Simulate,
  StationaryCheck,
  HeightCheck,
  LifetimeCheck,
  GrowthCheck,
  PureBirthCheck,
  MulticlassCheck,
  SchemesDump,
};

std::string_view kind_name(ExperimentKind kind);

enum class SchemeKind { Ite, Ite1, Rec, Ld };

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Classify;
  ModelParams params;
  std::optional<RateMatrices> rates;  // multiclass_check only
  std::size_t replicas = 1;
  std::uint64_t seed = 1;
  std::size_t threads = 0;  // 0: hardware concurrency

  double t_max = 100.0;
  double burn_in_fraction = 0.1;
  std::uint64_t max_vertices = 10'000'000;
  std::size_t sample_points = 101;
  std::size_t root_class = 0;

  // Truncation of the stationary pmfs: theoretical tail mass below this.
  double tail_mass = 1e-6;

  // lifetime_check
  double t_cap = 50.0;
  std::uint64_t lifetime_vertex_cap = 2'000;

  // growth_check
  std::optional<GridSpec> grid;
  double slope_window = 0.5;
  double slope_rel_tol = 0.1;

  // pure_birth_check: means at t_obs, KS at t_ks with ks_replicas draws
  double t_obs = 1.0;
  double t_ks = 8.0;
  std::size_t ks_replicas = 10'000;
  int max_level = 4;

  SchemeKind scheme = SchemeKind::Ite;

  double z_threshold = 3.0;
  double tv_threshold = 0.02;
  double ks_alpha = 0.01;
  bool record_timing = false;

  /// ConfigError on any invalid or missing option for the chosen kind.
  void validate() const;
};

struct Comparison {
  std::string name;
  double theory = 0.0;
  Estimate simulated;
  double z = 0.0;
  bool pass = true;
};

struct DistributionComparison {
  std::string name;
  // NaN when the statistic was not computed.
  double tv = std::numeric_limits<double>::quiet_NaN();
  double ks_statistic = std::numeric_limits<double>::quiet_NaN();
  double ks_p_value = std::numeric_limits<double>::quiet_NaN();
  std::size_t support = 0;
  bool pass = true;
};

struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

struct ExperimentResult {
  std::string kind;
  std::string verdict;
  bool statistical_pass = true;
  std::vector<std::pair<std::string, double>> values;  // analytic quantities
  std::vector<std::pair<std::string, Estimate>> metrics;
  std::vector<Comparison> comparisons;
  std::vector<DistributionComparison> distributions;
  std::vector<Table> tables;
  std::vector<std::string> warnings;

  std::uint64_t seed = 0;
  std::size_t replicas = 0;
  std::uint64_t events = 0;
  std::size_t cap_hits = 0;
  double wall_seconds = 0.0;
  bool record_timing = false;

  /// Looks up a metric, value or comparison by name; throws DomainError.
  const Comparison& comparison(std::string_view name) const;
  double value(std::string_view name) const;
  const Estimate& metric(std::string_view name) const;
};

ExperimentResult run(const ExperimentConfig& config);

/// Evaluates fn(0), ..., fn(n - 1) on a fixed pool of workers and returns the
/// results in index order.
template <typename R>
std::vector<R> run_replicas(std::size_t n, std::size_t threads, const std::function<R(std::size_t)>& fn);

/// Occupation-time histograms of N, H and the root degree over regeneration
/// cycles (returns of the tree to the root alone), after a burn-in time.
class TimeAverageSampler {
 public:
  TimeAverageSampler(double burn_in, std::size_t volume_bins, std::size_t height_bins,
                     std::size_t degree_bins);

  void observe(const TreeState& state, double t0, double t1);
  HoldObserver observer();

  /// Metric layout of the estimator.
  std::size_t mean_volume_index() const { return 0; }
  std::size_t volume_index(std::size_t k) const { return 1 + (k - 1); }  // k >= 1
  std::size_t height_index(std::size_t h) const { return 1 + volume_bins_ + h; }
  std::size_t degree_index(std::size_t d) const { return 1 + volume_bins_ + height_bins_ + d; }
  std::size_t height_above_one_index() const { return 1 + volume_bins_ + height_bins_ + degree_bins_; }

  std::size_t volume_bins() const { return volume_bins_; }
  std::size_t height_bins() const { return height_bins_; }
  std::size_t degree_bins() const { return degree_bins_; }

  const RegenerativeEstimator& estimator() const { return est_; }
  /// Time root alone over time with exactly one leaf, per cycle.
  const RegenerativeEstimator& occupancy_ratio() const { return ratio_; }
  void merge(const TimeAverageSampler& other);

 private:
  void close_cycle();

  double burn_in_;
  std::size_t volume_bins_;
  std::size_t height_bins_;
  std::size_t degree_bins_;
  RegenerativeEstimator est_;
  RegenerativeEstimator ratio_;
  std::vector<double> cycle_;
  double cycle_len_ = 0.0;
  double cycle_one_leaf_ = 0.0;
  bool in_cycle_ = false;
  bool prev_alone_ = false;
};

}  // namespace randtree

#include "randtree/harness_impl.hpp"
