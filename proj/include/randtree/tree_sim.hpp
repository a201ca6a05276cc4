#pragma once

// Exact event-driven simulation of the random tree: every vertex gains
// children at rate lambda, every leaf other than the root dies at rate mu.
// With several classes a class-c vertex gains class-c' children at rate
// lambda(c, c') and a class-c' leaf under a class-c parent dies at rate
// mu(c, c').

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "randtree/model_core.hpp"
#include "randtree/multiclass.hpp"
#include "randtree/rng.hpp"

namespace randtree {

inline constexpr std::uint32_t kNoVertex = 0xffffffffu;

struct VertexRecord {
  std::uint32_t parent = kNoVertex;
  std::uint32_t child_count = 0;
  std::uint32_t depth = 0;
  std::uint32_t class_pos = 0;           // position in the per-class vertex list
  std::uint32_t leaf_pos = kNoVertex;    // position in its leaf bucket, if a leaf
  std::uint8_t class_id = 0;             // also the class of the edge from the parent
  std::uint8_t ancestor_class = 0;       // class of the parent, fixed at birth
  bool alive = false;
};

/// Per-class birth rates and per-(parent class, class) death rates.
class TreeDynamics {
 public:
  explicit TreeDynamics(const ModelParams& params);
  explicit TreeDynamics(const RateMatrices& rates);

  std::size_t classes() const { return classes_; }
  double birth_rate(std::size_t c) const { return birth_total_[c]; }
  double death_rate(std::size_t parent_class, std::size_t c) const {
    return death_[parent_class * classes_ + c];
  }
  /// Child class for a birth at a class-c vertex given a uniform u in (0, 1).
  std::size_t child_class(std::size_t c, double u) const;

 private:
  std::size_t classes_ = 1;
  std::vector<double> birth_total_;
  std::vector<double> birth_cum_;  // row-wise cumulative lambda(c, .) / total
  std::vector<double> death_;
};

/// Tree state with O(1) event selection. Leaves are kept in one bucket per
/// (parent class, class) pair. In mortal-root mode the childless root is also
/// a member of the leaf set and may die (lifetime sampling).
class TreeState {
 public:
  TreeState(std::size_t classes = 1, std::size_t root_class = 0, bool mortal_root = false);

  std::uint64_t volume() const { return volume_; }
  std::uint32_t height() const { return height_; }
  std::uint32_t root_degree() const { return arena_[0].child_count; }
  double clock() const { return clock_; }
  bool root_alive() const { return arena_[0].alive; }
  std::size_t classes() const { return classes_; }
  const std::vector<std::uint64_t>& level_counts() const { return levels_; }
  const std::vector<VertexRecord>& arena() const { return arena_; }
  std::uint64_t class_volume(std::size_t c) const { return by_class_[c].size(); }
  std::uint64_t leaf_count() const;
  const std::vector<std::uint32_t>& class_members(std::size_t c) const { return by_class_[c]; }
  const std::vector<std::uint32_t>& leaf_bucket(std::size_t parent_class, std::size_t c) const {
    return leaves_[parent_class * classes_ + c];
  }

  /// Adds a class-c child under v; returns its slot.
  std::uint32_t add_child(std::uint32_t v, std::size_t c);
  /// Removes leaf v (which must be in the leaf set).
  void remove_leaf(std::uint32_t v);
  void advance(double dt) { clock_ += dt; }

  /// Full rescan of every structural invariant; returns a description of the
  /// first violation, or an empty string.
  std::string check_invariants() const;

 private:
  void insert_leaf(std::uint32_t v);
  void erase_leaf(std::uint32_t v);

  std::size_t classes_;
  bool mortal_root_;
  std::vector<VertexRecord> arena_;
  std::vector<std::uint32_t> free_;
  std::vector<std::vector<std::uint32_t>> by_class_;
  std::vector<std::vector<std::uint32_t>> leaves_;
  std::vector<std::uint64_t> levels_;
  std::uint64_t volume_ = 0;
  std::uint32_t height_ = 0;
  double clock_ = 0.0;
};

TreeState new_tree(std::size_t root_class = 0, std::size_t classes = 1);

/// Sum of all event rates in the current state.
double total_rate(const TreeState& state, const TreeDynamics& dyn);

enum class EventKind { Birth, Death };

struct StepEvent {
  EventKind kind = EventKind::Birth;
  double dt = 0.0;
  std::uint32_t vertex = 0;  // the new vertex or the removed leaf
};

/// Draws the holding time and the next event and applies it. CapExceeded
/// (state unchanged) when a birth would push the volume past max_vertices.
StepEvent step(TreeState& state, const TreeDynamics& dyn, Rng& rng,
               std::uint64_t max_vertices = UINT64_MAX);

struct SimConfig {
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  double t_max = 1.0;
  std::uint64_t max_vertices = 10'000'000;
  std::vector<double> sample_times;
  bool record_levels = false;
  std::size_t root_class = 0;

  /// ConfigError on an invalid combination.
  void validate() const;
};

struct TrajectorySample {
  double t = 0.0;
  std::uint64_t volume = 0;
  std::uint32_t height = 0;
  std::uint32_t root_degree = 0;
  std::vector<std::uint64_t> levels;
};

enum class Terminal { Horizon, VertexCap };

struct Trajectory {
  std::vector<TrajectorySample> samples;
  Terminal terminal = Terminal::Horizon;
  double t_end = 0.0;
  std::uint64_t event_count = 0;
};

/// Called once per holding interval [t0, t1) with the state valid on it.
using HoldObserver = std::function<void(const TreeState&, double t0, double t1)>;

/// Runs one replica to t_max or the vertex cap. Deterministic given
/// (config, dyn). Samples reflect the state in force at each sample time.
Trajectory simulate(const SimConfig& config, const TreeDynamics& dyn,
                    const HoldObserver& observer = {});

struct LifetimeDraw {
  double tau = 0.0;       // death time, or the censoring time
  bool censored = false;  // no death by t_cap (or cap hit)
  bool cap_hit = false;
  std::uint64_t events = 0;
};

/// One draw from the lifetime law: a fresh vertex whose own deletion clock
/// runs whenever it has no children, together with its evolving subtree.
LifetimeDraw lifetime_sample(const ModelParams& params, Rng& rng, double t_cap,
                             std::uint64_t max_vertices = 1'000'000);

/// N log rho - sum_v log(eta(v)!), eta(v) = number of leaf children of v.
double tree_weight(const TreeState& state, double rho);

/// CSV with header t,N,H,root_degree[,X0,X1,...].
std::string trajectory_csv(const Trajectory& traj);

}  // namespace randtree
