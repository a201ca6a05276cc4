#include "randtree/tree_sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "randtree/errors.hpp"

namespace randtree {

TreeDynamics::TreeDynamics(const ModelParams& params) {
  params.validate();
  classes_ = 1;
  birth_total_ = {params.lambda};
  birth_cum_ = {1.0};
  death_ = {params.mu};
}

TreeDynamics::TreeDynamics(const RateMatrices& rates) {
  rates.validate();
  classes_ = rates.size();
  if (classes_ > 255) throw ConfigError("rates: at most 255 classes supported");
  birth_total_.assign(classes_, 0.0);
  birth_cum_.assign(classes_ * classes_, 0.0);
  death_.assign(classes_ * classes_, 0.0);
  for (std::size_t c = 0; c < classes_; ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    const double total = rates.lambda.row(ci).sum();
    birth_total_[c] = total;
    double acc = 0.0;
    for (std::size_t d = 0; d < classes_; ++d) {
      const auto di = static_cast<Eigen::Index>(d);
      acc += rates.lambda(ci, di);
      birth_cum_[c * classes_ + d] = total > 0.0 ? acc / total : 1.0;
      death_[c * classes_ + d] = rates.mu(ci, di);
    }
    birth_cum_[c * classes_ + classes_ - 1] = 1.0;
  }
}

std::size_t TreeDynamics::child_class(std::size_t c, double u) const {
  const double* row = &birth_cum_[c * classes_];
  for (std::size_t d = 0; d + 1 < classes_; ++d) {
    if (u < row[d]) return d;
  }
  return classes_ - 1;
}

TreeState::TreeState(std::size_t classes, std::size_t root_class, bool mortal_root)
    : classes_(classes), mortal_root_(mortal_root) {
  if (classes == 0 || classes > 255) throw ConfigError("tree: class count must be in [1, 255]");
  if (root_class >= classes) throw ConfigError("tree: root class out of range");
  by_class_.resize(classes);
  leaves_.resize(classes * classes);
  VertexRecord root;
  root.class_id = static_cast<std::uint8_t>(root_class);
  root.ancestor_class = root.class_id;
  root.alive = true;
  root.class_pos = 0;
  arena_.push_back(root);
  by_class_[root_class].push_back(0);
  levels_.push_back(1);
  volume_ = 1;
  if (mortal_root_) insert_leaf(0);
}

TreeState new_tree(std::size_t root_class, std::size_t classes) {
  return TreeState(classes, root_class, false);
}

std::uint64_t TreeState::leaf_count() const {
  std::uint64_t n = 0;
  for (const auto& b : leaves_) n += b.size();
  return n;
}

void TreeState::insert_leaf(std::uint32_t v) {
  auto& rec = arena_[v];
  auto& bucket = leaves_[rec.ancestor_class * classes_ + rec.class_id];
  rec.leaf_pos = static_cast<std::uint32_t>(bucket.size());
  bucket.push_back(v);
}

void TreeState::erase_leaf(std::uint32_t v) {
  auto& rec = arena_[v];
  auto& bucket = leaves_[rec.ancestor_class * classes_ + rec.class_id];
  const std::uint32_t last = bucket.back();
  bucket[rec.leaf_pos] = last;
  arena_[last].leaf_pos = rec.leaf_pos;
  bucket.pop_back();
  rec.leaf_pos = kNoVertex;
}

std::uint32_t TreeState::add_child(std::uint32_t v, std::size_t c) {
  std::uint32_t slot;
  if (free_.empty()) {
    slot = static_cast<std::uint32_t>(arena_.size());
    arena_.emplace_back();
  } else {
    slot = free_.back();
    free_.pop_back();
  }
  auto& parent = arena_[v];
  if (parent.child_count == 0 && parent.leaf_pos != kNoVertex) erase_leaf(v);
  ++parent.child_count;

  VertexRecord& rec = arena_[slot];
  rec.parent = v;
  rec.child_count = 0;
  rec.depth = parent.depth + 1;
  rec.class_id = static_cast<std::uint8_t>(c);
  rec.ancestor_class = parent.class_id;
  rec.alive = true;
  rec.class_pos = static_cast<std::uint32_t>(by_class_[c].size());
  by_class_[c].push_back(slot);
  insert_leaf(slot);

  if (levels_.size() <= rec.depth) levels_.resize(rec.depth + 1, 0);
  ++levels_[rec.depth];
  height_ = std::max(height_, rec.depth);
  ++volume_;
  return slot;
}

void TreeState::remove_leaf(std::uint32_t v) {
  if (v >= arena_.size() || !arena_[v].alive || arena_[v].leaf_pos == kNoVertex) {
    throw DomainError("remove_leaf: vertex " + std::to_string(v) + " is not a removable leaf");
  }
  VertexRecord& rec = arena_[v];
  erase_leaf(v);
  auto& members = by_class_[rec.class_id];
  const std::uint32_t last = members.back();
  members[rec.class_pos] = last;
  arena_[last].class_pos = rec.class_pos;
  members.pop_back();

  --levels_[rec.depth];
  if (rec.depth == height_) {
    while (height_ > 0 && levels_[height_] == 0) --height_;
  }
  if (rec.parent != kNoVertex) {
    auto& parent = arena_[rec.parent];
    if (--parent.child_count == 0 && (rec.parent != 0 || mortal_root_)) insert_leaf(rec.parent);
  }
  rec.alive = false;
  rec.parent = kNoVertex;
  free_.push_back(v);
  --volume_;
}

std::string TreeState::check_invariants() const {
  std::vector<std::uint64_t> levels(levels_.size(), 0);
  std::vector<std::uint32_t> children(arena_.size(), 0);
  std::uint64_t alive = 0;
  for (std::uint32_t v = 0; v < arena_.size(); ++v) {
    const auto& rec = arena_[v];
    if (!rec.alive) continue;
    ++alive;
    if (rec.depth >= levels.size()) return "depth beyond level table";
    ++levels[rec.depth];
    if (v == 0) {
      if (rec.parent != kNoVertex) return "root has a parent";
    } else {
      if (rec.parent == kNoVertex || !arena_[rec.parent].alive) return "dangling parent";
      if (arena_[rec.parent].depth + 1 != rec.depth) return "depth mismatch";
      if (arena_[rec.parent].class_id != rec.ancestor_class) return "ancestor class mismatch";
      ++children[rec.parent];
    }
    if (by_class_[rec.class_id].size() <= rec.class_pos ||
        by_class_[rec.class_id][rec.class_pos] != v) {
      return "class list out of sync";
    }
  }
  if (!arena_[0].alive && !mortal_root_) return "root deleted";
  if (alive != volume_) return "volume mismatch";
  std::uint64_t listed = 0;
  for (const auto& m : by_class_) listed += m.size();
  if (listed != volume_) return "class lists size mismatch";
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (levels[k] != levels_[k]) return "level counts mismatch";
  }
  std::uint32_t h = 0;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (levels[k] > 0) h = static_cast<std::uint32_t>(k);
  }
  if (h != height_) return "height mismatch";
  std::uint64_t expected_leaves = 0;
  for (std::uint32_t v = 0; v < arena_.size(); ++v) {
    const auto& rec = arena_[v];
    if (!rec.alive) continue;
    if (children[v] != rec.child_count) return "child count mismatch";
    const bool should = rec.child_count == 0 && (v != 0 || mortal_root_);
    const bool is = rec.leaf_pos != kNoVertex;
    if (should != is) return "leaf membership mismatch";
    if (is) {
      ++expected_leaves;
      const auto& bucket = leaves_[rec.ancestor_class * classes_ + rec.class_id];
      if (rec.leaf_pos >= bucket.size() || bucket[rec.leaf_pos] != v) return "leaf bucket out of sync";
    }
  }
  if (expected_leaves != leaf_count()) return "leaf set size mismatch";
  return {};
}

double total_rate(const TreeState& state, const TreeDynamics& dyn) {
  double total = 0.0;
  const std::size_t k = dyn.classes();
  for (std::size_t c = 0; c < k; ++c) {
    total += static_cast<double>(state.class_volume(c)) * dyn.birth_rate(c);
  }
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t c = 0; c < k; ++c) {
      total += static_cast<double>(state.leaf_bucket(a, c).size()) * dyn.death_rate(a, c);
    }
  }
  return total;
}

namespace {

struct Rates {
  double birth = 0.0;
  double death = 0.0;
  double total() const { return birth + death; }
};

Rates rates_of(const TreeState& state, const TreeDynamics& dyn) {
  Rates r;
  const std::size_t k = dyn.classes();
  for (std::size_t c = 0; c < k; ++c) {
    r.birth += static_cast<double>(state.class_volume(c)) * dyn.birth_rate(c);
  }
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t c = 0; c < k; ++c) {
      r.death += static_cast<double>(state.leaf_bucket(a, c).size()) * dyn.death_rate(a, c);
    }
  }
  return r;
}

// Applies one event given the current aggregate rates. Returns false, leaving
// the state untouched, when a birth would exceed the vertex cap.
bool apply_event(TreeState& state, const TreeDynamics& dyn, Rng& rng, const Rates& rates,
                 std::uint64_t max_vertices, StepEvent& ev) {
  const std::size_t k = dyn.classes();
  double u = rng.uniform() * rates.total();
  if (u < rates.birth) {
    if (state.volume() >= max_vertices) return false;
    std::size_t c = 0;
    for (; c + 1 < k; ++c) {
      const double w = static_cast<double>(state.class_volume(c)) * dyn.birth_rate(c);
      if (u < w) break;
      u -= w;
    }
    while (state.class_volume(c) == 0 || dyn.birth_rate(c) == 0.0) c = (c + k - 1) % k;
    const auto& members = state.class_members(c);
    const std::uint32_t v = members[rng.index(members.size())];
    const std::size_t child = k == 1 ? 0 : dyn.child_class(c, rng.uniform());
    ev.kind = EventKind::Birth;
    ev.vertex = state.add_child(v, child);
    return true;
  }
  u -= rates.birth;
  std::size_t a = 0;
  std::size_t c = 0;
  std::size_t last_a = 0;
  std::size_t last_c = 0;
  bool found = false;
  for (a = 0; a < k && !found; ++a) {
    for (c = 0; c < k; ++c) {
      const auto n = state.leaf_bucket(a, c).size();
      if (n == 0 || dyn.death_rate(a, c) == 0.0) continue;
      last_a = a;
      last_c = c;
      const double w = static_cast<double>(n) * dyn.death_rate(a, c);
      if (u < w) {
        found = true;
        break;
      }
      u -= w;
    }
  }
  // Rounding can leave u just past the final bucket.
  const auto& bucket = state.leaf_bucket(last_a, last_c);
  const std::uint32_t v = bucket[rng.index(bucket.size())];
  ev.kind = EventKind::Death;
  ev.vertex = v;
  state.remove_leaf(v);
  return true;
}

}  // namespace

StepEvent step(TreeState& state, const TreeDynamics& dyn, Rng& rng, std::uint64_t max_vertices) {
  const Rates rates = rates_of(state, dyn);
  if (!(rates.total() > 0.0)) throw DomainError("step: no event possible");
  StepEvent ev;
  ev.dt = rng.exponential(rates.total());
  if (!apply_event(state, dyn, rng, rates, max_vertices, ev)) {
    throw CapExceeded("step: vertex cap " + std::to_string(max_vertices) + " reached");
  }
  state.advance(ev.dt);
  return ev;
}

void SimConfig::validate() const {
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw ConfigError("simulate: t_max must be > 0");
  if (max_vertices < 1) throw ConfigError("simulate: max_vertices must be >= 1");
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    if (!(sample_times[i] >= 0.0) || sample_times[i] > t_max) {
      throw ConfigError("simulate: sample times must lie in [0, t_max]");
    }
    if (i > 0 && sample_times[i] < sample_times[i - 1]) {
      throw ConfigError("simulate: sample times must be ascending");
    }
  }
}

Trajectory simulate(const SimConfig& config, const TreeDynamics& dyn, const HoldObserver& observer) {
  config.validate();
  if (config.root_class >= dyn.classes()) throw ConfigError("simulate: root class out of range");
  TreeState state(dyn.classes(), config.root_class, false);
  Rng rng(config.seed, config.stream);
  Trajectory traj;
  traj.samples.reserve(config.sample_times.size());
  std::size_t next_sample = 0;

  const auto record_until = [&](double t_excl, bool inclusive) {
    while (next_sample < config.sample_times.size() &&
           (config.sample_times[next_sample] < t_excl ||
            (inclusive && config.sample_times[next_sample] == t_excl))) {
      TrajectorySample s;
      s.t = config.sample_times[next_sample];
      s.volume = state.volume();
      s.height = state.height();
      s.root_degree = state.root_degree();
      if (config.record_levels) {
        const auto& lv = state.level_counts();
        s.levels.assign(lv.begin(), lv.begin() + state.height() + 1);
      }
      traj.samples.push_back(std::move(s));
      ++next_sample;
    }
  };

  while (true) {
    const Rates rates = rates_of(state, dyn);
    const double dt = rng.exponential(rates.total());
    const double t_next = state.clock() + dt;
    if (t_next >= config.t_max) {
      record_until(config.t_max, true);
      if (observer) observer(state, state.clock(), config.t_max);
      state.advance(config.t_max - state.clock());
      traj.terminal = Terminal::Horizon;
      break;
    }
    record_until(t_next, false);
    if (observer) observer(state, state.clock(), t_next);
    StepEvent ev;
    if (!apply_event(state, dyn, rng, rates, config.max_vertices, ev)) {
      state.advance(dt);
      traj.terminal = Terminal::VertexCap;
      break;
    }
    state.advance(dt);
    ++traj.event_count;
  }
  traj.t_end = state.clock();
  return traj;
}

LifetimeDraw lifetime_sample(const ModelParams& params, Rng& rng, double t_cap,
                             std::uint64_t max_vertices) {
  params.validate();
  if (params.pure_birth()) throw DomainError("lifetime_sample: requires mu > 0");
  if (!(t_cap > 0.0)) throw DomainError("lifetime_sample: t_cap must be > 0");
  const TreeDynamics dyn(params);
  TreeState state(1, 0, true);
  LifetimeDraw out;
  while (true) {
    const Rates rates = rates_of(state, dyn);
    const double dt = rng.exponential(rates.total());
    if (state.clock() + dt >= t_cap) {
      out.tau = t_cap;
      out.censored = true;
      return out;
    }
    StepEvent ev;
    if (!apply_event(state, dyn, rng, rates, max_vertices, ev)) {
      out.tau = state.clock() + dt;
      out.censored = true;
      out.cap_hit = true;
      return out;
    }
    state.advance(dt);
    ++out.events;
    if (!state.root_alive()) {
      out.tau = state.clock();
      return out;
    }
  }
}

double tree_weight(const TreeState& state, double rho) {
  if (!(rho > 0.0)) throw DomainError("tree_weight: rho must be > 0");
  if (state.classes() != 1) throw DomainError("tree_weight: single-class states only");
  const auto& arena = state.arena();
  std::vector<std::uint32_t> eta(arena.size(), 0);
  for (std::uint32_t v = 1; v < arena.size(); ++v) {
    if (arena[v].alive && arena[v].child_count == 0) ++eta[arena[v].parent];
  }
  double w = static_cast<double>(state.volume()) * std::log(rho);
  for (const auto e : eta) {
    if (e > 1) w -= std::lgamma(static_cast<double>(e) + 1.0);
  }
  return w;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::size_t width = 0;
  for (const auto& s : traj.samples) width = std::max(width, s.levels.size());
  std::ostringstream out;
  out.precision(17);
  out << "t,N,H,root_degree";
  for (std::size_t k = 0; k < width; ++k) out << ",X" << k;
  out << '\n';
  for (const auto& s : traj.samples) {
    out << s.t << ',' << s.volume << ',' << s.height << ',' << s.root_degree;
    for (std::size_t k = 0; k < width; ++k) out << ',' << (k < s.levels.size() ? s.levels[k] : 0);
    out << '\n';
  }
  return out.str();
}

}  // namespace randtree
