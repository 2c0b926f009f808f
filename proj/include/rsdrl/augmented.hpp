#pragma once

// Augmented MDP: states (s, y) where y is the reward accumulated so far.
// All y values live on the reward lattice (integer multiples of the reward
// grid spacing), so sums never need re-binning.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rsdrl/error.hpp"
#include "rsdrl/rng.hpp"
#include "rsdrl/tabular_mdp.hpp"

namespace rsdrl {

// Integer lattice coordinate of x (x = units * spacing); throws when off-lattice.
inline long lattice_units(double x, double spacing) {
  const double t = x / spacing;
  const double r = std::round(t);
  if (std::abs(t - r) > kGridTolerance * std::max(1.0, std::abs(t)))
    throw GridClosureError("value " + std::to_string(x) + " is not a multiple of lattice spacing " +
                           std::to_string(spacing));
  return static_cast<long>(r);
}

/// y values reachable within `horizon` reward additions from any of the
/// initial y values `initial_offsets`.
inline ValueGrid y_grid(const EpisodicShape& shape, const std::vector<double>& initial_offsets) {
  if (initial_offsets.empty()) throw StructureError("y_grid: at least one initial offset is required");
  const double spacing = shape.reward_grid.spacing();
  const long z_lo = lattice_units(shape.reward_grid.front(), spacing);
  const long z_hi = z_lo + static_cast<long>(shape.reward_grid.size()) - 1;
  long start_lo = lattice_units(initial_offsets.front(), spacing);
  long start_hi = start_lo;
  for (double off : initial_offsets) {
    const long u = lattice_units(off, spacing);
    start_lo = std::min(start_lo, u);
    start_hi = std::max(start_hi, u);
  }
  const auto horizon = static_cast<long>(shape.horizon);
  const long lo = start_lo + std::min(0L, horizon * z_lo);
  const long hi = start_hi + std::max(0L, horizon * z_hi);
  return {static_cast<double>(lo) * spacing, spacing, static_cast<std::size_t>(hi - lo + 1)};
}

inline ValueGrid y_grid(const TabularMDP& mdp, const std::vector<double>& initial_offsets) {
  return y_grid(mdp.shape(), initial_offsets);
}

/// The y lattice together with the per-step reachable index ranges.
class AugmentedSpace {
public:
  AugmentedSpace() = default;

  AugmentedSpace(const EpisodicShape& shape, const std::vector<double>& initial_offsets)
      : grid_(y_grid(shape, initial_offsets)), horizon_(shape.horizon), n_states_(shape.n_states) {
    const double spacing = grid_.spacing();
    reward_lo_ = lattice_units(shape.reward_grid.front(), spacing);
    reward_count_ = shape.reward_grid.size();
    origin_units_ = lattice_units(grid_.origin(), spacing);
    start_lo_ = start_hi_ = lattice_units(initial_offsets.front(), spacing);
    for (double off : initial_offsets) {
      start_lo_ = std::min(start_lo_, lattice_units(off, spacing));
      start_hi_ = std::max(start_hi_, lattice_units(off, spacing));
    }
  }

  /// Space covering every start y = -b for b on the achievable-return
  /// lattice and for b on the reward grid.
  static AugmentedSpace standard(const EpisodicShape& shape) {
    const double spacing = shape.reward_grid.spacing();
    const auto horizon = static_cast<long>(shape.horizon);
    const long z_lo = lattice_units(shape.reward_grid.front(), spacing);
    const long z_hi = z_lo + static_cast<long>(shape.reward_grid.size()) - 1;
    const long b_lo = std::min(horizon * z_lo, z_lo);
    const long b_hi = std::max(horizon * z_hi, z_hi);
    return {shape, {-static_cast<double>(b_hi) * spacing, -static_cast<double>(b_lo) * spacing}};
  }

  const ValueGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return grid_.size(); }
  std::size_t horizon() const noexcept { return horizon_; }
  std::size_t n_states() const noexcept { return n_states_; }
  std::size_t reward_count() const noexcept { return reward_count_; }
  double spacing() const noexcept { return grid_.spacing(); }
  double y_value(std::size_t index) const noexcept { return grid_.value(index); }

  // Reachable y index range at step h (0 .. horizon), inclusive.
  std::size_t lo(std::size_t h) const noexcept {
    return static_cast<std::size_t>(start_lo_ + static_cast<long>(h) * reward_lo_ - origin_units_);
  }
  std::size_t hi(std::size_t h) const noexcept {
    const long reward_hi = reward_lo_ + static_cast<long>(reward_count_) - 1;
    return static_cast<std::size_t>(start_hi_ + static_cast<long>(h) * reward_hi - origin_units_);
  }
  bool reachable(std::size_t h, std::size_t y_index) const noexcept { return y_index >= lo(h) && y_index <= hi(h); }

  // y index after adding reward grid point `reward_index` to y index `y_index`.
  std::size_t shift(std::size_t y_index, std::size_t reward_index) const noexcept {
    return static_cast<std::size_t>(static_cast<long>(y_index) + reward_lo_ + static_cast<long>(reward_index));
  }

  // Index of the start y = -b; throws if -b is off-lattice or not a start value.
  std::size_t start_index(double b) const {
    const long u = lattice_units(-b, spacing());
    if (u < start_lo_ || u > start_hi_)
      throw GridClosureError("initial offset " + std::to_string(-b) + " outside the augmented space");
    return static_cast<std::size_t>(u - origin_units_);
  }

  /// Achievable-return lattice [H z_min, H z_max], the b search domain of
  /// the exact CVaR dual.
  std::vector<double> return_lattice() const {
    const long horizon = static_cast<long>(horizon_);
    const long z_hi = reward_lo_ + static_cast<long>(reward_count_) - 1;
    std::vector<double> out;
    for (long u = horizon * reward_lo_; u <= horizon * z_hi; ++u) out.push_back(static_cast<double>(u) * spacing());
    return out;
  }

private:
  ValueGrid grid_;
  std::size_t horizon_ = 0;
  std::size_t n_states_ = 0;
  long reward_lo_ = 0;
  std::size_t reward_count_ = 1;
  long origin_units_ = 0;
  long start_lo_ = 0;
  long start_hi_ = 0;
};

struct AugmentedState {
  std::size_t state = 0;
  std::size_t y_index = 0;
  friend bool operator==(const AugmentedState&, const AugmentedState&) = default;
};

/// All (s', y + r) outcomes with positive probability P_h(s'|s,a) R_h(r|s,a).
inline std::vector<std::pair<AugmentedState, double>> augmented_transition(const TabularMDP& mdp,
                                                                          const AugmentedSpace& space, std::size_t h,
                                                                          AugmentedState from, std::size_t a) {
  std::vector<std::pair<AugmentedState, double>> out;
  const auto p = mdp.transition_row(h, from.state, a);
  const auto r = mdp.reward_row(h, from.state, a);
  for (std::size_t next = 0; next < p.size(); ++next) {
    if (p[next] == 0.0) continue;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r[i] == 0.0) continue;
      out.push_back({{next, space.shift(from.y_index, i)}, p[next] * r[i]});
    }
  }
  return out;
}

/// Deterministic Markov policy on augmented states; -1 marks undefined.
class AugmentedPolicy {
public:
  static constexpr int kUndefined = -1;

  AugmentedPolicy() = default;
  AugmentedPolicy(std::size_t horizon, std::size_t n_states, std::size_t n_y)
      : horizon_(horizon), n_states_(n_states), n_y_(n_y), actions_(horizon * n_states * n_y, kUndefined) {}
  explicit AugmentedPolicy(const AugmentedSpace& space)
      : AugmentedPolicy(space.horizon(), space.n_states(), space.size()) {}

  /// Lifts a raw-state policy actions[h][s] that ignores y.
  static AugmentedPolicy y_blind(const AugmentedSpace& space, const std::vector<std::vector<int>>& actions) {
    AugmentedPolicy pi(space);
    for (std::size_t h = 0; h < space.horizon(); ++h)
      for (std::size_t s = 0; s < space.n_states(); ++s)
        for (std::size_t y = 0; y < space.size(); ++y) pi.set(h, s, y, actions.at(h).at(s));
    return pi;
  }

  std::size_t horizon() const noexcept { return horizon_; }
  std::size_t n_states() const noexcept { return n_states_; }
  std::size_t n_y() const noexcept { return n_y_; }

  int action(std::size_t h, std::size_t s, std::size_t y) const noexcept { return actions_[(h * n_states_ + s) * n_y_ + y]; }
  void set(std::size_t h, std::size_t s, std::size_t y, int a) { actions_[(h * n_states_ + s) * n_y_ + y] = a; }

  // Like action(), but a missing entry is an error.
  std::size_t at(std::size_t h, std::size_t s, std::size_t y) const {
    if (h >= horizon_ || s >= n_states_ || y >= n_y_)
      throw CoverageError("policy queried outside its table at h=" + std::to_string(h));
    const int a = action(h, s, y);
    if (a < 0)
      throw CoverageError("policy undefined at (h=" + std::to_string(h) + ", s=" + std::to_string(s) +
                          ", y_index=" + std::to_string(y) + ")");
    return static_cast<std::size_t>(a);
  }

  friend bool operator==(const AugmentedPolicy&, const AugmentedPolicy&) = default;

private:
  std::size_t horizon_ = 0;
  std::size_t n_states_ = 0;
  std::size_t n_y_ = 0;
  std::vector<int> actions_;
};

struct TrajectoryStep {
  std::size_t state = 0;
  std::size_t y_index = 0; // y before this step's reward
  std::size_t action = 0;
  std::size_t reward_index = 0;
  double reward = 0.0;
  std::size_t next_state = 0;
};

struct Trajectory {
  double start_y = 0.0;
  std::vector<TrajectoryStep> steps;
  double total_return = 0.0;
};

/// One episode from (s_1, -b_offset) under `policy`.
inline Trajectory simulate(const TabularMDP& mdp, const AugmentedSpace& space, const AugmentedPolicy& policy,
                           double b_offset, std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  Trajectory traj;
  traj.start_y = -b_offset;
  std::size_t s = mdp.initial_state();
  std::size_t y = space.start_index(b_offset);
  traj.steps.reserve(mdp.horizon());
  for (std::size_t h = 0; h < mdp.horizon(); ++h) {
    const std::size_t a = policy.at(h, s, y);
    TrajectoryStep step;
    step.state = s;
    step.y_index = y;
    step.action = a;
    step.next_state = rng.categorical(mdp.transition_row(h, s, a));
    step.reward_index = rng.categorical(mdp.reward_row(h, s, a));
    step.reward = mdp.reward_grid().value(step.reward_index);
    traj.total_return += step.reward;
    traj.steps.push_back(step);
    s = step.next_state;
    y = space.shift(y, step.reward_index);
  }
  return traj;
}

} // namespace rsdrl
