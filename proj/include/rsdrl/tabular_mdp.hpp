#pragma once

// Episodic tabular MDP with a distributional reward on a uniform grid.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rsdrl/error.hpp"
#include "rsdrl/risk_measures.hpp"

namespace rsdrl {

/// What a learner is allowed to know about an environment up front.
struct EpisodicShape {
  std::size_t n_states = 1;
  std::size_t n_actions = 1;
  std::size_t horizon = 1;
  ValueGrid reward_grid;
  std::size_t initial_state = 0;
};

/// Steps h are 0-based (0 .. horizon-1). Tables are row-major:
/// transitions [h][s][a][s'], rewards [h][s][a][i] over reward_grid points.
class TabularMDP {
public:
  TabularMDP() = default;
  TabularMDP(std::size_t n_states, std::size_t n_actions, std::size_t horizon, ValueGrid reward_grid,
             std::size_t initial_state = 0)
      : shape_{n_states, n_actions, horizon, reward_grid, initial_state},
        transitions_(horizon * n_states * n_actions * n_states, 0.0),
        rewards_(horizon * n_states * n_actions * reward_grid.size(), 0.0) {
    if (n_states == 0 || n_actions == 0 || horizon == 0)
      throw StructureError("TabularMDP: states, actions and horizon must be positive");
    if (initial_state >= n_states) throw StructureError("TabularMDP: initial state out of range");
  }

  const EpisodicShape& shape() const noexcept { return shape_; }
  std::size_t n_states() const noexcept { return shape_.n_states; }
  std::size_t n_actions() const noexcept { return shape_.n_actions; }
  std::size_t horizon() const noexcept { return shape_.horizon; }
  std::size_t n_rewards() const noexcept { return shape_.reward_grid.size(); }
  const ValueGrid& reward_grid() const noexcept { return shape_.reward_grid; }
  std::size_t initial_state() const noexcept { return shape_.initial_state; }

  std::span<double> transition_row(std::size_t h, std::size_t s, std::size_t a) {
    return {transitions_.data() + row(h, s, a) * n_states(), n_states()};
  }
  std::span<const double> transition_row(std::size_t h, std::size_t s, std::size_t a) const {
    return {transitions_.data() + row(h, s, a) * n_states(), n_states()};
  }
  std::span<double> reward_row(std::size_t h, std::size_t s, std::size_t a) {
    return {rewards_.data() + row(h, s, a) * n_rewards(), n_rewards()};
  }
  std::span<const double> reward_row(std::size_t h, std::size_t s, std::size_t a) const {
    return {rewards_.data() + row(h, s, a) * n_rewards(), n_rewards()};
  }

  double expected_reward(std::size_t h, std::size_t s, std::size_t a) const {
    const auto r = reward_row(h, s, a);
    double acc = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) acc += r[i] * reward_grid().value(i);
    return acc;
  }

  const std::vector<double>& transition_table() const noexcept { return transitions_; }
  const std::vector<double>& reward_table() const noexcept { return rewards_; }

  friend bool operator==(const TabularMDP& a, const TabularMDP& b) {
    return a.n_states() == b.n_states() && a.n_actions() == b.n_actions() && a.horizon() == b.horizon() &&
           a.reward_grid() == b.reward_grid() && a.initial_state() == b.initial_state() &&
           a.transitions_ == b.transitions_ && a.rewards_ == b.rewards_;
  }

private:
  std::size_t row(std::size_t h, std::size_t s, std::size_t a) const noexcept {
    return (h * n_states() + s) * n_actions() + a;
  }

  EpisodicShape shape_;
  std::vector<double> transitions_;
  std::vector<double> rewards_;
};

inline constexpr double kRowAcceptTolerance = 1e-6;

namespace detail {

inline void repair_row(std::span<double> row, const char* what, std::size_t h, std::size_t s, std::size_t a) {
  double total = 0.0;
  for (double& p : row) {
    if (!std::isfinite(p) || p < -kMassRepairTolerance)
      throw ValidationError(std::string(what) + " row (h=" + std::to_string(h) + ", s=" + std::to_string(s) +
                            ", a=" + std::to_string(a) + ") has a negative entry");
    if (p < 0.0) p = 0.0;
    total += p;
  }
  if (std::abs(total - 1.0) > kRowAcceptTolerance)
    throw ValidationError(std::string(what) + " row (h=" + std::to_string(h) + ", s=" + std::to_string(s) +
                          ", a=" + std::to_string(a) + ") sums to " + std::to_string(total));
  if (std::abs(total - 1.0) > kMassRepairTolerance)
    for (double& p : row) p /= total;
}

} // namespace detail

// True when every reward grid value is an integer multiple of the spacing.
inline bool reward_grid_is_lattice(const ValueGrid& g) {
  const double t = g.origin() / g.spacing();
  return std::abs(t - std::round(t)) <= kGridTolerance * std::max(1.0, std::abs(t));
}

/// Checks every row; tiny negative entries are clipped and rows within the
/// acceptance band renormalized in place.
inline void validate(TabularMDP& mdp) {
  if (!reward_grid_is_lattice(mdp.reward_grid()))
    throw GridClosureError("reward grid values are not integer multiples of its spacing");
  for (std::size_t h = 0; h < mdp.horizon(); ++h)
    for (std::size_t s = 0; s < mdp.n_states(); ++s)
      for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
        detail::repair_row(mdp.transition_row(h, s, a), "transition", h, s, a);
        detail::repair_row(mdp.reward_row(h, s, a), "reward", h, s, a);
      }
}

} // namespace rsdrl
