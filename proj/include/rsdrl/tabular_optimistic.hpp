#pragma once

// Optimistic model-based CVaR planner on the tabular augmented MDP.
// Transitions are estimated from counts; the backed-up shortfall is lowered
// by a Hoeffding-style L1 width times the shortfall range, then the CVaR
// dual is maximized exactly as in the DP oracle.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "rsdrl/augmented.hpp"
#include "rsdrl/augmented_dp.hpp"
#include "rsdrl/tabular_mdp.hpp"

namespace rsdrl {

struct TabularOptimisticParams {
  double tau = 0.5;
  double c_conf = 1.0;
  double delta = 0.01;
};

struct TabularPlan {
  double b = 0.0;
  double estimate = 0.0; // optimistic CVaR estimate b - V_1(s_1, -b) / tau
  ValueTable v;
  AugmentedPolicy policy;
};

class OptimisticTabular {
public:
  /// `known` supplies the reward tables (transition rows are ignored).
  OptimisticTabular(const TabularMDP& known, TabularOptimisticParams params)
      : params_(params), model_(known.n_states(), known.n_actions(), known.horizon(), known.reward_grid(),
                                known.initial_state()),
        space_(AugmentedSpace::standard(known.shape())) {
    check_tau(params_.tau);
    const std::size_t n = known.n_states();
    for (std::size_t h = 0; h < known.horizon(); ++h)
      for (std::size_t s = 0; s < n; ++s)
        for (std::size_t a = 0; a < known.n_actions(); ++a) {
          const auto src = known.reward_row(h, s, a);
          std::copy(src.begin(), src.end(), model_.reward_row(h, s, a).begin());
        }
    counts_.assign(known.horizon() * n * known.n_actions() * n, 0.0);
  }

  const AugmentedSpace& space() const noexcept { return space_; }

  double visits(std::size_t h, std::size_t s, std::size_t a) const {
    double n = 0.0;
    for (std::size_t next = 0; next < model_.n_states(); ++next) n += counts_[index(h, s, a, next)];
    return n;
  }
  double count(std::size_t h, std::size_t s, std::size_t a, std::size_t next) const {
    return counts_[index(h, s, a, next)];
  }
  // Test hook: overwrite the transition counts of one (h, s, a).
  void set_counts(std::size_t h, std::size_t s, std::size_t a, std::span<const double> n) {
    for (std::size_t next = 0; next < model_.n_states(); ++next) counts_[index(h, s, a, next)] = n[next];
  }

  // c_conf sqrt(S log(S A H k / delta) / max(1, N))
  double confidence_width(std::size_t h, std::size_t s, std::size_t a, std::size_t k) const {
    const double sah = static_cast<double>(model_.n_states() * model_.n_actions() * model_.horizon());
    const double kk = static_cast<double>(std::max<std::size_t>(k, 1));
    const double n = std::max(1.0, visits(h, s, a));
    return params_.c_conf * std::sqrt(static_cast<double>(model_.n_states()) * std::log(sah * kk / params_.delta) / n);
  }

  TabularPlan plan_episode(std::size_t k) {
    refresh_model();
    const std::size_t horizon = model_.horizon();
    TabularPlan plan{0.0, 0.0, ValueTable(space_), AugmentedPolicy(space_)};
    fill_terminal(plan.v, space_);
    for (std::size_t h = horizon; h-- > 0;)
      for (std::size_t s = 0; s < model_.n_states(); ++s)
        for (std::size_t y = space_.lo(h); y <= space_.hi(h); ++y) {
          const double cap = shortfall_cap(space_, model_.reward_grid(), h, y);
          std::size_t best_a = 0;
          double best = 0.0;
          for (std::size_t a = 0; a < model_.n_actions(); ++a) {
            const double raw = backup(model_, space_, plan.v, h, s, y, a) - cap * confidence_width(h, s, a, k);
            const double q = std::clamp(raw, 0.0, cap);
            if (a == 0 || q < best) {
              best = q;
              best_a = a;
            }
          }
          plan.v.at(h, s, y) = best;
          plan.policy.set(h, s, y, static_cast<int>(best_a));
        }
    const DualMaximum best =
        maximize_dual(plan.v, space_, model_.initial_state(), space_.return_lattice(), params_.tau);
    plan.b = best.b;
    plan.estimate = best.value;
    return plan;
  }

  void update(const Trajectory& traj) {
    if (traj.steps.size() != model_.horizon()) throw StructureError("OptimisticTabular: trajectory length != H");
    for (std::size_t h = 0; h < model_.horizon(); ++h) {
      const TrajectoryStep& st = traj.steps[h];
      counts_[index(h, st.state, st.action, st.next_state)] += 1.0;
    }
  }

private:
  std::size_t index(std::size_t h, std::size_t s, std::size_t a, std::size_t next) const {
    return ((h * model_.n_states() + s) * model_.n_actions() + a) * model_.n_states() + next;
  }

  // Empirical transitions; unvisited pairs get the uniform distribution.
  void refresh_model() {
    const std::size_t n_s = model_.n_states();
    for (std::size_t h = 0; h < model_.horizon(); ++h)
      for (std::size_t s = 0; s < n_s; ++s)
        for (std::size_t a = 0; a < model_.n_actions(); ++a) {
          const double n = visits(h, s, a);
          auto row = model_.transition_row(h, s, a);
          for (std::size_t next = 0; next < n_s; ++next)
            row[next] = n > 0.0 ? counts_[index(h, s, a, next)] / n : 1.0 / static_cast<double>(n_s);
        }
  }

  TabularOptimisticParams params_;
  TabularMDP model_;
  AugmentedSpace space_;
  std::vector<double> counts_;
};

} // namespace rsdrl
