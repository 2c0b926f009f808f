#pragma once

// Exact dynamic programming on the augmented MDP.
//
// The shortfall functional V_h(s, y) = E[(-y_{H+1})^+ | s_h = s, y_h = y]
// drives the CVaR dual: starting from y_1 = -b,
//   CVaR_tau = max_b { b - V_1(s_1, -b) / tau }.
// Cost is O(H * S * |Y| * A * S * M) per sweep; |Y| grows linearly in H
// (|Y| = 2 H (M - 1) + 1 for a symmetric grid with the standard b range).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "rsdrl/augmented.hpp"
#include "rsdrl/error.hpp"
#include "rsdrl/risk_measures.hpp"
#include "rsdrl/tabular_mdp.hpp"

namespace rsdrl {

/// Per-step table over (state, y_index), steps 0 .. horizon (inclusive).
class ValueTable {
public:
  ValueTable() = default;
  ValueTable(std::size_t horizon, std::size_t n_states, std::size_t n_y)
      : n_states_(n_states), n_y_(n_y), values_((horizon + 1) * n_states * n_y, 0.0) {}
  explicit ValueTable(const AugmentedSpace& space) : ValueTable(space.horizon(), space.n_states(), space.size()) {}

  double& at(std::size_t h, std::size_t s, std::size_t y) { return values_[(h * n_states_ + s) * n_y_ + y]; }
  double at(std::size_t h, std::size_t s, std::size_t y) const { return values_[(h * n_states_ + s) * n_y_ + y]; }

private:
  std::size_t n_states_ = 0;
  std::size_t n_y_ = 0;
  std::vector<double> values_;
};

/// Per-step table over (state, y_index, action), steps 0 .. horizon-1.
class QTable {
public:
  QTable() = default;
  QTable(std::size_t horizon, std::size_t n_states, std::size_t n_y, std::size_t n_actions)
      : n_states_(n_states), n_y_(n_y), n_actions_(n_actions), values_(horizon * n_states * n_y * n_actions, 0.0) {}

  double& at(std::size_t h, std::size_t s, std::size_t y, std::size_t a) {
    return values_[((h * n_states_ + s) * n_y_ + y) * n_actions_ + a];
  }
  double at(std::size_t h, std::size_t s, std::size_t y, std::size_t a) const {
    return values_[((h * n_states_ + s) * n_y_ + y) * n_actions_ + a];
  }

private:
  std::size_t n_states_ = 0;
  std::size_t n_y_ = 0;
  std::size_t n_actions_ = 0;
  std::vector<double> values_;
};

inline double terminal_shortfall(double y) { return std::max(-y, 0.0); }

// Largest and smallest possible shortfall from (h, y): H - h rewards remain.
inline double shortfall_cap(const AugmentedSpace& space, const ValueGrid& rewards, std::size_t h, std::size_t y) {
  const double remaining = static_cast<double>(space.horizon() - h);
  return terminal_shortfall(space.y_value(y) + remaining * rewards.front());
}
inline double shortfall_floor(const AugmentedSpace& space, const ValueGrid& rewards, std::size_t h, std::size_t y) {
  const double remaining = static_cast<double>(space.horizon() - h);
  return terminal_shortfall(space.y_value(y) + remaining * rewards.back());
}

inline void fill_terminal(ValueTable& v, const AugmentedSpace& space) {
  for (std::size_t s = 0; s < space.n_states(); ++s)
    for (std::size_t y = 0; y < space.size(); ++y) v.at(space.horizon(), s, y) = terminal_shortfall(space.y_value(y));
}

/// sum_{s', r} P_h(s'|s,a) R_h(r|s,a) V_{h+1}(s', y + r).
inline double backup(const TabularMDP& mdp, const AugmentedSpace& space, const ValueTable& v, std::size_t h,
                     std::size_t s, std::size_t y, std::size_t a) {
  const auto p = mdp.transition_row(h, s, a);
  const auto r = mdp.reward_row(h, s, a);
  double acc = 0.0;
  for (std::size_t next = 0; next < p.size(); ++next) {
    if (p[next] == 0.0) continue;
    double inner = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) inner += r[i] * v.at(h + 1, next, space.shift(y, i));
    acc += p[next] * inner;
  }
  return acc;
}

/// Shortfall values of a fixed policy on every reachable augmented state.
inline ValueTable shortfall_values(const TabularMDP& mdp, const AugmentedSpace& space, const AugmentedPolicy& policy) {
  ValueTable v(space);
  fill_terminal(v, space);
  for (std::size_t h = mdp.horizon(); h-- > 0;)
    for (std::size_t s = 0; s < mdp.n_states(); ++s)
      for (std::size_t y = space.lo(h); y <= space.hi(h); ++y)
        v.at(h, s, y) = backup(mdp, space, v, h, s, y, policy.at(h, s, y));
  return v;
}

enum class ShortfallObjective { Minimize, Maximize };

struct ShortfallSolution {
  ValueTable values;
  QTable q;
  AugmentedPolicy policy;
};

/// Backward induction V_h = min_a (or max_a) of the one-step backup,
/// lowest action index on ties.
inline ShortfallSolution solve_shortfall(const TabularMDP& mdp, const AugmentedSpace& space,
                                         ShortfallObjective objective = ShortfallObjective::Minimize) {
  ShortfallSolution sol{ValueTable(space), QTable(space.horizon(), space.n_states(), space.size(), mdp.n_actions()),
                        AugmentedPolicy(space)};
  fill_terminal(sol.values, space);
  for (std::size_t h = mdp.horizon(); h-- > 0;)
    for (std::size_t s = 0; s < mdp.n_states(); ++s)
      for (std::size_t y = space.lo(h); y <= space.hi(h); ++y) {
        std::size_t best_a = 0;
        double best = 0.0;
        for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
          const double q = backup(mdp, space, sol.values, h, s, y, a);
          sol.q.at(h, s, y, a) = q;
          const bool better = objective == ShortfallObjective::Minimize ? q < best : q > best;
          if (a == 0 || better) {
            best = q;
            best_a = a;
          }
        }
        sol.values.at(h, s, y) = best;
        sol.policy.set(h, s, y, static_cast<int>(best_a));
      }
  return sol;
}

struct DualMaximum {
  double value = -std::numeric_limits<double>::infinity();
  double b = 0.0;
};

/// max_b { b - V_0(s_1, -b) / tau } over the given candidates, first
/// (smallest) b on ties.
inline DualMaximum maximize_dual(const ValueTable& v, const AugmentedSpace& space, std::size_t initial_state,
                                 const std::vector<double>& b_candidates, double tau) {
  check_tau(tau);
  DualMaximum best;
  for (double b : b_candidates) {
    const double objective = b - v.at(0, initial_state, space.start_index(b)) / tau;
    if (objective > best.value) best = {objective, b};
  }
  return best;
}

struct OptimalCvar {
  double value = 0.0;
  AugmentedPolicy policy;
  double b_star = 0.0;
};

inline OptimalCvar optimal_cvar(const TabularMDP& mdp, const AugmentedSpace& space, double tau) {
  check_tau(tau);
  ShortfallSolution sol = solve_shortfall(mdp, space);
  const DualMaximum best = maximize_dual(sol.values, space, mdp.initial_state(), space.return_lattice(), tau);
  return {best.value, std::move(sol.policy), best.b};
}

inline OptimalCvar optimal_cvar(const TabularMDP& mdp, double tau) {
  return optimal_cvar(mdp, AugmentedSpace::standard(mdp.shape()), tau);
}

/// max_b { b - V^pi_1(s_1, -b) / tau } over the achievable-return lattice.
inline double policy_cvar(const TabularMDP& mdp, const AugmentedSpace& space, const AugmentedPolicy& policy,
                          double tau) {
  check_tau(tau);
  const ValueTable v = shortfall_values(mdp, space, policy);
  return maximize_dual(v, space, mdp.initial_state(), space.return_lattice(), tau).value;
}

inline double policy_cvar(const TabularMDP& mdp, const AugmentedPolicy& policy, double tau) {
  return policy_cvar(mdp, AugmentedSpace::standard(mdp.shape()), policy, tau);
}

/// F_h(. | s, y, a) for every reachable (s, y) and every action: the pmf of
/// the reward-to-go sum_{h' >= h} r_{h'} on the grid
/// {(H - h) z_min, ..., (H - h) z_max}.
class ReturnDistributionTable {
public:
  ReturnDistributionTable() = default;
  ReturnDistributionTable(const TabularMDP& mdp, const AugmentedSpace& space)
      : horizon_(mdp.horizon()), n_states_(mdp.n_states()), n_actions_(mdp.n_actions()), n_y_(space.size()),
        reward_grid_(mdp.reward_grid()), masses_(horizon_) {
    for (std::size_t h = 0; h < horizon_; ++h) masses_[h].resize(n_states_ * n_y_ * n_actions_);
  }

  std::size_t horizon() const noexcept { return horizon_; }

  // Grid of reward-to-go values from step h.
  ValueGrid grid(std::size_t h) const {
    const double remaining = static_cast<double>(horizon_ - h);
    return {remaining * reward_grid_.front(), reward_grid_.spacing(), (horizon_ - h) * (reward_grid_.size() - 1) + 1};
  }

  bool has(std::size_t h, std::size_t s, std::size_t y, std::size_t a) const { return !entry(h, s, y, a).empty(); }

  DiscreteDistribution at(std::size_t h, std::size_t s, std::size_t y, std::size_t a) const {
    const auto& m = entry(h, s, y, a);
    if (m.empty()) throw CoverageError("return distribution not computed at this augmented state");
    return {grid(h), m};
  }

  std::vector<double>& entry(std::size_t h, std::size_t s, std::size_t y, std::size_t a) {
    return masses_[h][(s * n_y_ + y) * n_actions_ + a];
  }
  const std::vector<double>& entry(std::size_t h, std::size_t s, std::size_t y, std::size_t a) const {
    return masses_[h][(s * n_y_ + y) * n_actions_ + a];
  }

private:
  std::size_t horizon_ = 0;
  std::size_t n_states_ = 0;
  std::size_t n_actions_ = 0;
  std::size_t n_y_ = 0;
  ValueGrid reward_grid_;
  std::vector<std::vector<std::vector<double>>> masses_;
};

/// One application of the augmented distributional Bellman operator: fills
/// step h of `table` from step h + 1 (or the terminal point mass).
inline void distributional_bellman_step(const TabularMDP& mdp, const AugmentedSpace& space,
                                        const AugmentedPolicy& policy, ReturnDistributionTable& table, std::size_t h) {
  const std::size_t len = table.grid(h).size();
  const std::size_t next_len = h + 1 < mdp.horizon() ? table.grid(h + 1).size() : 1;
  for (std::size_t s = 0; s < mdp.n_states(); ++s)
    for (std::size_t y = space.lo(h); y <= space.hi(h); ++y)
      for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
        std::vector<double> out(len, 0.0);
        const auto p = mdp.transition_row(h, s, a);
        const auto r = mdp.reward_row(h, s, a);
        for (std::size_t next = 0; next < p.size(); ++next) {
          if (p[next] == 0.0) continue;
          for (std::size_t i = 0; i < r.size(); ++i) {
            const double w = p[next] * r[i];
            if (w == 0.0) continue;
            // Reward index i shifts the next-step grid (origin (H-h-1) z_min)
            // by i points on this step's grid (origin (H-h) z_min).
            if (h + 1 == mdp.horizon()) {
              out[i] += w;
              continue;
            }
            const std::size_t y_next = space.shift(y, i);
            const auto& tail = table.entry(h + 1, next, y_next, policy.at(h + 1, next, y_next));
            for (std::size_t j = 0; j < next_len; ++j) out[i + j] += w * tail[j];
          }
        }
        table.entry(h, s, y, a) = std::move(out);
      }
}

inline ReturnDistributionTable return_distribution_table(const TabularMDP& mdp, const AugmentedSpace& space,
                                                         const AugmentedPolicy& policy) {
  ReturnDistributionTable table(mdp, space);
  for (std::size_t h = mdp.horizon(); h-- > 0;) distributional_bellman_step(mdp, space, policy, table, h);
  return table;
}

/// Exact pmf of Z = sum_h r_h for the policy started at (s_1, -b_offset).
inline DiscreteDistribution return_distribution(const TabularMDP& mdp, const AugmentedSpace& space,
                                                const AugmentedPolicy& policy, double b_offset) {
  const std::size_t y0 = space.start_index(b_offset);
  const std::size_t s0 = mdp.initial_state();
  const ReturnDistributionTable table = return_distribution_table(mdp, space, policy);
  return table.at(0, s0, y0, policy.at(0, s0, y0));
}

inline DiscreteDistribution return_distribution(const TabularMDP& mdp, const AugmentedPolicy& policy,
                                                double b_offset = 0.0) {
  return return_distribution(mdp, AugmentedSpace::standard(mdp.shape()), policy, b_offset);
}

/// Classical risk-neutral policy evaluation, E[sum_h r_h] from (s_1, -b).
inline double expected_return(const TabularMDP& mdp, const AugmentedSpace& space, const AugmentedPolicy& policy,
                              double b_offset) {
  ValueTable v(space); // terminal value 0
  for (std::size_t h = mdp.horizon(); h-- > 0;)
    for (std::size_t s = 0; s < mdp.n_states(); ++s)
      for (std::size_t y = space.lo(h); y <= space.hi(h); ++y) {
        const std::size_t a = policy.at(h, s, y);
        const auto p = mdp.transition_row(h, s, a);
        const auto r = mdp.reward_row(h, s, a);
        double acc = mdp.expected_reward(h, s, a);
        for (std::size_t next = 0; next < p.size(); ++next)
          for (std::size_t i = 0; i < r.size(); ++i) acc += p[next] * r[i] * v.at(h + 1, next, space.shift(y, i));
        v.at(h, s, y) = acc;
      }
  return v.at(0, mdp.initial_state(), space.start_index(b_offset));
}

/// Probability of visiting each augmented state at each step.
inline ValueTable occupancy(const TabularMDP& mdp, const AugmentedSpace& space, const AugmentedPolicy& policy,
                            double b_offset) {
  ValueTable occ(space);
  occ.at(0, mdp.initial_state(), space.start_index(b_offset)) = 1.0;
  for (std::size_t h = 0; h < mdp.horizon(); ++h)
    for (std::size_t s = 0; s < mdp.n_states(); ++s)
      for (std::size_t y = space.lo(h); y <= space.hi(h); ++y) {
        const double mass = occ.at(h, s, y);
        if (mass == 0.0) continue;
        for (const auto& [next, prob] : augmented_transition(mdp, space, h, {s, y}, policy.at(h, s, y)))
          occ.at(h + 1, next.state, next.y_index) += mass * prob;
      }
  return occ;
}

struct SimulationLemmaCheck {
  double lhs = 0.0; // ||F_a - F_b||_inf
  double rhs = 0.0; // sum_h E_{nu_a}[ ||P_a,h - P_b,h||_1 ]
};

/// Both sides of the augmented simulation lemma (combined with the
/// distribution-difference bound) for two MDPs that differ only in their
/// transitions.
inline SimulationLemmaCheck check_simulation_lemma(const TabularMDP& mdp_a, const TabularMDP& mdp_b,
                                                   const AugmentedSpace& space, const AugmentedPolicy& policy,
                                                   double b_offset = 0.0) {
  if (mdp_a.n_states() != mdp_b.n_states() || mdp_a.n_actions() != mdp_b.n_actions() ||
      mdp_a.horizon() != mdp_b.horizon() || !(mdp_a.reward_grid() == mdp_b.reward_grid()) ||
      mdp_a.initial_state() != mdp_b.initial_state() || mdp_a.reward_table() != mdp_b.reward_table())
    throw StructureError("simulation lemma: MDPs must share everything except transitions");

  SimulationLemmaCheck out;
  out.lhs = cdf_sup_distance(return_distribution(mdp_a, space, policy, b_offset),
                             return_distribution(mdp_b, space, policy, b_offset));
  const ValueTable occ = occupancy(mdp_a, space, policy, b_offset);
  for (std::size_t h = 0; h < mdp_a.horizon(); ++h)
    for (std::size_t s = 0; s < mdp_a.n_states(); ++s)
      for (std::size_t y = space.lo(h); y <= space.hi(h); ++y) {
        const double mass = occ.at(h, s, y);
        if (mass == 0.0) continue;
        const std::size_t a = policy.at(h, s, y);
        const auto pa = mdp_a.transition_row(h, s, a);
        const auto pb = mdp_b.transition_row(h, s, a);
        double l1 = 0.0;
        for (std::size_t next = 0; next < pa.size(); ++next) l1 += std::abs(pa[next] - pb[next]);
        out.rhs += mass * l1;
      }
  return out;
}

} // namespace rsdrl
