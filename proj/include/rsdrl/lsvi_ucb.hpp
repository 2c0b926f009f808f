#pragma once

// Risk-neutral LSVI-UCB on the raw (non-augmented) MDP. Rewards are known,
// so only E[V_{h+1}(s')] is regressed on phi(s, a).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "rsdrl/augmented.hpp"
#include "rsdrl/gram.hpp"
#include "rsdrl/tabular_mdp.hpp"

namespace rsdrl {

struct LsviUcbParams {
  double lambda_ridge = 1.0;
  double c_lsvi = 0.1;
  double delta = 0.01;
  std::size_t episodes = 2000;
};

// c d H sqrt(log(2 d H K / delta))
inline double lsvi_beta(const LsviUcbParams& p, std::size_t dim, std::size_t horizon) {
  const double dh = static_cast<double>(dim * horizon);
  const double k = static_cast<double>(std::max<std::size_t>(p.episodes, 1));
  return p.c_lsvi * dh * std::sqrt(std::log(2.0 * dh * k / p.delta));
}

struct LsviPlan {
  std::vector<std::vector<int>> actions;         // [h][s]
  std::vector<std::vector<double>> q;            // [h][s * A + a]
  AugmentedPolicy policy;                        // y-blind lift of `actions`
};

class LsviUcb {
public:
  /// `mean_rewards` is [h][s * A + a], the known E[r].
  LsviUcb(EpisodicShape shape, std::vector<Eigen::VectorXd> phi, std::vector<std::vector<double>> mean_rewards,
          LsviUcbParams params)
      : shape_(std::move(shape)), phi_(std::move(phi)), mean_rewards_(std::move(mean_rewards)), params_(params),
        space_(AugmentedSpace::standard(shape_)) {
    if (phi_.size() != shape_.n_states * shape_.n_actions) throw StructureError("LsviUcb: need one feature per (s,a)");
    dim_ = static_cast<std::size_t>(phi_.front().size());
    beta_ = lsvi_beta(params_, dim_, shape_.horizon);
    grams_.assign(shape_.horizon, GramMatrix(dim_, params_.lambda_ridge));
    counts_.assign(shape_.horizon, std::vector<double>(phi_.size() * shape_.n_states, 0.0));
  }

  static std::vector<std::vector<double>> mean_rewards_of(const TabularMDP& mdp) {
    std::vector<std::vector<double>> out(mdp.horizon(), std::vector<double>(mdp.n_states() * mdp.n_actions()));
    for (std::size_t h = 0; h < mdp.horizon(); ++h)
      for (std::size_t s = 0; s < mdp.n_states(); ++s)
        for (std::size_t a = 0; a < mdp.n_actions(); ++a) out[h][s * mdp.n_actions() + a] = mdp.expected_reward(h, s, a);
    return out;
  }

  const AugmentedSpace& space() const noexcept { return space_; }
  double beta() const noexcept { return beta_; }
  double bonus(std::size_t h, std::size_t s, std::size_t a) const {
    return beta_ * grams_.at(h).inverse_norm(phi_[s * shape_.n_actions + a]);
  }

  LsviPlan plan_episode(std::size_t /*k*/ = 0) const {
    const std::size_t horizon = shape_.horizon;
    const std::size_t n_s = shape_.n_states;
    const std::size_t n_a = shape_.n_actions;
    LsviPlan plan;
    plan.actions.assign(horizon, std::vector<int>(n_s, 0));
    plan.q.assign(horizon, std::vector<double>(n_s * n_a, 0.0));
    std::vector<double> v_next(n_s, 0.0);
    for (std::size_t h = horizon; h-- > 0;) {
      Eigen::VectorXd target = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
      for (std::size_t sa = 0; sa < n_s * n_a; ++sa) {
        double g = 0.0;
        for (std::size_t next = 0; next < n_s; ++next) g += counts_[h][sa * n_s + next] * v_next[next];
        if (g != 0.0) target += g * phi_[sa];
      }
      const Eigen::VectorXd w = grams_[h].inverse() * target;
      const double cap = static_cast<double>(horizon - h) * shape_.reward_grid.back();
      std::vector<double> v(n_s, 0.0);
      for (std::size_t s = 0; s < n_s; ++s) {
        int best_a = 0;
        for (std::size_t a = 0; a < n_a; ++a) {
          const std::size_t sa = s * n_a + a;
          const double q = std::min(mean_rewards_[h][sa] + phi_[sa].dot(w) + bonus(h, s, a), cap);
          plan.q[h][sa] = q;
          if (q > plan.q[h][s * n_a + static_cast<std::size_t>(best_a)]) best_a = static_cast<int>(a);
        }
        plan.actions[h][s] = best_a;
        v[s] = plan.q[h][s * n_a + static_cast<std::size_t>(best_a)];
      }
      v_next = std::move(v);
    }
    plan.policy = AugmentedPolicy::y_blind(space_, plan.actions);
    return plan;
  }

  void update(const Trajectory& traj) {
    if (traj.steps.size() != shape_.horizon) throw StructureError("LsviUcb: trajectory length != H");
    for (std::size_t h = 0; h < shape_.horizon; ++h) {
      const TrajectoryStep& st = traj.steps[h];
      const std::size_t sa = st.state * shape_.n_actions + st.action;
      grams_[h].add(phi_[sa]);
      counts_[h][sa * shape_.n_states + st.next_state] += 1.0;
    }
  }

private:
  EpisodicShape shape_;
  std::vector<Eigen::VectorXd> phi_;
  std::vector<std::vector<double>> mean_rewards_;
  LsviUcbParams params_;
  AugmentedSpace space_;
  std::size_t dim_ = 1;
  double beta_ = 0.0;
  std::vector<GramMatrix> grams_;
  std::vector<std::vector<double>> counts_; // [h][sa * S + s']
};

} // namespace rsdrl
