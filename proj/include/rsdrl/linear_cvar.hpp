#pragma once

// Optimistic value iteration for CVaR in discretized linear MDPs.
//
// The shortfall functional Q_h(s, y, a) is linear in the quadratic feature
// psi(s,a) = vec(phi phi^T), so each episode runs one ridge regression per
// (h, y) against targets V_{h+1}(s', y + r) and subtracts an elliptical
// bonus (lower shortfall = higher CVaR, i.e. optimism).

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rsdrl/augmented.hpp"
#include "rsdrl/augmented_dp.hpp"
#include "rsdrl/gram.hpp"
#include "rsdrl/tabular_mdp.hpp"

namespace rsdrl {

/// Row-major flattening of phi phi^T: psi[i d + j] = phi[i] phi[j].
inline Eigen::VectorXd quad_feature(const Eigen::VectorXd& phi) {
  const Eigen::Index d = phi.size();
  Eigen::VectorXd psi(d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) psi[i * d + j] = phi[i] * phi[j];
  return psi;
}

struct LinearCvarParams {
  double tau = 0.5;
  double lambda_ridge = 1.0;
  double c_beta = 0.1;
  double delta = 0.01;
  std::size_t episodes = 2000; // K, enters the confidence width only
  std::size_t refactor_every = 256;
};

/// beta = c_beta d^2 H sqrt(M log(d^2 M K / delta)); constant over episodes.
inline double linear_cvar_beta(const LinearCvarParams& p, std::size_t dim, std::size_t horizon,
                               std::size_t n_rewards) {
  const double d2 = static_cast<double>(dim * dim);
  const double m = static_cast<double>(n_rewards);
  const double k = static_cast<double>(std::max<std::size_t>(p.episodes, 1));
  return p.c_beta * d2 * static_cast<double>(horizon) * std::sqrt(m * std::log(d2 * m * k / p.delta));
}

struct EpisodePlan {
  double b = 0.0;          // CVaR threshold; the episode starts at y = -b
  double objective = 0.0;  // b - V_1(s_1, -b) / tau
  QTable q;
  ValueTable v;
  AugmentedPolicy policy;
};

class LinearCvarLearner {
public:
  LinearCvarLearner(EpisodicShape shape, const std::vector<Eigen::VectorXd>& phi, LinearCvarParams params)
      : shape_(std::move(shape)), params_(params), space_(AugmentedSpace::standard(shape_)) {
    check_tau(params_.tau);
    if (phi.size() != shape_.n_states * shape_.n_actions)
      throw StructureError("LinearCvarLearner: need one feature per (s,a)");
    dim_ = static_cast<std::size_t>(phi.front().size());
    const auto n_sa = static_cast<Eigen::Index>(phi.size());
    psi_.resize(static_cast<Eigen::Index>(dim_ * dim_), n_sa);
    for (Eigen::Index k = 0; k < n_sa; ++k) psi_.col(k) = quad_feature(phi[static_cast<std::size_t>(k)]);
    beta_ = linear_cvar_beta(params_, dim_, shape_.horizon, shape_.reward_grid.size());
    grams_.assign(shape_.horizon, GramMatrix(dim_ * dim_, params_.lambda_ridge));
    counts_.assign(shape_.horizon,
                   std::vector<double>(phi.size() * shape_.reward_grid.size() * shape_.n_states, 0.0));
  }

  const AugmentedSpace& space() const noexcept { return space_; }
  const EpisodicShape& shape() const noexcept { return shape_; }
  const LinearCvarParams& params() const noexcept { return params_; }
  double beta() const noexcept { return beta_; }
  std::size_t episodes_seen() const noexcept { return episodes_seen_; }
  const GramMatrix& gram(std::size_t h) const { return grams_.at(h); }
  Eigen::VectorXd psi(std::size_t s, std::size_t a) const {
    return psi_.col(static_cast<Eigen::Index>(s * shape_.n_actions + a));
  }
  double bonus(std::size_t h, std::size_t s, std::size_t a) const { return beta_ * grams_.at(h).inverse_norm(psi(s, a)); }

  // Number of stored transitions (h, s, a, r_i, s').
  double count(std::size_t h, std::size_t s, std::size_t a, std::size_t i, std::size_t next) const {
    return counts_.at(h)[count_index(s, a, i, next)];
  }

  /// Ridge weights w_h(y) (one column per y index; zero outside the step's
  /// reachable range) for targets taken from `v` at step h + 1.
  Eigen::MatrixXd regression_weights(std::size_t h, const ValueTable& v) const {
    return grams_.at(h).inverse() * (psi_ * aggregated_targets(h, v));
  }

  /// Regularized empirical loss lambda ||w||^2 + sum_i (psi_i^T w - target_i)^2
  /// at one y index.
  double regression_loss(std::size_t h, const ValueTable& v, std::size_t y, const Eigen::VectorXd& w) const {
    double loss = params_.lambda_ridge * w.squaredNorm();
    const std::size_t m = shape_.reward_grid.size();
    for (std::size_t s = 0; s < shape_.n_states; ++s)
      for (std::size_t a = 0; a < shape_.n_actions; ++a) {
        const double pred = psi(s, a).dot(w);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t next = 0; next < shape_.n_states; ++next) {
            const double n = count(h, s, a, i, next);
            if (n == 0.0) continue;
            const double err = pred - v.at(h + 1, next, space_.shift(y, i));
            loss += n * err * err;
          }
      }
    return loss;
  }

  EpisodePlan plan_episode(std::size_t /*k*/ = 0) const {
    const std::size_t horizon = shape_.horizon;
    const std::size_t n_actions = shape_.n_actions;
    EpisodePlan plan{0.0, 0.0, QTable(horizon, shape_.n_states, space_.size(), n_actions), ValueTable(space_),
                     AugmentedPolicy(space_)};
    fill_terminal(plan.v, space_);
    for (std::size_t h = horizon; h-- > 0;) {
      const GramMatrix& gram = grams_[h];
      // Q = psi^T Lambda^{-1} sum_i psi_i target_i, for every (s,a) and y at once.
      const Eigen::MatrixXd kernel = psi_.transpose() * gram.inverse() * psi_;
      const Eigen::MatrixXd fitted = kernel * aggregated_targets(h, plan.v);
      for (std::size_t s = 0; s < shape_.n_states; ++s)
        for (std::size_t y = space_.lo(h); y <= space_.hi(h); ++y) {
          std::size_t best_a = 0;
          double best = 0.0;
          for (std::size_t a = 0; a < n_actions; ++a) {
            const auto col = static_cast<Eigen::Index>(y);
            const auto row = static_cast<Eigen::Index>(s * n_actions + a);
            const double q = fitted(row, col) - bonus(h, s, a);
            plan.q.at(h, s, y, a) = q;
            if (a == 0 || q < best) {
              best = q;
              best_a = a;
            }
          }
          plan.policy.set(h, s, y, static_cast<int>(best_a));
          plan.v.at(h, s, y) = std::clamp(best, 0.0, shortfall_cap(space_, shape_.reward_grid, h, y));
        }
    }
    // b over the support of the return, where the dual maximum is attained.
    const DualMaximum best =
        maximize_dual(plan.v, space_, shape_.initial_state, space_.return_lattice(), params_.tau);
    plan.b = best.b;
    plan.objective = best.value;
    return plan;
  }

  void update(const Trajectory& traj) {
    if (traj.steps.size() != shape_.horizon) throw StructureError("LinearCvarLearner: trajectory length != H");
    for (std::size_t h = 0; h < shape_.horizon; ++h) {
      const TrajectoryStep& st = traj.steps[h];
      grams_[h].add(psi(st.state, st.action));
      counts_[h][count_index(st.state, st.action, st.reward_index, st.next_state)] += 1.0;
    }
    ++episodes_seen_;
    if (params_.refactor_every > 0 && episodes_seen_ % params_.refactor_every == 0)
      for (auto& g : grams_) g.refactor();
  }

private:
  std::size_t count_index(std::size_t s, std::size_t a, std::size_t i, std::size_t next) const {
    return ((s * shape_.n_actions + a) * shape_.reward_grid.size() + i) * shape_.n_states + next;
  }

  // G(sa, y) = sum_{i, s'} n(h, s, a, r_i, s') V_{h+1}(s', y + r_i).
  Eigen::MatrixXd aggregated_targets(std::size_t h, const ValueTable& v) const {
    const std::size_t m = shape_.reward_grid.size();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(psi_.cols(), static_cast<Eigen::Index>(space_.size()));
    const auto& n = counts_[h];
    for (std::size_t s = 0; s < shape_.n_states; ++s)
      for (std::size_t a = 0; a < shape_.n_actions; ++a)
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t next = 0; next < shape_.n_states; ++next) {
            const double c = n[count_index(s, a, i, next)];
            if (c == 0.0) continue;
            const auto row = static_cast<Eigen::Index>(s * shape_.n_actions + a);
            for (std::size_t y = space_.lo(h); y <= space_.hi(h); ++y)
              g(row, static_cast<Eigen::Index>(y)) += c * v.at(h + 1, next, space_.shift(y, i));
          }
    return g;
  }

  EpisodicShape shape_;
  LinearCvarParams params_;
  AugmentedSpace space_;
  std::size_t dim_ = 1;
  Eigen::MatrixXd psi_; // d^2 x (S A)
  double beta_ = 0.0;
  std::vector<GramMatrix> grams_;
  std::vector<std::vector<double>> counts_;
  std::size_t episodes_seen_ = 0;
};

} // namespace rsdrl
