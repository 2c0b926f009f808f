#pragma once

// Discretized linear MDPs: P_h(s'|s,a) = phi(s,a)^T mu_h(s') and
// R_h(z_i|s,a) = phi(s,a)^T theta_h(z_i), plus the zero-mean generator used
// by the regret experiments.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rsdrl/error.hpp"
#include "rsdrl/rng.hpp"
#include "rsdrl/tabular_mdp.hpp"

namespace rsdrl {

inline constexpr double kLinearValidityTolerance = 1e-8;

struct DiscretizedLinearMDP {
  std::size_t dim = 1;
  std::vector<Eigen::VectorXd> phi;                // [s * A + a]
  std::vector<std::vector<Eigen::VectorXd>> mu;    // [h][s']
  std::vector<std::vector<Eigen::VectorXd>> theta; // [h][i]
  TabularMDP tabular;                              // induced tables

  const Eigen::VectorXd& feature(std::size_t s, std::size_t a) const { return phi[s * tabular.n_actions() + a]; }
};

/// Builds the induced tabular MDP entry by entry as phi^T mu and phi^T theta.
inline DiscretizedLinearMDP materialize(std::size_t n_states, std::size_t n_actions, std::size_t horizon,
                                        const ValueGrid& reward_grid, std::vector<Eigen::VectorXd> phi,
                                        std::vector<std::vector<Eigen::VectorXd>> mu,
                                        std::vector<std::vector<Eigen::VectorXd>> theta,
                                        std::size_t initial_state = 0) {
  DiscretizedLinearMDP lin;
  lin.tabular = TabularMDP(n_states, n_actions, horizon, reward_grid, initial_state);
  if (phi.size() != n_states * n_actions) throw StructureError("materialize: need one feature per (s,a)");
  lin.dim = static_cast<std::size_t>(phi.front().size());
  for (const auto& f : phi) {
    if (static_cast<std::size_t>(f.size()) != lin.dim) throw StructureError("materialize: ragged features");
    if (f.norm() > 1.0 + 1e-12) throw ValidationError("materialize: feature norm exceeds 1");
  }
  if (mu.size() != horizon || theta.size() != horizon) throw StructureError("materialize: need mu/theta per step");
  for (std::size_t h = 0; h < horizon; ++h) {
    if (mu[h].size() != n_states || theta[h].size() != reward_grid.size())
      throw StructureError("materialize: mu/theta sizes do not match S/M");
    for (std::size_t s = 0; s < n_states; ++s)
      for (std::size_t a = 0; a < n_actions; ++a) {
        const Eigen::VectorXd& f = phi[s * n_actions + a];
        auto prow = lin.tabular.transition_row(h, s, a);
        auto rrow = lin.tabular.reward_row(h, s, a);
        double psum = 0.0, rsum = 0.0;
        for (std::size_t next = 0; next < n_states; ++next) psum += (prow[next] = f.dot(mu[h][next]));
        for (std::size_t i = 0; i < reward_grid.size(); ++i) rsum += (rrow[i] = f.dot(theta[h][i]));
        const auto where = " at (h=" + std::to_string(h) + ", s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")";
        if (std::abs(psum - 1.0) > kLinearValidityTolerance) throw ValidationError("phi^T mu is not a pmf" + where);
        if (std::abs(rsum - 1.0) > kLinearValidityTolerance) throw ValidationError("phi^T theta is not a pmf" + where);
      }
  }
  validate(lin.tabular);
  lin.phi = std::move(phi);
  lin.mu = std::move(mu);
  lin.theta = std::move(theta);
  return lin;
}

namespace detail {

// Uniform point on the probability simplex (normalized exponentials).
inline Eigen::VectorXd simplex_point(Rng& rng, std::size_t n) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = -std::log1p(-rng.uniform());
  return x / x.sum();
}

} // namespace detail

/// Random discretized linear MDP in which every (h, s, a) has a zero-mean
/// reward pmf on the symmetric grid {-1, ..., 1} of M points.
///
/// Latent component j of d carries a symmetric reward pmf whose tail mass
/// grows with j (component 0 nearly deterministic, component d-1 close to a
/// fair +-coin), and its own next-state distribution. Features are simplex
/// points, so every mixture is a valid pmf and ||phi||_2 <= 1.
inline DiscretizedLinearMDP make_zero_mean_mdp(std::size_t n_states, std::size_t n_actions, std::size_t dim,
                                               std::size_t horizon, std::size_t n_rewards, std::uint64_t rng_seed) {
  if (n_states == 0 || n_actions == 0 || dim == 0 || horizon == 0)
    throw StructureError("make_zero_mean_mdp: S, A, d, H must be positive");
  if (n_rewards < 3 || n_rewards % 2 == 0) throw StructureError("make_zero_mean_mdp: M must be odd and >= 3");
  if (dim > n_states * n_actions) throw StructureError("make_zero_mean_mdp: d must not exceed S*A");

  Rng rng(splitmix64(rng_seed));
  const ValueGrid grid(-1.0, 2.0 / static_cast<double>(n_rewards - 1), n_rewards);
  const std::size_t center = (n_rewards - 1) / 2;

  std::vector<Eigen::VectorXd> phi;
  phi.reserve(n_states * n_actions);
  for (std::size_t k = 0; k < n_states * n_actions; ++k) phi.push_back(detail::simplex_point(rng, dim));

  std::vector<std::vector<Eigen::VectorXd>> mu(horizon, std::vector<Eigen::VectorXd>(n_states, Eigen::VectorXd::Zero(dim)));
  std::vector<std::vector<Eigen::VectorXd>> theta(horizon,
                                                  std::vector<Eigen::VectorXd>(n_rewards, Eigen::VectorXd::Zero(dim)));
  for (std::size_t h = 0; h < horizon; ++h)
    for (std::size_t j = 0; j < dim; ++j) {
      const Eigen::VectorXd next = detail::simplex_point(rng, n_states);
      for (std::size_t s = 0; s < n_states; ++s) mu[h][s][static_cast<Eigen::Index>(j)] = next[static_cast<Eigen::Index>(s)];

      const double level = dim == 1 ? 0.5 : static_cast<double>(j) / static_cast<double>(dim - 1);
      const double tail = std::min(1.0, 0.1 * rng.uniform() + 0.85 * level + 0.05);
      const Eigen::VectorXd split = detail::simplex_point(rng, center);
      const auto jj = static_cast<Eigen::Index>(j);
      for (std::size_t k = 0; k < center; ++k) {
        const double half = 0.5 * tail * split[static_cast<Eigen::Index>(k)];
        theta[h][center - 1 - k][jj] = half; // value -(k+1) spacing
        theta[h][center + 1 + k][jj] = half;
      }
      theta[h][center][jj] = 1.0 - tail;
    }
  return materialize(n_states, n_actions, horizon, grid, std::move(phi), std::move(mu), std::move(theta), 0);
}

} // namespace rsdrl
