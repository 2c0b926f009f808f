#pragma once

// Random instances and brute-force oracles shared by the unit tests and the
// acceptance runner. Oracles deliberately avoid the library's DP code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "rsdrl/rsdrl.hpp"

namespace testing_support {

using rsdrl::Rng;

inline std::vector<double> random_pmf(Rng& rng, std::size_t n, double zero_prob = 0.0) {
  std::vector<double> p(n);
  double total = 0.0;
  for (auto& x : p) {
    x = rng.uniform() < zero_prob ? 0.0 : -std::log1p(-rng.uniform());
    total += x;
  }
  if (total == 0.0) {
    p[static_cast<std::size_t>(rng.next() % n)] = 1.0;
    return p;
  }
  for (auto& x : p) x /= total;
  return p;
}

inline rsdrl::DiscreteDistribution random_distribution(Rng& rng, const rsdrl::ValueGrid& grid, double zero_prob = 0.3) {
  return {grid, random_pmf(rng, grid.size(), zero_prob)};
}

/// Random tabular MDP on the reward grid `grid`; rows are dense unless
/// zero_prob > 0.
inline rsdrl::TabularMDP random_mdp(Rng& rng, std::size_t S, std::size_t A, std::size_t H, const rsdrl::ValueGrid& grid,
                                    double zero_prob = 0.0) {
  rsdrl::TabularMDP mdp(S, A, H, grid, 0);
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) {
        const auto p = random_pmf(rng, S, zero_prob);
        const auto r = random_pmf(rng, grid.size(), zero_prob);
        std::copy(p.begin(), p.end(), mdp.transition_row(h, s, a).begin());
        std::copy(r.begin(), r.end(), mdp.reward_row(h, s, a).begin());
      }
  rsdrl::validate(mdp);
  return mdp;
}

inline rsdrl::AugmentedPolicy random_policy(Rng& rng, const rsdrl::AugmentedSpace& space, std::size_t A) {
  rsdrl::AugmentedPolicy pi(space);
  for (std::size_t h = 0; h < space.horizon(); ++h)
    for (std::size_t s = 0; s < space.n_states(); ++s)
      for (std::size_t y = 0; y < space.size(); ++y) pi.set(h, s, y, static_cast<int>(rng.next() % A));
  return pi;
}

/// CVaR as the average of the lowest tau-fraction of outcomes, taking a
/// fractional share of the atom that straddles the tau quantile.
inline double tail_average_cvar(const std::vector<std::pair<double, double>>& atoms, double tau) {
  auto sorted = atoms;
  std::sort(sorted.begin(), sorted.end());
  double remaining = tau, acc = 0.0;
  for (const auto& [value, mass] : sorted) {
    if (remaining <= 0.0) break;
    const double take = std::min(mass, remaining);
    acc += take * value;
    remaining -= take;
  }
  return acc / tau;
}

inline double tail_average_cvar(const rsdrl::DiscreteDistribution& d, double tau) {
  std::vector<std::pair<double, double>> atoms;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d.mass(i) > 0.0) atoms.push_back({d.grid().value(i), d.mass(i)});
  return tail_average_cvar(atoms, tau);
}

/// Return pmf (value -> mass) by enumerating every (s', r) path; the policy
/// is supplied as a function of (h, s, accumulated return in lattice units).
inline std::map<long, double> enumerate_returns(const rsdrl::TabularMDP& mdp,
                                                const std::function<std::size_t(std::size_t, std::size_t, long)>& act,
                                                long start_units) {
  const double spacing = mdp.reward_grid().spacing();
  const long z0 = std::lround(mdp.reward_grid().front() / spacing);
  std::map<long, double> out;
  std::function<void(std::size_t, std::size_t, long, long, double)> walk = [&](std::size_t h, std::size_t s, long y,
                                                                               long total, double prob) {
    if (prob == 0.0) return;
    if (h == mdp.horizon()) {
      out[total] += prob;
      return;
    }
    const std::size_t a = act(h, s, y);
    const auto p = mdp.transition_row(h, s, a);
    const auto r = mdp.reward_row(h, s, a);
    for (std::size_t next = 0; next < p.size(); ++next)
      for (std::size_t i = 0; i < r.size(); ++i)
        walk(h + 1, next, y + z0 + static_cast<long>(i), total + z0 + static_cast<long>(i), prob * p[next] * r[i]);
  };
  walk(0, mdp.initial_state(), start_units, 0, 1.0);
  return out;
}

/// Policy-agnostic adapter: evaluates an AugmentedPolicy through enumeration.
inline std::map<long, double> enumerate_returns(const rsdrl::TabularMDP& mdp, const rsdrl::AugmentedSpace& space,
                                                const rsdrl::AugmentedPolicy& pi, double b) {
  const double spacing = space.spacing();
  const long origin = std::lround(space.grid().origin() / spacing);
  const long start = std::lround(-b / spacing);
  return enumerate_returns(
      mdp, [&](std::size_t h, std::size_t s, long y) { return pi.at(h, s, static_cast<std::size_t>(y - origin)); },
      start);
}

/// CVaR of the augmented policy from the enumerated path distribution of
/// every start -b on the return lattice, maximized over b through
/// b - E[(b - Z_b)^+] / tau.
inline double enumerated_policy_cvar(const rsdrl::TabularMDP& mdp, const rsdrl::AugmentedSpace& space,
                                     const rsdrl::AugmentedPolicy& pi, double tau) {
  double best = -1e300;
  for (double b : space.return_lattice()) {
    double shortfall = 0.0;
    for (const auto& [units, mass] : enumerate_returns(mdp, space, pi, b))
      shortfall += mass * std::max(0.0, b - static_cast<double>(units) * space.spacing());
    best = std::max(best, b - shortfall / tau);
  }
  return best;
}

} // namespace testing_support
