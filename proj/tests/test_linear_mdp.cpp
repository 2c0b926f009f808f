#include <gtest/gtest.h>

#include "rsdrl/augmented_dp.hpp"
#include "rsdrl/experiment.hpp"
#include "rsdrl/linear_mdp.hpp"

using namespace rsdrl;

TEST(ZeroMeanMdp, PaperShapeIsValidAndZeroMean) {
  const auto lin = make_zero_mean_mdp(3, 2, 2, 6, 3, 7);
  const TabularMDP& mdp = lin.tabular;
  EXPECT_EQ(mdp.n_states(), 3u);
  EXPECT_EQ(mdp.n_actions(), 2u);
  EXPECT_EQ(mdp.horizon(), 6u);
  EXPECT_EQ(mdp.reward_grid(), ValueGrid(-1, 1, 3));
  EXPECT_EQ(lin.dim, 2u);
  for (std::size_t h = 0; h < 6; ++h)
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t a = 0; a < 2; ++a) {
        EXPECT_NEAR(mdp.expected_reward(h, s, a), 0.0, 1e-15);
        EXPECT_LE(lin.feature(s, a).norm(), 1.0);
        for (std::size_t next = 0; next < 3; ++next)
          EXPECT_EQ(mdp.transition_row(h, s, a)[next], lin.feature(s, a).dot(lin.mu[h][next]));
        for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(mdp.reward_row(h, s, a)[i], lin.feature(s, a).dot(lin.theta[h][i]));
      }
}

TEST(ZeroMeanMdp, LargerRewardGridStaysSymmetric) {
  const auto lin = make_zero_mean_mdp(4, 3, 3, 3, 7, 2);
  for (std::size_t h = 0; h < 3; ++h)
    for (std::size_t s = 0; s < 4; ++s)
      for (std::size_t a = 0; a < 3; ++a) {
        const auto r = lin.tabular.reward_row(h, s, a);
        for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(r[i], r[6 - i], 1e-15);
      }
}

TEST(ZeroMeanMdp, EveryPolicyHasZeroExpectedReturn) {
  const auto lin = make_zero_mean_mdp(3, 2, 2, 6, 3, 7);
  const auto space = AugmentedSpace::standard(lin.tabular.shape());
  Rng rng(3);
  for (int t = 0; t < 10; ++t) {
    std::vector<std::vector<int>> raw(6, std::vector<int>(3));
    for (auto& row : raw)
      for (auto& a : row) a = static_cast<int>(rng.next() % 2);
    EXPECT_NEAR(return_distribution(lin.tabular, space, AugmentedPolicy::y_blind(space, raw), 0.0).mean(), 0.0, 1e-12);
  }
}

TEST(ZeroMeanMdp, CvarSpreadIsPositive) {
  const auto lin = make_zero_mean_mdp(3, 2, 2, 6, 3, 7);
  EXPECT_GT(cvar_spread(lin.tabular, 0.3), 0.0);
}

TEST(ZeroMeanMdp, DeterministicInSeed) {
  EXPECT_EQ(make_zero_mean_mdp(3, 2, 2, 4, 3, 11).tabular, make_zero_mean_mdp(3, 2, 2, 4, 3, 11).tabular);
  EXPECT_FALSE(make_zero_mean_mdp(3, 2, 2, 4, 3, 11).tabular == make_zero_mean_mdp(3, 2, 2, 4, 3, 12).tabular);
}

TEST(ZeroMeanMdp, RejectsBadShapes) {
  EXPECT_THROW(make_zero_mean_mdp(3, 2, 2, 6, 4, 1), StructureError);
  EXPECT_THROW(make_zero_mean_mdp(3, 2, 2, 6, 1, 1), StructureError);
  EXPECT_THROW(make_zero_mean_mdp(1, 2, 3, 6, 3, 1), StructureError);
}

TEST(Materialize, RejectsNonPmfMixtures) {
  const ValueGrid g(0, 1, 2);
  std::vector<Eigen::VectorXd> phi{Eigen::Vector2d(0.5, 0.5)};
  std::vector<std::vector<Eigen::VectorXd>> mu{{Eigen::Vector2d(1.0, 0.2)}};
  std::vector<std::vector<Eigen::VectorXd>> theta{{Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0.5, 0.5)}};
  EXPECT_THROW(materialize(1, 1, 1, g, phi, mu, theta), ValidationError);
  mu = {{Eigen::Vector2d(1.0, 1.0)}};
  EXPECT_NO_THROW(materialize(1, 1, 1, g, phi, mu, theta));
  phi = {Eigen::Vector2d(1.0, 1.0)};
  EXPECT_THROW(materialize(1, 1, 1, g, phi, mu, theta), ValidationError);
}
