#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

#include "rsdrl/linear_cvar.hpp"
#include "rsdrl/linear_mdp.hpp"
#include "support.hpp"

using namespace rsdrl;

namespace {

LinearCvarParams params(double c_beta, double lambda = 1.0, double tau = 0.5) {
  LinearCvarParams p;
  p.c_beta = c_beta;
  p.lambda_ridge = lambda;
  p.tau = tau;
  return p;
}

// Deterministic two-state, two-action MDP with one-hot features in R^4.
struct OneHotInstance {
  TabularMDP mdp;
  std::vector<Eigen::VectorXd> phi;
};

OneHotInstance one_hot_instance(std::size_t horizon) {
  OneHotInstance out{TabularMDP(2, 2, horizon, ValueGrid(-1, 1, 3)), {}};
  for (std::size_t h = 0; h < horizon; ++h)
    for (std::size_t s = 0; s < 2; ++s)
      for (std::size_t a = 0; a < 2; ++a) {
        out.mdp.transition_row(h, s, a)[(s + a + h) % 2] = 1.0;
        out.mdp.reward_row(h, s, a)[(s * 2 + a + h) % 3] = 1.0;
      }
  validate(out.mdp);
  for (std::size_t k = 0; k < 4; ++k) out.phi.push_back(Eigen::VectorXd::Unit(4, static_cast<Eigen::Index>(k)));
  return out;
}

// One synthetic trajectory per (s, a) that plays (s, a) at every step.
void feed_all_pairs(LinearCvarLearner& learner, const TabularMDP& mdp, int repeats) {
  for (int r = 0; r < repeats; ++r)
    for (std::size_t s = 0; s < mdp.n_states(); ++s)
      for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
        Trajectory t;
        for (std::size_t h = 0; h < mdp.horizon(); ++h) {
          TrajectoryStep st;
          st.state = s;
          st.action = a;
          const auto p = mdp.transition_row(h, s, a);
          const auto rw = mdp.reward_row(h, s, a);
          st.next_state = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
          st.reward_index = static_cast<std::size_t>(std::max_element(rw.begin(), rw.end()) - rw.begin());
          st.reward = mdp.reward_grid().value(st.reward_index);
          t.steps.push_back(st);
        }
        learner.update(t);
      }
}

} // namespace

TEST(QuadFeature, RowMajorOuterProduct) {
  const Eigen::Vector3d phi(1, 2, 3);
  const Eigen::VectorXd psi = quad_feature(phi);
  ASSERT_EQ(psi.size(), 9);
  EXPECT_EQ(psi[1], 2.0);
  EXPECT_EQ(psi[5], 6.0);
  EXPECT_EQ(psi[8], 9.0);
  EXPECT_NEAR(psi.norm(), phi.squaredNorm(), 1e-12);
}

TEST(Beta, PaperShapeExample) {
  LinearCvarParams p = params(1.0);
  const double expected = 24.0 * std::sqrt(3.0 * std::log(12.0 * 2000.0 / 0.01));
  EXPECT_NEAR(linear_cvar_beta(p, 2, 6, 3), expected, 1e-12);
  EXPECT_NEAR(expected, 159.3, 0.05);
  p.c_beta = 0.0;
  EXPECT_EQ(linear_cvar_beta(p, 2, 6, 3), 0.0);
}

TEST(Beta, Monotone) {
  LinearCvarParams p = params(1.0);
  const double base = linear_cvar_beta(p, 2, 6, 3);
  EXPECT_GE(linear_cvar_beta(p, 2, 7, 3), base);
  EXPECT_GE(linear_cvar_beta(p, 2, 6, 5), base);
  p.episodes = 4000;
  EXPECT_GE(linear_cvar_beta(p, 2, 6, 3), base);
  p.episodes = 2000;
  p.delta = 0.1;
  EXPECT_LE(linear_cvar_beta(p, 2, 6, 3), base);
}

TEST(LinearCvarLearner, EmptyDataClosedForm) {
  const auto lin = make_zero_mean_mdp(3, 2, 2, 6, 3, 7);
  const double lambda = 2.0;
  LinearCvarLearner learner(lin.tabular.shape(), lin.phi, params(0.1, lambda));
  const EpisodePlan plan = learner.plan_episode(1);
  const auto& space = learner.space();
  for (std::size_t h = 0; h < 6; ++h)
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t y = space.lo(h); y <= space.hi(h); ++y) {
        for (std::size_t a = 0; a < 2; ++a)
          EXPECT_NEAR(plan.q.at(h, s, y, a), -learner.beta() / std::sqrt(lambda) * learner.psi(s, a).norm(), 1e-12);
        EXPECT_EQ(plan.v.at(h, s, y), 0.0);
      }
  EXPECT_EQ(plan.b, 6.0);
  EXPECT_EQ(plan.objective, 6.0);
}

TEST(LinearCvarLearner, GramAfterOneUpdate) {
  const auto lin = make_zero_mean_mdp(3, 2, 2, 6, 3, 7);
  LinearCvarLearner learner(lin.tabular.shape(), lin.phi, params(0.1));
  const EpisodePlan plan = learner.plan_episode(1);
  const Trajectory t = simulate(lin.tabular, learner.space(), plan.policy, plan.b, 9);
  learner.update(t);
  for (std::size_t h = 0; h < 6; ++h) {
    const Eigen::VectorXd psi = learner.psi(t.steps[h].state, t.steps[h].action);
    const Eigen::MatrixXd expected = Eigen::MatrixXd::Identity(4, 4) + psi * psi.transpose();
    EXPECT_LE((learner.gram(h).matrix() - expected).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LE((learner.gram(h).inverse() - expected.inverse()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(LinearCvarLearner, InverseTracksDirectInversionAndEigenvaluesGrow) {
  const auto lin = make_zero_mean_mdp(3, 2, 2, 6, 3, 7);
  LinearCvarParams p = params(0.01);
  p.refactor_every = 0;
  LinearCvarLearner learner(lin.tabular.shape(), lin.phi, p);
  Eigen::VectorXd previous = Eigen::VectorXd::Ones(4);
  for (std::size_t k = 1; k <= 300; ++k) {
    const EpisodePlan plan = learner.plan_episode(k);
    learner.update(simulate(lin.tabular, learner.space(), plan.policy, plan.b, episode_seed(3, k)));
    const auto& g = learner.gram(2);
    const Eigen::MatrixXd direct = g.matrix().inverse();
    EXPECT_LE((g.inverse() - direct).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, direct.cwiseAbs().maxCoeff()));
    const Eigen::VectorXd eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g.matrix()).eigenvalues();
    for (Eigen::Index i = 0; i < 4; ++i) EXPECT_GE(eig[i], previous[i] - 1e-9);
    previous = eig;
  }
}

TEST(LinearCvarLearner, BonusShrinksWithRepeatedVisits) {
  const auto inst = one_hot_instance(2);
  LinearCvarLearner learner(inst.mdp.shape(), inst.phi, params(0.1));
  double last = learner.bonus(0, 1, 0);
  EXPECT_GT(last, 0.0);
  for (int r = 0; r < 5; ++r) {
    feed_all_pairs(learner, inst.mdp, 1);
    const double now = learner.bonus(0, 1, 0);
    EXPECT_LT(now, last);
    EXPECT_GE(now, 0.0);
    last = now;
  }
}

TEST(LinearCvarLearner, FullRankDataReproducesOneStepTargets) {
  const auto inst = one_hot_instance(3);
  LinearCvarLearner learner(inst.mdp.shape(), inst.phi, params(0.0, 1e-8));
  feed_all_pairs(learner, inst.mdp, 4);
  const auto& space = learner.space();
  const ValueTable v = solve_shortfall(inst.mdp, space).values;
  for (std::size_t h = 0; h < 3; ++h) {
    const Eigen::MatrixXd w = learner.regression_weights(h, v);
    for (std::size_t s = 0; s < 2; ++s)
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t y = space.lo(h); y <= space.hi(h); ++y)
          EXPECT_NEAR(learner.psi(s, a).dot(w.col(static_cast<Eigen::Index>(y))), backup(inst.mdp, space, v, h, s, y, a),
                      1e-6);
  }
}

TEST(LinearCvarLearner, GreedyPlanMatchesExactShortfallDp) {
  const auto inst = one_hot_instance(3);
  LinearCvarLearner learner(inst.mdp.shape(), inst.phi, params(0.0, 1e-8));
  feed_all_pairs(learner, inst.mdp, 4);
  const EpisodePlan plan = learner.plan_episode(20);
  const auto& space = learner.space();
  const ShortfallSolution exact = solve_shortfall(inst.mdp, space);
  for (std::size_t h = 0; h < 3; ++h)
    for (std::size_t s = 0; s < 2; ++s)
      for (std::size_t y = space.lo(h); y <= space.hi(h); ++y) {
        EXPECT_NEAR(plan.v.at(h, s, y), exact.values.at(h, s, y), 1e-6);
        for (std::size_t a = 0; a < 2; ++a) EXPECT_NEAR(plan.q.at(h, s, y, a), exact.q.at(h, s, y, a), 1e-6);
      }
}

TEST(LinearCvarLearner, ObjectiveIsArgmaxOverReturnLattice) {
  const auto lin = make_zero_mean_mdp(3, 2, 2, 6, 3, 7);
  LinearCvarLearner learner(lin.tabular.shape(), lin.phi, params(0.002, 1.0, 0.3));
  for (std::size_t k = 1; k <= 100; ++k) {
    const EpisodePlan plan = learner.plan_episode(k);
    for (double b : learner.space().return_lattice()) {
      EXPECT_GE(plan.objective, b - plan.v.at(0, 0, learner.space().start_index(b)) / 0.3 - 1e-12);
    }
    EXPECT_NEAR(plan.objective, plan.b - plan.v.at(0, 0, learner.space().start_index(plan.b)) / 0.3, 1e-12);
    learner.update(simulate(lin.tabular, learner.space(), plan.policy, plan.b, episode_seed(8, k)));
  }
}

TEST(LinearCvarLearner, ValuesClampedAndPolicyGreedy) {
  const auto lin = make_zero_mean_mdp(3, 2, 2, 4, 3, 5);
  LinearCvarLearner learner(lin.tabular.shape(), lin.phi, params(0.01));
  for (std::size_t k = 1; k <= 50; ++k) {
    const EpisodePlan plan = learner.plan_episode(k);
    const auto& space = learner.space();
    for (std::size_t h = 0; h < 4; ++h)
      for (std::size_t s = 0; s < 3; ++s)
        for (std::size_t y = space.lo(h); y <= space.hi(h); ++y) {
          const std::size_t a = plan.policy.at(h, s, y);
          const double q0 = plan.q.at(h, s, y, 0), q1 = plan.q.at(h, s, y, 1);
          EXPECT_EQ(a, q1 < q0 ? 1u : 0u);
          const double v = plan.v.at(h, s, y);
          EXPECT_GE(v, 0.0);
          EXPECT_LE(v, shortfall_cap(space, lin.tabular.reward_grid(), h, y));
        }
    learner.update(simulate(lin.tabular, learner.space(), plan.policy, plan.b, episode_seed(2, k)));
  }
}

TEST(LinearCvarLearner, RidgeSolutionMinimizesLoss) {
  const auto lin = make_zero_mean_mdp(3, 2, 2, 4, 3, 5);
  LinearCvarLearner learner(lin.tabular.shape(), lin.phi, params(0.01));
  for (std::size_t k = 1; k <= 30; ++k) {
    const EpisodePlan plan = learner.plan_episode(k);
    learner.update(simulate(lin.tabular, learner.space(), plan.policy, plan.b, episode_seed(4, k)));
  }
  const EpisodePlan plan = learner.plan_episode(31);
  Rng rng(6);
  for (std::size_t h = 0; h < 4; ++h) {
    const Eigen::MatrixXd w = learner.regression_weights(h, plan.v);
    for (std::size_t y = learner.space().lo(h); y <= learner.space().hi(h); ++y) {
      const Eigen::VectorXd best = w.col(static_cast<Eigen::Index>(y));
      const double at_best = learner.regression_loss(h, plan.v, y, best);
      for (int t = 0; t < 5; ++t) {
        Eigen::VectorXd dir(4);
        for (Eigen::Index i = 0; i < 4; ++i) dir[i] = rng.uniform() - 0.5;
        EXPECT_LE(at_best, learner.regression_loss(h, plan.v, y, best + 0.1 * dir) + 1e-9);
      }
    }
  }
}

TEST(LinearCvarLearner, OptimismAtLargeBeta) {
  const auto lin = make_zero_mean_mdp(3, 2, 2, 6, 3, 7);
  LinearCvarLearner learner(lin.tabular.shape(), lin.phi, params(1.0));
  const auto& space = learner.space();
  const ShortfallSolution exact = solve_shortfall(lin.tabular, space);
  std::size_t total = 0, optimistic = 0;
  for (std::size_t k = 1; k <= 100; ++k) {
    const EpisodePlan plan = learner.plan_episode(k);
    for (std::size_t h = 0; h < 6; ++h)
      for (std::size_t s = 0; s < 3; ++s)
        for (std::size_t y = space.lo(h); y <= space.hi(h); ++y)
          for (std::size_t a = 0; a < 2; ++a) {
            ++total;
            optimistic += plan.q.at(h, s, y, a) <= exact.q.at(h, s, y, a) + 1e-12;
          }
    learner.update(simulate(lin.tabular, space, plan.policy, plan.b, episode_seed(12, k)));
  }
  EXPECT_GE(static_cast<double>(optimistic), 0.95 * static_cast<double>(total));
}

TEST(LinearCvarLearner, RejectsMalformedInput) {
  const auto lin = make_zero_mean_mdp(3, 2, 2, 6, 3, 7);
  EXPECT_THROW(LinearCvarLearner(lin.tabular.shape(), {lin.phi[0]}, params(0.1)), StructureError);
  EXPECT_THROW(LinearCvarLearner(lin.tabular.shape(), lin.phi, params(0.1, 1.0, 0.0)), ParameterError);
  LinearCvarLearner learner(lin.tabular.shape(), lin.phi, params(0.1));
  EXPECT_THROW(learner.update(Trajectory{}), StructureError);
}

TEST(GramMatrix, RejectsNonPositiveRidge) { EXPECT_THROW(GramMatrix(3, 0.0), std::invalid_argument); }
