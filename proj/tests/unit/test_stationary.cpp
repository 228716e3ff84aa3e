#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "nichewave/error.hpp"
#include "nichewave/stationary.hpp"
#include "oracles.hpp"

using namespace nichewave;

namespace {

DiscreteOperator ball(double R, double h, double eps, double m, const GrowthProfile& g) {
  return DiscreteOperator(build_grid(1, R, h, Topology::ball_truncated),
                          ScaledKernel(Kernel::tent(1), eps, m, 1.0), g);
}

}  // namespace

TEST(Supersolution, ExponentialCandidateHolds) {
  auto growth = GrowthProfile::bump(1.0, 1.0, -3.0);  // 1 - min(x^2, 4)
  auto op = ball(8.0, 0.05, 1.0, 0.0, growth);
  auto bar = build_supersolution(op, growth);
  EXPECT_FALSE(bar.constant);
  EXPECT_GT(bar.alpha, 0.0);
  EXPECT_LE(bar.margin, 1e-12);
  EXPECT_LE(naive_residual(op, growth.reaction(), bar.values, true), 1e-12);
  // exponential tail below the plateau value far out
  EXPECT_LT(bar.values[0], 2.0 * bar.M);
}

TEST(Supersolution, ConstantFallbackOnTorus) {
  auto growth = GrowthProfile::bump(1.5, 1.0, -1.0);
  DiscreteOperator op(build_grid(1, 3.0, 0.1, Topology::torus),
                      ScaledKernel(Kernel::tent(1), 0.5, 0.0, 1.0), growth);
  auto bar = build_supersolution(op, growth);
  EXPECT_TRUE(bar.constant);
  EXPECT_NEAR(bar.values.maxCoeff(), op.a().maxCoeff(), 1e-14);
  EXPECT_LE(bar.margin, 1e-14);
}

TEST(Supersolution, StrongerDecayAllowsLargerAlpha) {
  double previous = 0.0;
  for (double nu : {0.25, 0.5, 1.0, 2.0}) {
    auto growth = GrowthProfile::bump(1.0, 1.0, -nu);
    auto bar = build_supersolution(ball(6.0, 0.05, 1.0, 0.0, growth), growth);
    ASSERT_FALSE(bar.constant);
    EXPECT_GE(bar.alpha, previous);
    previous = bar.alpha;
  }
}

TEST(Supersolution, FatTailFailsWithoutFallback) {
  auto growth = GrowthProfile::bump(1.0, 1.0, -1.0);
  DiscreteOperator op(build_grid(1, 6.0, 0.1, Topology::ball_truncated),
                      ScaledKernel(Kernel::algebraic_tail(1, 5.0), 1.0, 0.0, 1.0), growth);
  EXPECT_THROW(build_supersolution(op, growth, 1e-12, false), SupersolutionFailure);
  EXPECT_TRUE(build_supersolution(op, growth).constant);
}

TEST(StationaryBall, CertifiedNonnegativeLambdaGivesZero) {
  auto growth = GrowthProfile::plateau(0.2, 0.5, -1.0, 0.0);
  auto op = ball(6.0, 0.1, 1.0, 0.0, growth);
  auto sol = solve_stationary_ball(op, growth.reaction());
  ASSERT_TRUE(sol.lambda_p_used.certified_nonnegative());
  EXPECT_EQ(sol.verdict, Verdict::extinction);
  EXPECT_EQ(sol.values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(StationaryBall, TorusConstantGrowthGivesConstant) {
  DiscreteOperator op(build_grid(1, 3.0, 0.1, Topology::torus),
                      ScaledKernel(Kernel::tent(1), 0.7, 1.0, 1.0), GrowthProfile::constant(0.8));
  auto sol = solve_stationary_ball(op, Reaction{});
  EXPECT_EQ(sol.verdict, Verdict::persistence);
  EXPECT_LT((sol.values.array() - 0.8).abs().maxCoeff(), 1e-9);
}

TEST(StationaryBall, BumpResidualAgainstNaiveEvaluation) {
  auto growth = GrowthProfile::bump(2.0, 1.0, -1.0);
  auto op = ball(8.0, 0.05, 1.0, 0.0, growth);
  auto sol = solve_stationary_ball(op, growth.reaction());
  ASSERT_EQ(sol.verdict, Verdict::persistence);
  EXPECT_LE(naive_residual(op, growth.reaction(), sol.values), 1e-8);
  // sandwich, barrier and the lower bound (a - rate)^+
  EXPECT_LE((sol.sub - sol.values).maxCoeff(), 1e-9);
  EXPECT_LE((sol.values - sol.super).maxCoeff(), 1e-9);
  EXPECT_LE(sol.values.maxCoeff(), 2.0 + 1e-12);
  EXPECT_LE(((op.a().array() - op.rate()).max(0.0) - sol.values.array()).maxCoeff(), 1e-9);
}

TEST(StationaryBall, CubicReaction) {
  auto growth = GrowthProfile::bump(2.0, 1.0, -1.0).with_reaction(ReactionKind::cubic);
  auto op = ball(6.0, 0.1, 1.0, 0.0, growth);
  auto sol = solve_stationary_ball(op, growth.reaction());
  ASSERT_EQ(sol.verdict, Verdict::persistence);
  EXPECT_LE(naive_residual(op, growth.reaction(), sol.values), 1e-8);
  EXPECT_LE(sol.values.maxCoeff(), std::sqrt(2.0) + 1e-12);
}

TEST(StationaryWholespace, IncreasingInRAndStable) {
  auto growth = GrowthProfile::bump(2.0, 1.0, -1.0);
  auto kernel = ScaledKernel(Kernel::tent(1), 1.0, 0.0, 1.0);
  auto make = [&](double R) {
    return DiscreteOperator(build_grid(1, R, 0.05, Topology::ball_truncated), kernel, growth);
  };
  auto sol = solve_stationary_wholespace(make, growth, {4, 6, 8, 10}, 1e-6);
  ASSERT_EQ(sol.verdict, Verdict::persistence);
  ASSERT_GE(sol.R_history.size(), 2u);
  EXPECT_LE(sol.R_history.back().second, 1e-6);
  EXPECT_LE((sol.values - sol.super).maxCoeff(), 1e-9);

  auto big = solve_stationary_ball(make(16.0), growth.reaction());
  auto map = embed_indices(sol.grid, big.grid);
  EXPECT_LE((restrict_to(big.values, map) - sol.values).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(StationaryWholespace, NonpositiveGrowthGivesZero) {
  auto growth = GrowthProfile::bump(0.0, 1.0, -1.0);
  auto kernel = ScaledKernel(Kernel::tent(1), 1.0, 0.0, 1.0);
  auto make = [&](double R) {
    return DiscreteOperator(build_grid(1, R, 0.1, Topology::ball_truncated), kernel, growth);
  };
  auto sol = solve_stationary_wholespace(make, growth, {4, 6}, 1e-6);
  EXPECT_EQ(sol.verdict, Verdict::extinction);
  EXPECT_EQ(sol.values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Uniqueness, MultiStartAndDefectSigns) {
  auto growth = GrowthProfile::bump(1.5, 1.0, -1.0);
  auto op = ball(6.0, 0.1, 1.0, 1.0, growth);
  const auto& reaction = growth.reaction();
  auto sol = solve_stationary_ball(op, reaction);
  ASSERT_EQ(sol.verdict, Verdict::persistence);

  auto self = verify_uniqueness(op.grid(), op.a(), reaction, sol.values, sol.values);
  EXPECT_EQ(self.defect, 0.0);

  auto scaled = verify_uniqueness(op.grid(), op.a(), reaction, sol.values, 1.1 * sol.values);
  EXPECT_GT(scaled.defect, 0.0);

  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> U(0.01, 1.5);
  std::vector<GridFunction> runs;
  for (int k = 0; k < 5; ++k) {
    GridFunction u0(Eigen::Index(op.size()));
    for (auto& x : u0) x = U(rng);
    runs.push_back(iterate_to_fixed_point(op, reaction, u0, {}));
  }
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (std::size_t j = i + 1; j < runs.size(); ++j) {
      auto rep = verify_uniqueness(op.grid(), op.a(), reaction, runs[i], runs[j]);
      EXPECT_LE(rep.sup_difference, 1e-6);
      EXPECT_LE(std::abs(rep.defect), 1e-8);
    }
  }
}
