#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "nichewave/error.hpp"
#include "nichewave/nonlocal_op.hpp"

using namespace nichewave;

namespace {

GridFunction random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  GridFunction u(static_cast<Eigen::Index>(n));
  for (auto& x : u) x = U(rng);
  return u;
}

DiscreteOperator make(int N, double R, double h, Topology t, double eps, double m,
                      const GrowthProfile& g, Kernel k = Kernel::tent(1)) {
  if (k.dimension() != N) k = Kernel::tent(N);
  auto grid = build_grid(N, R, h, t);
  return DiscreteOperator(grid, ScaledKernel(k, eps, m, 1.0), g);
}

// Naive O(n^2) double loop over point pairs with the kernel evaluated directly.
GridFunction naive_convolution(const DiscreteOperator& op, const GridFunction& u) {
  const auto& g = op.grid();
  GridFunction out = GridFunction::Zero(u.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      const Point z{g.points[i][0] - g.points[j][0], g.points[i][1] - g.points[j][1]};
      out[Eigen::Index(i)] += g.weights[j] * op.kernel()(z) * u[Eigen::Index(j)];
    }
  }
  return out / op.normalization();
}

}  // namespace

TEST(NonlocalOp, TorusPreservesConstants) {
  for (double eps : {0.3, 1.0, 3.5}) {
    auto op = make(1, 4.0, 0.1, Topology::torus, eps, 1.0, GrowthProfile::constant(0.0));
    GridFunction one = GridFunction::Ones(Eigen::Index(op.size()));
    EXPECT_LT((op.convolve(one, ConvolutionPath::direct) - one).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LT((op.convolve(one, ConvolutionPath::fast) - one).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LT(op.apply(3.0 * one, false).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(NonlocalOp, BallMatchesNaiveTruncatedSum) {
  std::mt19937_64 rng(7);
  auto op = make(1, 3.0, 0.1, Topology::ball_truncated, 0.7, 0.0, GrowthProfile::constant(0.0));
  auto u = random_vector(op.size(), rng);
  EXPECT_LT((op.convolve(u, ConvolutionPath::direct) - naive_convolution(op, u)).norm(),
            1e-13 * u.norm());
  auto op2 = make(2, 1.0, 0.1, Topology::ball_truncated, 0.35, 0.0, GrowthProfile::constant(0.0));
  auto v = random_vector(op2.size(), rng);
  EXPECT_LT((op2.convolve(v, ConvolutionPath::direct) - naive_convolution(op2, v)).norm(),
            1e-13 * v.norm());
}

TEST(NonlocalOp, EvenInputGivesEvenOutput) {
  auto op = make(1, 2.0, 0.05, Topology::ball_truncated, 0.6, 1.0, GrowthProfile::bump(1, 1, -1));
  GridFunction u = op.grid().sample([](const Point& x) { return std::cos(x[0]) + x[0] * x[0]; });
  GridFunction out = op.apply(u);
  EXPECT_LT((out - out.reverse()).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(NonlocalOp, FastMatchesDirect) {
  std::mt19937_64 rng(11);
  for (auto t : {Topology::ball_truncated, Topology::torus}) {
    auto op = make(1, 3.2, 0.1, t, 1.3, 0.0, GrowthProfile::constant(0.0));
    ASSERT_EQ(op.size(), 64u);
    auto u = random_vector(64, rng);
    auto d = op.convolve(u, ConvolutionPath::direct);
    auto f = op.convolve(u, ConvolutionPath::fast);
    EXPECT_LE((d - f).norm(), 1e-10 * d.norm());
  }
  auto op2 = make(2, 1.0, 0.1, Topology::ball_truncated, 0.45, 0.0, GrowthProfile::constant(0.0));
  auto v = random_vector(op2.size(), rng);
  auto d2 = op2.convolve(v, ConvolutionPath::direct);
  EXPECT_LE((d2 - op2.convolve(v, ConvolutionPath::fast)).norm(), 1e-10 * d2.norm());
}

TEST(NonlocalOp, BallMassDeficit) {
  auto op = make(1, 2.0, 0.1, Topology::ball_truncated, 0.5, 1.0, GrowthProfile::constant(0.0));
  GridFunction one = GridFunction::Ones(Eigen::Index(op.size()));
  GridFunction k = op.row_mass();
  EXPECT_LE(k.maxCoeff(), 1.0 + 1e-14);
  GridFunction out = op.apply(one, false);
  EXPECT_LT((out - op.rate() * (k - one)).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LT(out[0], -0.1);
  EXPECT_LT(out[Eigen::Index(op.size()) - 1], -0.1);
  EXPECT_NEAR(out[Eigen::Index(op.size()) / 2], 0.0, 1e-13);
}

TEST(NonlocalOp, MatrixFreeMatchesAssembled) {
  auto op = make(1, 4.0, 0.1, Topology::ball_truncated, 1.0, 0.0, GrowthProfile::bump(1, 1, -3));
  GridFunction u = op.grid().sample([](const Point& x) { return std::abs(x[0]) <= 1.0 ? 1.0 : 0.0; });
  Eigen::MatrixXd A = op.assemble_matrix();
  EXPECT_LT((op.apply(u) - A * u).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LT((op.apply(u, true, ConvolutionPath::fast) - A * u).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(NonlocalOp, SmallTorusRowsSumToZero) {
  // smallest even torus; the tent kernel is wider than the box
  auto op = make(1, 2.0, 1.0, Topology::torus, 3.0, 0.0, GrowthProfile::constant(0.0));
  ASSERT_EQ(op.size(), 4u);
  Eigen::MatrixXd A = op.assemble_matrix();
  EXPECT_LT(A.rowwise().sum().cwiseAbs().maxCoeff(), 1e-14);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 4; ++j)
      if (i != j) EXPECT_GT(A(i, j), 0.0);
}

TEST(NonlocalOp, WeightedSymmetry) {
  auto op = make(2, 1.0, 0.2, Topology::ball_truncated, 0.5, 2.0, GrowthProfile::bump(2, 1, -1));
  Eigen::MatrixXd S = symmetrize(op.assemble_matrix(), op.grid().weights);
  EXPECT_LT((S - S.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(NonlocalOp, EigenvaluesInvariantUnderPermutation) {
  std::mt19937_64 rng(5);
  auto grid = build_grid(1, 1.5, 0.5, Topology::ball_truncated);
  ASSERT_EQ(grid.size(), 6u);
  auto a = random_vector(grid.size(), rng);
  DiscreteOperator op(grid, ScaledKernel(Kernel::tent(1), 0.8, 1.0, 1.0), a);
  Eigen::MatrixXd A = op.assemble_matrix();
  std::vector<int> perm(6);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::PermutationMatrix<Eigen::Dynamic> P(Eigen::Map<Eigen::VectorXi>(perm.data(), 6));
  Eigen::MatrixXd B = P * A * P.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(A), eb(B);
  EXPECT_LT((ea.eigenvalues() - eb.eigenvalues()).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(NonlocalOp, SymmetrizationIdentityOnTorus) {
  std::mt19937_64 rng(3);
  auto op = make(1, 2.0, 0.1, Topology::torus, 0.45, 0.0, GrowthProfile::constant(0.0));
  const int n = int(op.size());
  auto u = random_vector(op.size(), rng);
  auto phi = random_vector(op.size(), rng);
  auto at = [&](const GridFunction& v, int k) { return v[((k % n) + n) % n]; };
  double lhs = 0.0, rhs = 0.0;
  for (int x = 0; x < n; ++x) {
    for (int z = 0; z < n; ++z) {
      const double rho = op.stencil(z);
      lhs += rho * (at(u, x + z) - at(u, x)) * at(phi, x);
      rhs += 0.5 * rho * at(u, x) * (at(phi, x + z) - 2.0 * at(phi, x) + at(phi, x - z));
    }
  }
  EXPECT_NEAR(lhs, rhs, 1e-10);
}

TEST(NonlocalOp, QuadraticFormIdentity) {
  std::mt19937_64 rng(9);
  auto op = make(1, 2.5, 0.1, Topology::ball_truncated, 0.8, 0.0, GrowthProfile::constant(0.0));
  auto u = random_vector(op.size(), rng);
  const auto& g = op.grid();
  GridFunction k = op.row_mass();
  double lhs = 0.0;
  GridFunction Ju = op.convolve(u, ConvolutionPath::direct);
  for (std::size_t i = 0; i < g.size(); ++i) lhs -= g.weights[i] * (Ju[Eigen::Index(i)] - u[Eigen::Index(i)]) * u[Eigen::Index(i)];
  double rhs = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double s = op.stencil(g.lattice[i][0] - g.lattice[j][0]);
      rhs += 0.5 * g.weights[i] * s * std::pow(u[Eigen::Index(i)] - u[Eigen::Index(j)], 2);
    }
    rhs += g.weights[i] * (1.0 - k[Eigen::Index(i)]) * u[Eigen::Index(i)] * u[Eigen::Index(i)];
  }
  EXPECT_NEAR(lhs, rhs, 1e-10);
}

TEST(NonlocalOp, Errors) {
  auto grid = build_grid(1, 2.0, 0.1, Topology::ball_truncated);
  EXPECT_THROW(DiscreteOperator(grid, ScaledKernel(Kernel::tent(1), 0.05, 0, 1), GrowthProfile::constant(0)),
               UnderResolvedKernel);
  EXPECT_THROW(DiscreteOperator(grid, ScaledKernel(Kernel::tent(2), 1, 0, 1), GrowthProfile::constant(0)),
               DimensionMismatch);
  DiscreteOperator op(grid, ScaledKernel(Kernel::tent(1), 1, 0, 1), GrowthProfile::constant(0));
  EXPECT_THROW(op.apply(GridFunction::Ones(3)), DimensionMismatch);
  OperatorOptions small;
  small.dense_limit = 10;
  DiscreteOperator op2(grid, ScaledKernel(Kernel::tent(1), 1, 0, 1), GrowthProfile::constant(0), small);
  EXPECT_THROW(op2.assemble_matrix(), ResourceLimit);
}

TEST(NonlocalOp, FatTailTorusKeepsUnitMass) {
  auto grid = build_grid(1, 5.0, 0.1, Topology::torus);
  DiscreteOperator op(grid, ScaledKernel(Kernel::algebraic_tail(1, 5.0), 1.0, 0.0, 1.0),
                      GrowthProfile::constant(0));
  EXPECT_LT((op.row_mass().array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_GT(op.truncation_error(), 0.0);
  EXPECT_LE(op.truncation_error(), 2.1e-10);
}
