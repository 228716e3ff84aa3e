#pragma once

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "nichewave/grid.hpp"
#include "nichewave/nonlocal_op.hpp"

namespace nichewave {

enum class SpectralMethod { perron_cw, rayleigh, fd_laplacian };

std::string_view to_string(SpectralMethod method);

struct SpectralEstimate {
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  GridFunction eigenvector;  // positive, sup = 1
  double residual = 0.0;
  SpectralMethod method = SpectralMethod::perron_cw;
  int iterations = 0;
  // Strict inequality lambda_p < rate - sup a: a bounded positive eigenfunction
  // exists. Only meaningful for perron-cw estimates.
  bool eigenfunction_flag = false;

  double width() const { return upper - lower; }
  bool certified_negative() const { return upper < 0.0; }
  bool certified_nonnegative() const { return lower >= 0.0; }
  bool straddles_zero() const { return lower < 0.0 && upper >= 0.0; }
};

struct SpectralOptions {
  double tol = 1e-9;  // absolute bracket width
  int max_iterations = 400000;
  // positive starting vector for the power iteration (warm start)
  std::optional<GridFunction> initial;
};

// lambda_p of rate (J_eps * . - .) + a via Collatz-Wielandt power iteration on
// A + cI, c = 1 + max|a| + rate. Runs on the direct convolution path so that
// tiny eigenvector entries keep their relative accuracy.
SpectralEstimate principal_eigenvalue(const DiscreteOperator& op, const SpectralOptions& opts = {});

// Same iteration on an explicit matrix with nonnegative off-diagonal part.
SpectralEstimate principal_eigenvalue(const Eigen::MatrixXd& A, const SpectralOptions& opts = {});

// lambda_v = inf -<A phi, phi>_w / <phi, phi>_w by restarted Lanczos with full
// reorthogonalization. upper is the Ritz bound, lower subtracts the residual norm.
SpectralEstimate rayleigh_lambda_v(const DiscreteOperator& op, const SpectralOptions& opts = {});
SpectralEstimate rayleigh_lambda_v(const Eigen::MatrixXd& A, const std::vector<double>& weights,
                                   const SpectralOptions& opts = {});

struct RExtrapolation {
  std::vector<double> radii;
  std::vector<SpectralEstimate> estimates;
  double value = 0.0;
  double uncertainty = 0.0;  // last decrease plus bracket width
  double lower = 0.0;
  double upper = 0.0;
  bool converged = false;
};

// lambda_p(L_R + a) over an increasing R schedule. The sequence must be
// non-increasing up to bracket widths, else DiscretizationInconsistency.
RExtrapolation lambda_p_extrapolate_R(const std::function<DiscreteOperator(double)>& make,
                                      const std::vector<double>& schedule, double tol,
                                      const SpectralOptions& opts = {});

struct ScalingReport {
  double epsilon = 1.0;
  SpectralEstimate original;  // lambda_p(M + a) on B_R, spacing h
  SpectralEstimate scaled;    // lambda_p(M_eps + a(./eps)) on B_{eps R}, spacing eps h
  double difference = 0.0;
  double allowed = 0.0;  // combined bracket widths
  bool passed = false;
};

// Rate is fixed to 1 on both sides (the identity is for J_eps * u - u).
ScalingReport scaling_invariance_check(const Kernel& kernel, const GrowthProfile& growth,
                                       double radius, double spacing, Topology topology,
                                       double epsilon, const SpectralOptions& opts = {});

// -sigma Lap_h on the grid cells with antisymmetric ghost values outside
// (second order at a box edge, staircase first order on a curved boundary).
Eigen::SparseMatrix<double> fd_neg_laplacian(const Grid& grid, double sigma);

// Smallest eigenvalue of -sigma Lap_h - a with Dirichlet data at the edge of
// the grid (antisymmetric ghost cells). Sturm/inertia bisection for the
// bracket, inverse iteration for the eigenvector.
SpectralEstimate local_lambda1_fd(const Grid& grid, const GridFunction& a, double sigma,
                                  double tol = 1e-11);

}  // namespace nichewave
