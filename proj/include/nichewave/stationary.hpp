#pragma once

#include <functional>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "nichewave/growth.hpp"
#include "nichewave/nonlocal_op.hpp"
#include "nichewave/spectral.hpp"

namespace nichewave {

enum class Verdict { persistence, extinction, indeterminate };

std::string_view to_string(Verdict verdict);

struct Supersolution {
  GridFunction values;
  double alpha = 0.0;  // decay rate, 0 for the constant fallback
  double C = 0.0;
  double M = 0.0;  // sup S
  double R0 = 0.0;
  double nu = 0.0;
  double margin = 0.0;  // max over the grid of rate(J*u - u) + f(x, u); <= tol
  bool constant = false;
};

// 2M on B_{2 R0}, C e^{-alpha |x|} outside, with alpha halved from 1 until
// rate (sum_d s_d e^{alpha |d h|} - 1) - nu/2 < 0. Requires a compact kernel and
// limsup a = -nu < 0; otherwise (or with allow_constant and a failing
// construction) the constant sup S is used. The property is checked pointwise.
Supersolution build_supersolution(const DiscreteOperator& op, const GrowthProfile& growth,
                                  double tol = 1e-12, bool allow_constant = true);

struct SolverOptions {
  double tol = 1e-10;
  int max_iterations = 5'000'000;
  SpectralOptions spectral;
};

struct StationarySolution {
  Grid grid;
  GridFunction values;
  GridFunction sub;
  GridFunction super;
  GridFunction a;
  double residual = 0.0;
  SpectralEstimate lambda_p_used;
  Verdict verdict = Verdict::indeterminate;
  std::vector<std::pair<double, double>> R_history;
  int iterations = 0;
  double theta = 0.0;
  // terminal state of the iteration when the verdict is indeterminate
  GridFunction attempt;
};

// sup |rate (J*u - u) + f(x, u)| on the direct path.
double stationary_residual(const DiscreteOperator& op, const Reaction& reaction,
                           const GridFunction& u);

// Damped iteration u <- u + tau (L u + f(x,u)) from an arbitrary nonnegative
// start until the residual drops below tol.
GridFunction iterate_to_fixed_point(const DiscreteOperator& op, const Reaction& reaction,
                                    GridFunction u, const SolverOptions& opts,
                                    int* iterations = nullptr);

// Solution of L_R u + f(x,u) = 0 on the operator's grid. Zero when lambda_p is
// certified >= 0; otherwise iterates up from theta phi_p and down from the
// super-solution and demands that both meet.
StationarySolution solve_stationary_ball(const DiscreteOperator& op, const Reaction& reaction,
                                         const SolverOptions& opts = {},
                                         const std::optional<GridFunction>& super = std::nullopt,
                                         const std::optional<GridFunction>& warm_sub = std::nullopt);

// Ball exhaustion over an increasing R schedule with warm starts.
StationarySolution solve_stationary_wholespace(
    const std::function<DiscreteOperator(double)>& make, const GrowthProfile& growth,
    const std::vector<double>& schedule, double change_tol, const SolverOptions& opts = {});

struct UniquenessReport {
  double defect = 0.0;  // D = sum w v u [f(u)/u - f(v)/v]
  double sup_difference = 0.0;
  std::size_t skipped = 0;
};

UniquenessReport verify_uniqueness(const Grid& grid, const GridFunction& a,
                                   const Reaction& reaction, const GridFunction& u,
                                   const GridFunction& v, double floor = 1e-300);

}  // namespace nichewave
