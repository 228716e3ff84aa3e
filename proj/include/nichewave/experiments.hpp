#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nichewave/growth.hpp"
#include "nichewave/kernel.hpp"
#include "nichewave/nonlocal_op.hpp"
#include "nichewave/spectral.hpp"
#include "nichewave/stationary.hpp"

namespace nichewave {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Everything needed to assemble one discrete problem. The grid follows epsilon:
// with h0 > 0 the spacing is min(spacing, eps h0) (rounded so that R/h is an
// integer), with radius_per_eps > 0 the radius is max(radius, eps radius_per_eps).
struct ProblemSpec {
  Kernel kernel = Kernel::tent(1);
  GrowthProfile growth = GrowthProfile::bump(2.0, 1.0, -1.0);
  double epsilon = 1.0;
  double m = 0.0;
  double alpha0 = 1.0;
  double radius = 6.0;
  double spacing = 0.05;
  Topology topology = Topology::ball_truncated;
  double h0 = 0.0;
  double radius_per_eps = 0.0;
  OperatorOptions op_options;
  SolverOptions solver;
  std::size_t workers = 0;  // 0: worker_count()

  int dimension() const { return kernel.dimension(); }
  // Copy with epsilon replaced and the coupling rules applied to radius/spacing.
  ProblemSpec at(double eps) const;
  ScaledKernel scaled_kernel() const;
  Grid grid() const;
  DiscreteOperator op() const;
  // Sigma of the local limit: alpha0 D_2(J) / (2N).
  double local_sigma() const;
};

enum class LimitTarget { none, a_minus_one, a_plus, local_kpp };
enum class LambdaTarget { none, one_minus_sup_a, minus_sup_a, lambda1_fd };

std::string_view to_string(LimitTarget target);
std::string_view to_string(LambdaTarget target);
LimitTarget parse_limit_target(std::string_view name);
LambdaTarget parse_lambda_target(std::string_view name);

struct SweepEntry {
  double epsilon = 0.0;
  bool skipped = false;
  std::string reason;
  SpectralEstimate lambda;
  StationarySolution solution;
  double u_sup = 0.0;
  double u_l2 = 0.0;
  double u_l1 = 0.0;
  double energy = 0.0;
  double err_sup = kNaN;  // sup distance to the profile target
  double err_l2 = kNaN;   // weighted l2 distance (core ball for local_kpp)
  double err_target = kNaN;
  double lambda_target = kNaN;
  double lambda_error = kNaN;
};

struct SweepResult {
  double m = 0.0;
  std::vector<double> epsilons;
  std::vector<SweepEntry> entries;
  LimitTarget target = LimitTarget::none;
  LambdaTarget lambda_target = LambdaTarget::none;
  std::string target_name;
  int straddling = 0;
  // epsilons where (lambda upper < 0) and (sup u > 10 tol) disagree
  std::vector<double> incoherent;
};

struct SweepOptions {
  LimitTarget target = LimitTarget::none;
  LambdaTarget lambda_target = LambdaTarget::none;
  // core ball for the local_kpp distance; <= 0 uses the growth core radius
  double core_radius = 0.0;
  // spacing of the FD reference grid; <= 0 uses half the finest sweep spacing
  double reference_spacing = 0.0;
  bool keep_solutions = true;
};

// Solves the problem at every epsilon (ascending) on coupled grids. Entries run
// concurrently and are merged by index.
SweepResult epsilon_sweep(const ProblemSpec& spec, double m, std::vector<double> epsilons,
                          const SweepOptions& opts = {});

struct LocalKppSolution {
  GridFunction values;
  SpectralEstimate lambda1;
  double residual = 0.0;
  int iterations = 0;
  bool zero = false;
};

// Sup norm of sigma Lap_h v + f(x, v) with antisymmetric ghosts.
double local_kpp_residual(const Grid& grid, const GridFunction& a, double sigma,
                          const Reaction& reaction, const GridFunction& v);

// sigma v'' + f(x, v) = 0 on the grid with Dirichlet ghosts. Zero when lambda_1
// is certified >= 0; otherwise implicit monotone iteration
// (kappa + H) v_{k+1} = kappa v_k + f(x, v_k), kappa >= Lip f, from both
// theta phi_1 and sup S.
LocalKppSolution local_kpp_solve_fd(const Grid& grid, const GridFunction& a, double sigma,
                                    const Reaction& reaction = {}, double tol = 1e-10,
                                    int max_iterations = 200000);

struct ConvergenceReport {
  double m = 0.0;
  bool towards_zero = false;
  SweepResult sweep;
  std::vector<double> errors;         // err_target per entry
  std::vector<double> lambda_errors;  // |lambda - target| per entry
  bool error_monotone = false;        // strict decrease over the last three entries
  bool lambda_monotone = false;
  double error_rate = kNaN;  // log-log slope over the finite entries
  double lambda_rate = kNaN;
  std::vector<std::string> findings;
};

// Picks the target for (m, direction) and tabulates the distances.
//   eps -> inf, m = 0        (a - alpha0)^+ in sup norm,  1 - sup a
//   eps -> inf, 0 < m <= 2   a^+ in l2,                   -sup a
//   eps -> 0,   m < 2        a^+ in l2,                   -sup a
//   eps -> 0,   m = 2        FD v on the core ball,       lambda_1 FD
ConvergenceReport asymptotic_limit_check(const ProblemSpec& spec, double m, bool towards_zero,
                                         std::vector<double> epsilons);

struct EpsStarResult {
  bool infinite = false;
  bool found = false;
  double eps_star = kNaN;
  double lower = kNaN;  // last eps with certified lambda_p < 0
  double upper = kNaN;  // first eps with certified lambda_p >= 0
  double grid_max_excess = 0.0;  // grid max of (a - alpha0)^+
  std::string warning;
  std::string report;
  int evaluations = 0;
};

// Certified sign of lambda_p at one epsilon: -1, +1, or 0 if the bracket still
// straddles zero after refinement.
int certified_sign(const ProblemSpec& spec, double eps, SpectralEstimate* out = nullptr);

EpsStarResult find_eps_star(const ProblemSpec& spec, double eps_lo, double eps_hi,
                            double tol = 1e-3);

struct AuditItem {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double bound = 0.0;
  double margin = 0.0;  // bound - value (positive means slack)
};

struct AuditReport {
  double epsilon = 0.0;
  double m = 0.0;
  double energy = 0.0;
  std::vector<AuditItem> items;
  bool all_passed() const;
  const AuditItem* find(std::string_view name) const;
};

// 1/2 sum_ij w_i w_j J_eps(x_i - x_j) (u_i - u_j)^2 with the normalized stencil.
double dirichlet_energy(const DiscreteOperator& op, const GridFunction& u);

AuditReport apriori_estimate_audit(const DiscreteOperator& op, const GrowthProfile& growth,
                                   const GridFunction& u, const SpectralEstimate& lambda,
                                   double tol);

// Least-squares slope of log energy against log eps over the positive entries.
double energy_slope(const SweepResult& sweep);

struct InvasionEntry {
  double eps1 = 0.0;
  double eps2 = 0.0;
  SpectralEstimate lambda;
  bool skipped = false;
  std::string reason;
  std::string_view verdict() const;  // invade, resist, neutral, skipped
};

struct InvasionMatrix {
  double m = 0.0;
  std::vector<double> residents;
  std::vector<double> mutants;
  std::vector<GridFunction> equilibria;
  std::vector<bool> resident_extinct;
  std::vector<InvasionEntry> entries;  // row-major: resident index, then mutant
  Grid grid;
  const InvasionEntry& at(std::size_t i, std::size_t j) const {
    return entries[i * mutants.size() + j];
  }
};

// lambda_p(M_{eps2,m} + a - u*) for a given resident equilibrium on the spec grid.
SpectralEstimate invasion_fitness(const ProblemSpec& spec, double eps2,
                                  const GridFunction& resident);
// Resident solved at eps1 on the spec grid, then the mutant bracket.
SpectralEstimate invasion_fitness(const ProblemSpec& spec, double eps1, double eps2);

// All residents and mutants share the grid resolving the smallest epsilon.
InvasionMatrix invasion_matrix(const ProblemSpec& spec, const std::vector<double>& residents,
                               const std::vector<double>& mutants);

struct FatTailResult {
  Verdict verdict = Verdict::indeterminate;
  ValidationReport validation;
  RExtrapolation extrapolation;
  double truncation_error = 0.0;
  // rigorous lower bound for lambda_p(M + a): max of -sup a and the extrapolated lower
  double lower = kNaN;
  // upper bound for lim_R lambda_p(L_R + a): last bracket upper plus truncation
  double upper = kNaN;
  std::string evidence;
};

// Persistence/extinction verdict for non-compact kernels over an increasing R schedule.
FatTailResult fat_tail_verdict(const ProblemSpec& spec, const std::vector<double>& schedule,
                               double change_tol = 1e-4);

}  // namespace nichewave
