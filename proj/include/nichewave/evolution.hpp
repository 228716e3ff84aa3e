#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "nichewave/growth.hpp"
#include "nichewave/nonlocal_op.hpp"
#include "nichewave/spectral.hpp"

namespace nichewave {

enum class MonotoneFlag { increasing, decreasing, neither };
enum class LongTimeVerdict { extinction, persistence_converged, undecided };

std::string_view to_string(MonotoneFlag flag);
std::string_view to_string(LongTimeVerdict verdict);

struct EvolutionOptions {
  double horizon = 100.0;
  std::optional<double> dt;  // auto: half the stability bound
  double stride = 1.0;       // trace sampling interval
  std::optional<GridFunction> reference;  // stationary state for the distance columns
  double slack = 1e-12;      // per-step tolerance for the monotone flag
};

struct EvolutionTrace {
  std::vector<double> times;
  std::vector<double> sup_norm;
  std::vector<double> dist_sup;  // NaN without a reference
  std::vector<double> dist_l1;
  std::vector<double> mass;
  MonotoneFlag monotone_flag = MonotoneFlag::neither;
  bool non_decreasing = false;  // both hold for a stationary run
  bool non_increasing = false;
  GridFunction final_state;
  double dt = 0.0;
  long steps = 0;
};

// Largest explicit Euler step keeping the one-step map order preserving:
// 1 / (rate + L_f), L_f = sup |d_s f| over [0, max(sup u0, sup S)].
double stability_bound(const DiscreteOperator& op, const Reaction& reaction,
                       const GridFunction& u0);

EvolutionTrace evolve(const DiscreteOperator& op, const Reaction& reaction, GridFunction u0,
                      const EvolutionOptions& opts = {});

enum class ComparisonKind { sub, super };

// Runs from a verified sub- (super-) solution and requires u(t) to be
// non-decreasing (non-increasing) step by step.
MonotoneFlag comparison_monotonicity_test(const DiscreteOperator& op, const Reaction& reaction,
                                          const GridFunction& u0, ComparisonKind kind,
                                          double horizon, double tol = 1e-10);

struct LongTimeReport {
  LongTimeVerdict verdict = LongTimeVerdict::undecided;
  EvolutionTrace trace;
  double final_sup = 0.0;
  double final_dist_sup = 0.0;
  double final_dist_l1 = 0.0;
};

LongTimeReport long_time_verdict(const DiscreteOperator& op, const Reaction& reaction,
                                 const SpectralEstimate& lambda,
                                 const std::optional<GridFunction>& stationary,
                                 const GridFunction& u0, double horizon, double tol,
                                 const EvolutionOptions& base = {});

}  // namespace nichewave
