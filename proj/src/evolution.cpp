#include "nichewave/evolution.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "nichewave/error.hpp"

namespace nichewave {

std::string_view to_string(MonotoneFlag flag) {
  switch (flag) {
    case MonotoneFlag::increasing:
      return "increasing";
    case MonotoneFlag::decreasing:
      return "decreasing";
    case MonotoneFlag::neither:
      return "neither";
  }
  return "unknown";
}

std::string_view to_string(LongTimeVerdict verdict) {
  switch (verdict) {
    case LongTimeVerdict::extinction:
      return "extinction";
    case LongTimeVerdict::persistence_converged:
      return "persistence-converged";
    case LongTimeVerdict::undecided:
      return "undecided";
  }
  return "unknown";
}

double stability_bound(const DiscreteOperator& op, const Reaction& reaction,
                       const GridFunction& u0) {
  const double upper = std::max(u0.maxCoeff(), sup_saturation(reaction, op.a()));
  return 1.0 / (op.rate() + reaction_lipschitz(reaction, op.a(), upper));
}

EvolutionTrace evolve(const DiscreteOperator& op, const Reaction& reaction, GridFunction u,
                      const EvolutionOptions& opts) {
  if (static_cast<std::size_t>(u.size()) != op.size()) {
    throw DimensionMismatch("initial data does not match the grid");
  }
  if (!(u.minCoeff() >= 0.0) || !u.allFinite()) {
    throw InvalidArgument("initial data must be finite and nonnegative");
  }
  const double bound = stability_bound(op, reaction, u);
  double dt = 0.5 * bound;
  if (opts.dt) {
    if (!(*opts.dt > 0.0) || *opts.dt > bound) {
      throw StabilityBoundExceeded(
          fmt::format("dt = {} exceeds the stability bound {:.6g}", *opts.dt, bound), bound);
    }
    dt = *opts.dt;
  }
  const Grid& g = op.grid();
  const GridFunction& a = op.a();

  EvolutionTrace trace;
  trace.dt = dt;
  auto record = [&](double t) {
    trace.times.push_back(t);
    trace.sup_norm.push_back(u.cwiseAbs().maxCoeff());
    trace.mass.push_back(g.norm_l1(u));
    if (opts.reference) {
      const GridFunction d = u - *opts.reference;
      trace.dist_sup.push_back(d.cwiseAbs().maxCoeff());
      trace.dist_l1.push_back(g.norm_l1(d));
    } else {
      trace.dist_sup.push_back(std::numeric_limits<double>::quiet_NaN());
      trace.dist_l1.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  };

  const long steps = static_cast<long>(std::ceil(opts.horizon / dt - 1e-9));
  const long every = std::max(1L, static_cast<long>(std::llround(opts.stride / dt)));
  bool up = true, down = true;
  record(0.0);
  for (long k = 1; k <= steps; ++k) {
    const double step = std::min(dt, opts.horizon - (k - 1) * dt);
    GridFunction F = op.apply(u, false);
    for (Eigen::Index i = 0; i < u.size(); ++i) F[i] += reaction.f(a[i], u[i]);
    const GridFunction next = (u + step * F).cwiseMax(0.0);
    if (!next.allFinite()) throw NumericalFailure(fmt::format("non-finite state at step {}", k));
    const double inc = (next - u).minCoeff();
    const double dec = (next - u).maxCoeff();
    if (inc < -opts.slack) up = false;
    if (dec > opts.slack) down = false;
    u = next;
    if (k % every == 0 || k == steps) record(k == steps ? opts.horizon : k * dt);
  }
  trace.steps = steps;
  trace.non_decreasing = up;
  trace.non_increasing = down;
  trace.monotone_flag = up ? MonotoneFlag::increasing
                           : (down ? MonotoneFlag::decreasing : MonotoneFlag::neither);
  trace.final_state = std::move(u);
  return trace;
}

MonotoneFlag comparison_monotonicity_test(const DiscreteOperator& op, const Reaction& reaction,
                                          const GridFunction& u0, ComparisonKind kind,
                                          double horizon, double tol) {
  GridFunction F = op.apply(u0, false, ConvolutionPath::direct);
  for (Eigen::Index i = 0; i < u0.size(); ++i) F[i] += reaction.f(op.a()[i], u0[i]);
  if (kind == ComparisonKind::sub && F.minCoeff() < -tol) {
    throw InvalidArgument(fmt::format("initial data is not a sub-solution (defect {:.3g})",
                                      -F.minCoeff()));
  }
  if (kind == ComparisonKind::super && F.maxCoeff() > tol) {
    throw InvalidArgument(fmt::format("initial data is not a super-solution (defect {:.3g})",
                                      F.maxCoeff()));
  }
  EvolutionOptions opts;
  opts.horizon = horizon;
  // the sub/super defect may be up to tol; allow that much drift per step
  opts.slack = 1e-12 + tol * 0.5 * stability_bound(op, reaction, u0);
  auto trace = evolve(op, reaction, u0, opts);
  const bool ok = kind == ComparisonKind::sub ? trace.non_decreasing : trace.non_increasing;
  if (!ok) {
    throw MonotonicityViolation(fmt::format("solution from a {}-solution is not monotone in time",
                                            kind == ComparisonKind::sub ? "sub" : "super"));
  }
  return kind == ComparisonKind::sub ? MonotoneFlag::increasing : MonotoneFlag::decreasing;
}

LongTimeReport long_time_verdict(const DiscreteOperator& op, const Reaction& reaction,
                                 const SpectralEstimate& lambda,
                                 const std::optional<GridFunction>& stationary,
                                 const GridFunction& u0, double horizon, double tol,
                                 const EvolutionOptions& base) {
  EvolutionOptions opts = base;
  opts.horizon = horizon;
  if (stationary) opts.reference = *stationary;
  LongTimeReport rep;
  rep.trace = evolve(op, reaction, u0, opts);
  const auto& tr = rep.trace;
  rep.final_sup = tr.sup_norm.back();
  rep.final_dist_sup = tr.dist_sup.back();
  rep.final_dist_l1 = tr.dist_l1.back();
  if (lambda.straddles_zero()) return rep;

  // eventually decreasing: the last quarter of the sup-norm series does not rise
  bool decreasing = true;
  const std::size_t from = tr.sup_norm.size() - std::max<std::size_t>(2, tr.sup_norm.size() / 4);
  for (std::size_t k = from + 1; k < tr.sup_norm.size(); ++k) {
    if (tr.sup_norm[k] > tr.sup_norm[k - 1]) decreasing = false;
  }
  const bool trivial_target = !stationary || stationary->cwiseAbs().maxCoeff() <= tol;
  if (rep.final_sup <= tol && decreasing && trivial_target) {
    rep.verdict = LongTimeVerdict::extinction;
  } else if (stationary && rep.final_dist_sup <= tol && rep.final_dist_l1 <= tol &&
             !trivial_target) {
    rep.verdict = LongTimeVerdict::persistence_converged;
  }
  return rep;
}

}  // namespace nichewave
