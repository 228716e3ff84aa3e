#include "nichewave/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include "nichewave/error.hpp"
#include "nichewave/workers.hpp"

namespace nichewave {

namespace {

double grid_max(const GridFunction& v) { return v.size() ? v.maxCoeff() : 0.0; }

GridFunction saturation_of(const Reaction& reaction, const GridFunction& a) {
  return a.unaryExpr([&](double x) { return reaction.saturation(x); });
}

// Least-squares slope of log y against log x over the finite positive pairs.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0 && y[i] > 0 && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.size() < 2) return kNaN;
  const double n = double(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxx > 0 ? sxy / sxx : kNaN;
}

bool strictly_decreasing_tail(const std::vector<double>& v, std::size_t count) {
  if (v.size() < count) return false;
  for (std::size_t i = v.size() - count; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) return false;
    if (i > v.size() - count && !(v[i] < v[i - 1])) return false;
  }
  return true;
}

std::size_t pool_size(const ProblemSpec& spec) {
  return worker_count(spec.workers ? std::optional<std::size_t>(spec.workers) : std::nullopt);
}

struct LocalReference {
  Grid grid;
  LocalKppSolution solution;
};

}  // namespace

// ---------------------------------------------------------------------------
// ProblemSpec

ProblemSpec ProblemSpec::at(double eps) const {
  if (!(eps > 0)) throw InvalidArgument("epsilon must be positive");
  ProblemSpec s = *this;
  s.epsilon = eps;
  if (radius_per_eps > 0) s.radius = std::max(radius, eps * radius_per_eps);
  if (h0 > 0) {
    const double target = std::min(spacing, eps * h0);
    s.spacing = s.radius / std::ceil(s.radius / target - 1e-9);
  }
  return s;
}

ScaledKernel ProblemSpec::scaled_kernel() const {
  return rescale_kernel(kernel, epsilon, m, alpha0);
}

Grid ProblemSpec::grid() const { return build_grid(dimension(), radius, spacing, topology); }

DiscreteOperator ProblemSpec::op() const {
  return DiscreteOperator(grid(), scaled_kernel(), growth, op_options);
}

double ProblemSpec::local_sigma() const {
  return alpha0 * kernel_moment(kernel, 2.0).value / (2.0 * dimension());
}

std::string_view to_string(LimitTarget target) {
  switch (target) {
    case LimitTarget::a_minus_one: return "(a-1)^+";
    case LimitTarget::a_plus: return "a^+";
    case LimitTarget::local_kpp: return "v_fd";
    case LimitTarget::none: break;
  }
  return "none";
}

std::string_view to_string(LambdaTarget target) {
  switch (target) {
    case LambdaTarget::one_minus_sup_a: return "1-sup_a";
    case LambdaTarget::minus_sup_a: return "-sup_a";
    case LambdaTarget::lambda1_fd: return "lambda1_fd";
    case LambdaTarget::none: break;
  }
  return "none";
}

LimitTarget parse_limit_target(std::string_view name) {
  for (auto t : {LimitTarget::none, LimitTarget::a_minus_one, LimitTarget::a_plus,
                 LimitTarget::local_kpp}) {
    if (name == to_string(t)) return t;
  }
  if (name == "a_minus_one") return LimitTarget::a_minus_one;
  if (name == "a_plus") return LimitTarget::a_plus;
  if (name == "local_kpp") return LimitTarget::local_kpp;
  throw InvalidArgument(fmt::format("unknown limit target '{}'", name));
}

LambdaTarget parse_lambda_target(std::string_view name) {
  for (auto t : {LambdaTarget::none, LambdaTarget::one_minus_sup_a, LambdaTarget::minus_sup_a,
                 LambdaTarget::lambda1_fd}) {
    if (name == to_string(t)) return t;
  }
  throw InvalidArgument(fmt::format("unknown lambda target '{}'", name));
}

// ---------------------------------------------------------------------------
// local KPP reference

double local_kpp_residual(const Grid& grid, const GridFunction& a, double sigma,
                          const Reaction& reaction, const GridFunction& v) {
  const Eigen::SparseMatrix<double> H = fd_neg_laplacian(grid, sigma);
  GridFunction r = -(H * v);
  for (Eigen::Index i = 0; i < v.size(); ++i) r[i] += reaction.f(a[i], v[i]);
  return r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
}

LocalKppSolution local_kpp_solve_fd(const Grid& grid, const GridFunction& a, double sigma,
                                    const Reaction& reaction, double tol, int max_iterations) {
  if (a.size() != static_cast<Eigen::Index>(grid.size())) {
    throw DimensionMismatch("growth samples do not match the grid");
  }
  LocalKppSolution out;
  const auto n = a.size();
  out.lambda1 = local_lambda1_fd(grid, a, sigma, std::min(1e-11, tol));
  out.values = GridFunction::Zero(n);
  if (out.lambda1.certified_nonnegative()) {
    out.zero = true;
    return out;
  }
  if (out.lambda1.straddles_zero()) {
    throw NonConvergence("lambda_1 bracket straddles zero", out.lambda1.lower,
                         out.lambda1.upper, out.lambda1.iterations);
  }

  const Eigen::SparseMatrix<double> H = fd_neg_laplacian(grid, sigma);
  const double S = sup_saturation(reaction, a);
  const double kappa = std::max(reaction_lipschitz(reaction, a, S), 1e-12);
  Eigen::SparseMatrix<double> K = H;
  for (Eigen::Index i = 0; i < n; ++i) K.coeffRef(i, i) += kappa;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(K);
  if (ldlt.info() != Eigen::Success) throw NumericalFailure("FD factorization failed");

  auto residual = [&](const GridFunction& v) {
    GridFunction r = -(H * v);
    for (Eigen::Index i = 0; i < n; ++i) r[i] += reaction.f(a[i], v[i]);
    return r;
  };
  auto step = [&](const GridFunction& v) {
    GridFunction rhs = kappa * v;
    for (Eigen::Index i = 0; i < n; ++i) rhs[i] += reaction.f(a[i], v[i]);
    return GridFunction(ldlt.solve(rhs).cwiseMax(0.0));
  };

  // theta phi_1 is a sub-solution once theta phi_1 <= -lambda_1 (logistic); halve until checked
  const GridFunction& phi = out.lambda1.eigenvector;
  double theta = -out.lambda1.upper / 2.0;
  GridFunction lo;
  for (int k = 0;; ++k) {
    lo = theta * phi.cwiseMax(0.0);
    if (residual(lo).minCoeff() >= -1e-9 * theta) break;
    theta *= 0.5;
    if (k > 60) throw NumericalFailure("no theta makes theta phi_1 a sub-solution");
  }
  GridFunction hi = GridFunction::Constant(n, S);

  double r_lo = 0.0, r_hi = 0.0;
  int it = 0;
  for (; it < max_iterations; ++it) {
    r_lo = residual(lo).cwiseAbs().maxCoeff();
    r_hi = residual(hi).cwiseAbs().maxCoeff();
    if (r_lo <= tol && r_hi <= tol) break;
    lo = step(lo);
    hi = step(hi);
  }
  out.iterations = it;
  if (it == max_iterations) {
    throw NonConvergence("local KPP iteration did not converge", lo.minCoeff(), hi.maxCoeff(), it);
  }
  const double gap = (hi - lo).cwiseAbs().maxCoeff();
  if (gap > std::max(1e-6, 1e3 * tol)) {
    throw UniquenessViolation(fmt::format("local KPP branches stopped {:.3g} apart", gap));
  }
  out.values = r_lo <= r_hi ? lo : hi;
  out.residual = std::min(r_lo, r_hi);
  return out;
}

// ---------------------------------------------------------------------------
// energy and audit

double dirichlet_energy(const DiscreteOperator& op, const GridFunction& u) {
  const Grid& g = op.grid();
  const GridFunction Su = op.convolve(u, ConvolutionPath::direct);
  const GridFunction Su2 = op.convolve(u.cwiseProduct(u), ConvolutionPath::direct);
  const GridFunction k = op.row_mass();
  double e = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto I = static_cast<Eigen::Index>(i);
    e += g.weights[i] * (u[I] * u[I] * k[I] - 2.0 * u[I] * Su[I] + Su2[I]);
  }
  return std::max(0.5 * e, 0.0);
}

bool AuditReport::all_passed() const {
  return std::all_of(items.begin(), items.end(), [](const AuditItem& i) { return i.passed; });
}

const AuditItem* AuditReport::find(std::string_view name) const {
  for (const auto& i : items) {
    if (i.name == name) return &i;
  }
  return nullptr;
}

AuditReport apriori_estimate_audit(const DiscreteOperator& op, const GrowthProfile& growth,
                                   const GridFunction& u, const SpectralEstimate& lambda,
                                   double tol) {
  const Grid& g = op.grid();
  const GridFunction& a = op.a();
  const Reaction& reaction = growth.reaction();
  AuditReport rep;
  rep.epsilon = op.kernel().epsilon();
  rep.m = op.kernel().cost_exponent();
  rep.energy = dirichlet_energy(op, u);

  const double M = a.cwiseAbs().maxCoeff();
  const double int_a_plus = g.integrate(a.cwiseMax(0.0));
  const double C1 = std::sqrt(M * int_a_plus);

  {
    AuditItem it{"l2", false, g.norm_l2(u), C1, 0.0};
    it.margin = it.bound - it.value;
    it.passed = it.value <= it.bound + tol;
    rep.items.push_back(it);
  }
  {
    // rate E <= M |u|_2^2 gives E <= C2 eps^m / alpha0 with C2 = 4 C1 M
    AuditItem it{"energy", false, rep.energy, 4.0 * C1 * M / op.rate(), 0.0};
    it.margin = it.bound - it.value;
    it.passed = it.value <= it.bound + tol;
    rep.items.push_back(it);
  }
  if (lambda.certified_negative()) {
    double sup_niche = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      if (a[i] > 0) sup_niche = std::max(sup_niche, u[i]);
    }
    AuditItem it{"sup_niche", false, sup_niche, -lambda.upper / 2.0 - tol, 0.0};
    it.margin = it.value - it.bound;
    it.passed = it.margin >= 0.0;
    rep.items.push_back(it);
  }
  {
    const GridFunction floor = saturation_of(reaction, (a.array() - op.rate()).matrix());
    const double worst = (u - floor).minCoeff();
    AuditItem it{"lower_envelope", false, worst, -tol, 0.0};
    it.margin = it.value - it.bound;
    it.passed = it.margin >= 0.0;
    rep.items.push_back(it);
  }
  return rep;
}

double energy_slope(const SweepResult& sweep) {
  std::vector<double> x, y;
  for (const auto& e : sweep.entries) {
    if (e.skipped || e.solution.verdict != Verdict::persistence) continue;
    x.push_back(e.epsilon);
    y.push_back(e.energy);
  }
  return loglog_slope(x, y);
}

// ---------------------------------------------------------------------------
// sweeps

SweepResult epsilon_sweep(const ProblemSpec& spec, double m, std::vector<double> epsilons,
                          const SweepOptions& opts) {
  std::sort(epsilons.begin(), epsilons.end());
  if (std::adjacent_find(epsilons.begin(), epsilons.end()) != epsilons.end()) {
    throw InvalidArgument("sweep epsilons must be distinct");
  }
  if (epsilons.empty()) throw InvalidArgument("sweep needs at least one epsilon");
  ProblemSpec base = spec;
  base.m = m;

  SweepResult res;
  res.m = m;
  res.epsilons = epsilons;
  res.target = opts.target;
  res.lambda_target = opts.lambda_target;
  res.target_name = std::string(to_string(opts.target));
  res.entries.resize(epsilons.size());
  const Reaction& reaction = spec.growth.reaction();

  // local-limit reference on one fine grid shared by every entry
  std::optional<LocalReference> ref;
  if (opts.target == LimitTarget::local_kpp || opts.lambda_target == LambdaTarget::lambda1_fd) {
    double h_ref = opts.reference_spacing;
    double R = 0.0;
    if (h_ref <= 0) h_ref = 0.0;
    double finest = std::numeric_limits<double>::infinity();
    for (double e : epsilons) {
      const ProblemSpec s = base.at(e);
      finest = std::min(finest, s.spacing);
      R = std::max(R, s.radius);
    }
    if (h_ref <= 0) h_ref = spec.dimension() == 1 ? finest / 2.0 : finest;
    LocalReference r;
    r.grid = build_grid(spec.dimension(), R, R / std::ceil(R / h_ref - 1e-9), Topology::ball_truncated);
    const GridFunction a = spec.growth.sample(r.grid);
    r.solution = local_kpp_solve_fd(r.grid, a, base.local_sigma(), reaction,
                                    std::max(spec.solver.tol, 1e-10));
    ref = std::move(r);
  }
  const double core = opts.core_radius > 0 ? opts.core_radius : spec.growth.core_radius();

  auto job = [&](std::size_t idx) {
    SweepEntry& e = res.entries[idx];
    e.epsilon = epsilons[idx];
    const ProblemSpec s = base.at(e.epsilon);
    const double support = s.epsilon * s.kernel.support_radius();
    if (support < 2.0 * s.spacing) {
      e.skipped = true;
      e.reason = fmt::format("kernel support {:.3g} below two cells (h = {:.3g})", support, s.spacing);
      return;
    }
    try {
      const DiscreteOperator op = s.op();
      e.solution = solve_stationary_ball(op, reaction, s.solver);
      e.lambda = e.solution.lambda_p_used;
      const Grid& g = op.grid();
      const GridFunction& u = e.solution.values;
      e.u_sup = u.size() ? u.cwiseAbs().maxCoeff() : 0.0;
      e.u_l2 = g.norm_l2(u);
      e.u_l1 = g.norm_l1(u);
      e.energy = dirichlet_energy(op, u);

      const GridFunction& a = op.a();
      std::optional<GridFunction> target;
      switch (opts.target) {
        case LimitTarget::a_minus_one:
          target = saturation_of(reaction, (a.array() - s.alpha0).matrix());
          break;
        case LimitTarget::a_plus:
          target = saturation_of(reaction, a);
          break;
        case LimitTarget::local_kpp:
          target = transfer(ref->grid, ref->solution.values, g);
          break;
        case LimitTarget::none:
          break;
      }
      if (target) {
        const GridFunction d = u - *target;
        e.err_sup = d.cwiseAbs().maxCoeff();
        if (opts.target == LimitTarget::local_kpp) {
          double acc = 0.0;
          for (std::size_t i = 0; i < g.size(); ++i) {
            if (euclidean_norm(g.points[i], g.dimension) <= core) {
              acc += g.weights[i] * d[static_cast<Eigen::Index>(i)] * d[static_cast<Eigen::Index>(i)];
            }
          }
          e.err_l2 = std::sqrt(acc);
        } else {
          e.err_l2 = g.norm_l2(d);
        }
        e.err_target = opts.target == LimitTarget::a_minus_one ? e.err_sup : e.err_l2;
      }
      switch (opts.lambda_target) {
        case LambdaTarget::one_minus_sup_a: e.lambda_target = s.alpha0 - grid_max(a); break;
        case LambdaTarget::minus_sup_a: e.lambda_target = -grid_max(a); break;
        case LambdaTarget::lambda1_fd: e.lambda_target = ref->solution.lambda1.value; break;
        case LambdaTarget::none: break;
      }
      if (std::isfinite(e.lambda_target)) e.lambda_error = std::abs(e.lambda.value - e.lambda_target);
      if (!opts.keep_solutions) {
        e.solution.sub.resize(0);
        e.solution.super.resize(0);
        e.solution.attempt.resize(0);
        e.lambda.eigenvector.resize(0);
      }
    } catch (const UnderResolvedKernel& err) {
      e.skipped = true;
      e.reason = err.what();
    }
  };
  parallel_for(epsilons.size(), job, pool_size(spec));

  const double tol = spec.solver.tol;
  for (const auto& e : res.entries) {
    if (e.skipped) continue;
    if (e.lambda.straddles_zero()) {
      ++res.straddling;
      continue;
    }
    if (e.lambda.certified_negative() != (e.u_sup > 10.0 * tol)) res.incoherent.push_back(e.epsilon);
  }
  return res;
}

ConvergenceReport asymptotic_limit_check(const ProblemSpec& spec, double m, bool towards_zero,
                                         std::vector<double> epsilons) {
  SweepOptions opts;
  if (!towards_zero) {
    opts.target = m == 0.0 ? LimitTarget::a_minus_one : LimitTarget::a_plus;
    opts.lambda_target = m == 0.0 ? LambdaTarget::one_minus_sup_a : LambdaTarget::minus_sup_a;
  } else if (m < 2.0) {
    opts.target = LimitTarget::a_plus;
    opts.lambda_target = LambdaTarget::minus_sup_a;
  } else {
    opts.target = LimitTarget::local_kpp;
    opts.lambda_target = LambdaTarget::lambda1_fd;
  }
  ConvergenceReport rep;
  rep.m = m;
  rep.towards_zero = towards_zero;
  rep.sweep = epsilon_sweep(spec, m, std::move(epsilons), opts);

  // tabulate in the order of approach to the limit
  std::vector<std::size_t> order(rep.sweep.entries.size());
  std::iota(order.begin(), order.end(), 0);
  if (towards_zero) std::reverse(order.begin(), order.end());
  std::vector<double> eps;
  for (std::size_t i : order) {
    const auto& e = rep.sweep.entries[i];
    eps.push_back(e.epsilon);
    rep.errors.push_back(e.skipped ? kNaN : e.err_target);
    rep.lambda_errors.push_back(e.skipped ? kNaN : e.lambda_error);
    if (e.skipped) rep.findings.push_back(fmt::format("eps {:.6g} skipped: {}", e.epsilon, e.reason));
  }
  rep.error_monotone = strictly_decreasing_tail(rep.errors, 3);
  rep.lambda_monotone = strictly_decreasing_tail(rep.lambda_errors, 3);
  rep.error_rate = loglog_slope(eps, rep.errors);
  rep.lambda_rate = loglog_slope(eps, rep.lambda_errors);
  if (!rep.error_monotone) {
    rep.findings.push_back(
        "distance to the profile target is not strictly decreasing over the last three entries; "
        "refine h0 or enlarge R");
  }
  if (!rep.lambda_monotone) {
    rep.findings.push_back(
        "eigenvalue error is not strictly decreasing over the last three entries; "
        "refine h0 or enlarge R");
  }
  return rep;
}

// ---------------------------------------------------------------------------
// eps*

int certified_sign(const ProblemSpec& spec, double eps, SpectralEstimate* out) {
  const DiscreteOperator op = spec.at(eps).op();
  SpectralOptions so = spec.solver.spectral;
  SpectralEstimate lam = principal_eigenvalue(op, so);
  for (int refine = 0; refine < 3 && lam.straddles_zero(); ++refine) {
    so.tol /= 100.0;
    so.initial = lam.eigenvector;
    lam = principal_eigenvalue(op, so);
  }
  const int sign = lam.certified_negative() ? -1 : lam.certified_nonnegative() ? 1 : 0;
  if (out) *out = std::move(lam);
  return sign;
}

EpsStarResult find_eps_star(const ProblemSpec& spec, double eps_lo, double eps_hi, double tol) {
  if (spec.m != 0.0) throw InvalidArgument("eps* is defined for m = 0");
  if (!(eps_lo > 0 && eps_hi > eps_lo)) throw InvalidArgument("eps* bracket must be 0 < lo < hi");
  EpsStarResult r;
  const ProblemSpec at_lo = spec.at(eps_lo);
  const GridFunction a = spec.growth.sample(at_lo.grid());
  r.grid_max_excess = std::max(grid_max(a) - spec.alpha0, 0.0);
  if (r.grid_max_excess > 0) {
    r.infinite = true;
    r.report = "(a-1)^+ is positive on the grid: persistence for every eps";
    return r;
  }
  if (spec.growth.sup() > spec.alpha0) {
    r.warning = fmt::format(
        "sup a = {:.6g} exceeds {:.6g} but the grid misses it; eps* may be infinite",
        spec.growth.sup(), spec.alpha0);
  }
  const int s_lo = certified_sign(spec, eps_lo);
  const int s_hi = certified_sign(spec, eps_hi);
  r.evaluations = 2;
  if (s_lo != -1 || s_hi != 1) {
    r.report = fmt::format("no threshold in [{:.6g}, {:.6g}]: certified signs {} and {}", eps_lo,
                           eps_hi, s_lo, s_hi);
    return r;
  }
  double lo = eps_lo, hi = eps_hi;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const int s = certified_sign(spec, mid);
    ++r.evaluations;
    if (s < 0) {
      lo = mid;
    } else if (s > 0) {
      hi = mid;
    } else {
      // lambda_p vanishes to within the refined bracket: this is eps*
      lo = hi = mid;
      r.report = "bracket straddles zero after refinement at the threshold";
      break;
    }
  }
  r.found = true;
  r.lower = lo;
  r.upper = hi;
  r.eps_star = 0.5 * (lo + hi);
  if (r.report.empty()) r.report = fmt::format("eps* in [{:.8g}, {:.8g}]", lo, hi);
  return r;
}

// ---------------------------------------------------------------------------
// invasion fitness

std::string_view InvasionEntry::verdict() const {
  if (skipped) return "skipped";
  if (lambda.certified_negative()) return "invade";
  if (lambda.lower > 0.0) return "resist";
  return "neutral";
}

SpectralEstimate invasion_fitness(const ProblemSpec& spec, double eps2,
                                  const GridFunction& resident) {
  const Grid g = spec.grid();
  if (resident.size() != static_cast<Eigen::Index>(g.size())) {
    throw DimensionMismatch("resident equilibrium does not live on the spec grid");
  }
  const GridFunction a = spec.growth.sample(g) - resident;
  const DiscreteOperator op(g, rescale_kernel(spec.kernel, eps2, spec.m, spec.alpha0), a,
                            spec.op_options);
  return principal_eigenvalue(op, spec.solver.spectral);
}

SpectralEstimate invasion_fitness(const ProblemSpec& spec, double eps1, double eps2) {
  const Grid g = spec.grid();
  const DiscreteOperator resident(g, rescale_kernel(spec.kernel, eps1, spec.m, spec.alpha0),
                                  spec.growth, spec.op_options);
  const StationarySolution u = solve_stationary_ball(resident, spec.growth.reaction(), spec.solver);
  return invasion_fitness(spec, eps2, u.values);
}

InvasionMatrix invasion_matrix(const ProblemSpec& spec, const std::vector<double>& residents,
                               const std::vector<double>& mutants) {
  if (residents.empty() || mutants.empty()) throw InvalidArgument("empty strategy grid");
  double smallest = std::numeric_limits<double>::infinity(), largest = 0.0;
  for (const auto* list : {&residents, &mutants}) {
    for (double e : *list) {
      smallest = std::min(smallest, e);
      largest = std::max(largest, e);
    }
  }
  // spacing resolves the shortest range, radius follows the longest
  ProblemSpec common = spec.at(smallest);
  common.radius = spec.at(largest).radius;
  if (spec.h0 > 0) common.spacing = common.radius / std::ceil(common.radius / std::min(spec.spacing, smallest * spec.h0) - 1e-9);
  common.h0 = 0.0;
  common.radius_per_eps = 0.0;

  InvasionMatrix mat;
  mat.m = spec.m;
  mat.residents = residents;
  mat.mutants = mutants;
  mat.grid = common.grid();
  mat.equilibria.resize(residents.size());
  mat.resident_extinct.assign(residents.size(), false);
  std::vector<std::string> resident_error(residents.size());
  const std::size_t workers = pool_size(spec);

  parallel_for(residents.size(), [&](std::size_t i) {
    try {
      const DiscreteOperator op(mat.grid,
                                rescale_kernel(spec.kernel, residents[i], spec.m, spec.alpha0),
                                spec.growth, spec.op_options);
      const StationarySolution u = solve_stationary_ball(op, spec.growth.reaction(), spec.solver);
      mat.equilibria[i] = u.values;
      if (u.verdict != Verdict::persistence) mat.resident_extinct[i] = true;
    } catch (const UnderResolvedKernel& err) {
      resident_error[i] = err.what();
    }
  }, workers);

  mat.entries.resize(residents.size() * mutants.size());
  parallel_for(mat.entries.size(), [&](std::size_t k) {
    const std::size_t i = k / mutants.size(), j = k % mutants.size();
    InvasionEntry& e = mat.entries[k];
    e.eps1 = residents[i];
    e.eps2 = mutants[j];
    if (!resident_error[i].empty()) {
      e.skipped = true;
      e.reason = "resident: " + resident_error[i];
      return;
    }
    try {
      e.lambda = invasion_fitness(common, mutants[j], mat.equilibria[i]);
      e.lambda.eigenvector.resize(0);
    } catch (const UnderResolvedKernel& err) {
      e.skipped = true;
      e.reason = err.what();
    }
  }, workers);
  return mat;
}

// ---------------------------------------------------------------------------
// fat tails

FatTailResult fat_tail_verdict(const ProblemSpec& spec, const std::vector<double>& schedule,
                               double change_tol) {
  FatTailResult r;
  r.validation = validate_kernel(spec.kernel);
  if (!r.validation.passed("H5")) {
    throw InvalidKernel("fat-tail verdicts need a finite (N+1)-th kernel moment");
  }
  auto make = [&](double R) {
    ProblemSpec s = spec.at(spec.epsilon);
    s.radius = R;
    return s.op();
  };
  r.extrapolation = lambda_p_extrapolate_R(make, schedule, change_tol, spec.solver.spectral);
  r.truncation_error = make(schedule.back()).truncation_error();

  // whole space: the kernel has full mass everywhere, so lambda_p(M + a) >= -sup a
  r.lower = -spec.growth.sup();
  // lambda_p(L_R + a) decreases to its limit: the last certified upper bounds it
  r.upper = r.extrapolation.estimates.back().upper;
  if (r.lower > 0.0) {
    r.verdict = Verdict::extinction;
    r.evidence = fmt::format("lambda_p(M + a) >= -sup a = {:.6g} > 0", r.lower);
  } else if (r.upper < 0.0) {
    r.verdict = Verdict::persistence;
    r.evidence = fmt::format("lambda_p(L_R + a) <= {:.6g} < 0 at R = {:.6g}", r.upper,
                             schedule.back());
  } else {
    r.verdict = Verdict::indeterminate;
    r.evidence = fmt::format(
        "lower bound {:.6g} <= 0 <= upper bound {:.6g}: neither criterion applies", r.lower,
        r.upper);
  }
  return r;
}

}  // namespace nichewave
