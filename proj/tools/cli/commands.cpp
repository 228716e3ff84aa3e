#include "commands.hpp"

#include <fstream>
#include <ostream>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

#include "nichewave/error.hpp"
#include "nichewave/evolution.hpp"
#include "nichewave/experiments.hpp"

namespace nichewave::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string num(double v) { return fmt::format("{:.17g}", v); }

json num_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json bracket_json(const SpectralEstimate& e) {
  return {{"value", num_json(e.value)},
          {"lower", num_json(e.lower)},
          {"upper", num_json(e.upper)},
          {"method", std::string(to_string(e.method))},
          {"iterations", e.iterations}};
}

// One writer per artifact; rows are appended in order and flushed on close.
class Artifacts {
 public:
  Artifacts(const ExperimentConfig& cfg, Command cmd)
      : dir_(cfg.output), stem_(fmt::format("{}-{}", to_string(cmd), cfg.label)) {
    head_ = {{"schema", 1}, {"command", std::string(to_string(cmd))}, {"label", cfg.label},
             {"seed", cfg.seed}};
  }

  void csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    fs::create_directories(dir_);
    std::ofstream f(dir_ / (stem_ + ".csv"), std::ios::binary);
    write_row(f, header);
    for (const auto& r : rows) write_row(f, r);
    if (!f) throw NumericalFailure("cannot write " + (dir_ / (stem_ + ".csv")).string());
  }

  void json_summary(json body) {
    fs::create_directories(dir_);
    json doc = head_;
    for (auto& [k, v] : body.items()) doc[k] = v;
    std::ofstream f(dir_ / (stem_ + ".json"), std::ios::binary);
    f << doc.dump(2) << '\n';
    if (!f) throw NumericalFailure("cannot write " + (dir_ / (stem_ + ".json")).string());
  }

  void failure(const std::string& kind, const std::string& message) {
    json_summary({{"status", "failed"}, {"error", kind}, {"message", message}});
  }

 private:
  static void write_row(std::ofstream& f, const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << row[i];
    f << '\n';
  }

  fs::path dir_;
  std::string stem_;
  json head_;
};

std::vector<std::string> point_header(int dimension) {
  return dimension == 2 ? std::vector<std::string>{"x", "y"} : std::vector<std::string>{"x"};
}

std::vector<std::string> point_cells(const Grid& g, std::size_t i) {
  std::vector<std::string> cells{num(g.points[i][0])};
  if (g.dimension == 2) cells.push_back(num(g.points[i][1]));
  return cells;
}

int cmd_validate(const ExperimentConfig& cfg, Artifacts& art, std::ostream& out) {
  const ValidationReport rep = validate_kernel(cfg.problem.kernel);
  json checks = json::array();
  for (const auto& c : rep.checks) {
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  const bool usable = rep.passed("H1-nonnegative") && rep.passed("H1-symmetric") &&
                      rep.passed("H1-unit-mass") && rep.passed("H2");
  art.json_summary({{"status", usable ? "ok" : "rejected"},
                    {"kernel", std::string(to_string(cfg.problem.kernel.family()))},
                    {"compact_support", rep.compact_support},
                    {"mass", num_json(rep.mass)},
                    {"moment_n_plus_1", num_json(rep.moment_n_plus_1)},
                    {"checks", checks},
                    {"growth_sup", num_json(cfg.problem.growth.sup())},
                    {"growth_limsup", num_json(cfg.problem.growth.limsup())}});
  std::string failed;
  for (const auto& c : rep.checks) {
    if (!c.passed) failed += (failed.empty() ? "" : ",") + c.name;
  }
  out << fmt::format("validate: kernel {} {}\n", to_string(cfg.problem.kernel.family()),
                     failed.empty() ? "passes H1, H2, H5" : "fails " + failed);
  return usable ? exit_ok : exit_config;
}

int cmd_spectrum(const ExperimentConfig& cfg, Artifacts& art, std::ostream& out) {
  const DiscreteOperator op = cfg.problem.op();
  const SpectralEstimate p = principal_eigenvalue(op, cfg.problem.solver.spectral);
  const SpectralEstimate v = rayleigh_lambda_v(op, cfg.problem.solver.spectral);
  const Grid& g = op.grid();
  auto header = point_header(g.dimension);
  header.insert(header.end(), {"a", "phi_p"});
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto r = point_cells(g, i);
    r.push_back(num(op.a()[Eigen::Index(i)]));
    r.push_back(num(p.eigenvector[Eigen::Index(i)]));
    rows.push_back(std::move(r));
  }
  art.csv(header, rows);

  json body = {{"status", "ok"},
               {"value", num_json(p.value)},
               {"lower", num_json(p.lower)},
               {"upper", num_json(p.upper)},
               {"iterations", p.iterations},
               {"eigenfunction_flag", p.eigenfunction_flag},
               {"truncation_error", num_json(op.truncation_error())},
               {"lambda_v", bracket_json(v)},
               {"difference", num_json(std::abs(p.value - v.value))},
               {"grid_points", g.size()}};
  if (!cfg.exhaustion_radii.empty()) {
    auto make = [&](double R) {
      ProblemSpec s = cfg.problem;
      s.radius = R;
      return s.op();
    };
    const RExtrapolation ext = lambda_p_extrapolate_R(make, cfg.exhaustion_radii,
                                                      cfg.exhaustion_change_tol,
                                                      cfg.problem.solver.spectral);
    json per = json::array();
    for (std::size_t k = 0; k < ext.radii.size(); ++k) {
      json e = bracket_json(ext.estimates[k]);
      e["radius"] = ext.radii[k];
      per.push_back(e);
    }
    body["exhaustion"] = {{"value", num_json(ext.value)},
                          {"uncertainty", num_json(ext.uncertainty)},
                          {"lower", num_json(ext.lower)},
                          {"upper", num_json(ext.upper)},
                          {"converged", ext.converged},
                          {"radii", per}};
  }
  art.json_summary(body);
  const char* sign = p.certified_negative()      ? "persistence (lambda_p < 0)"
                     : p.certified_nonnegative() ? "extinction (lambda_p >= 0)"
                                                 : "indeterminate (bracket straddles 0)";
  out << fmt::format("spectrum: lambda_p in [{:.10g}, {:.10g}], lambda_v = {:.10g}: {}\n", p.lower,
                     p.upper, v.value, sign);
  return exit_ok;
}

int cmd_stationary(const ExperimentConfig& cfg, Artifacts& art, std::ostream& out) {
  const Reaction& reaction = cfg.problem.growth.reaction();
  StationarySolution sol;
  if (cfg.exhaustion_radii.empty()) {
    sol = solve_stationary_ball(cfg.problem.op(), reaction, cfg.problem.solver);
  } else {
    auto make = [&](double R) {
      ProblemSpec s = cfg.problem;
      s.radius = R;
      return s.op();
    };
    sol = solve_stationary_wholespace(make, cfg.problem.growth, cfg.exhaustion_radii,
                                      cfg.exhaustion_change_tol, cfg.problem.solver);
  }
  const Grid& g = sol.grid;
  auto header = point_header(g.dimension);
  header.insert(header.end(), {"a", "u"});
  std::vector<std::vector<std::string>> rows;
  const GridFunction& u = sol.verdict == Verdict::indeterminate ? sol.attempt : sol.values;
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto r = point_cells(g, i);
    r.push_back(num(sol.a[Eigen::Index(i)]));
    r.push_back(u.size() ? num(u[Eigen::Index(i)]) : "nan");
    rows.push_back(std::move(r));
  }
  art.csv(header, rows);
  json hist = json::array();
  for (const auto& [R, change] : sol.R_history) hist.push_back({{"radius", R}, {"change", num_json(change)}});
  art.json_summary({{"status", "ok"},
                    {"verdict", std::string(to_string(sol.verdict))},
                    {"lambda_p", bracket_json(sol.lambda_p_used)},
                    {"residual", num_json(sol.residual)},
                    {"iterations", sol.iterations},
                    {"sup", num_json(sol.values.size() ? sol.values.maxCoeff() : 0.0)},
                    {"l1", num_json(g.norm_l1(sol.values))},
                    {"l2", num_json(g.norm_l2(sol.values))},
                    {"R_history", hist}});
  out << fmt::format("stationary: {} (lambda_p in [{:.10g}, {:.10g}], residual {:.3g})\n",
                     to_string(sol.verdict), sol.lambda_p_used.lower, sol.lambda_p_used.upper,
                     sol.residual);
  return exit_ok;
}

GridFunction initial_data(const ExperimentConfig& cfg, const Grid& g) {
  const double c = cfg.initial_value;
  if (cfg.initial == "constant") return GridFunction::Constant(Eigen::Index(g.size()), c);
  if (cfg.initial == "bump") {
    return g.sample([&](const Point& x) {
      const double r = euclidean_norm(x, g.dimension);
      return c * std::exp(-r * r);
    });
  }
  if (cfg.initial == "random") {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> U(0.0, c);
    GridFunction u(Eigen::Index(g.size()));
    for (auto& x : u) x = U(rng);
    return u;
  }
  const Reaction& reaction = cfg.problem.growth.reaction();
  return c * cfg.problem.growth.sample(g).unaryExpr([&](double a) { return reaction.saturation(a); });
}

int cmd_evolve(const ExperimentConfig& cfg, Artifacts& art, std::ostream& out) {
  const DiscreteOperator op = cfg.problem.op();
  const Reaction& reaction = cfg.problem.growth.reaction();
  const StationarySolution st = solve_stationary_ball(op, reaction, cfg.problem.solver);
  std::optional<GridFunction> reference;
  if (st.verdict == Verdict::persistence) reference = st.values;
  if (st.verdict == Verdict::extinction) reference = st.values;  // zero
  EvolutionOptions base;
  base.dt = cfg.dt;
  base.stride = cfg.stride;
  const GridFunction u0 = initial_data(cfg, op.grid());
  const LongTimeReport rep =
      long_time_verdict(op, reaction, st.lambda_p_used, reference, u0, cfg.horizon, 1e-3, base);
  const EvolutionTrace& tr = rep.trace;
  std::vector<std::vector<std::string>> rows;
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    rows.push_back({num(tr.times[k]), num(tr.sup_norm[k]), num(tr.dist_sup[k]),
                    num(tr.dist_l1[k]), num(tr.mass[k])});
  }
  art.csv({"t", "sup", "dist_sup", "dist_l1", "mass"}, rows);
  art.json_summary({{"status", "ok"},
                    {"verdict", std::string(to_string(rep.verdict))},
                    {"stationary_verdict", std::string(to_string(st.verdict))},
                    {"lambda_p", bracket_json(st.lambda_p_used)},
                    {"dt", num_json(tr.dt)},
                    {"steps", tr.steps},
                    {"monotone", std::string(to_string(tr.monotone_flag))},
                    {"final_sup", num_json(rep.final_sup)},
                    {"final_dist_sup", num_json(rep.final_dist_sup)},
                    {"final_dist_l1", num_json(rep.final_dist_l1)}});
  out << fmt::format("evolve: {} at T = {:.6g} (sup {:.3g}, distance to stationary {:.3g})\n",
                     to_string(rep.verdict), cfg.horizon, rep.final_sup, rep.final_dist_sup);
  return exit_ok;
}

std::vector<std::string> sweep_row(double m, const SweepEntry& e, const std::string& target) {
  const bool ok = !e.skipped;
  return {num(m),
          num(e.epsilon),
          num(ok ? e.lambda.lower : kNaN),
          num(ok ? e.lambda.upper : kNaN),
          num(ok ? e.u_sup : kNaN),
          num(ok ? e.u_l2 : kNaN),
          num(ok ? e.u_l1 : kNaN),
          num(e.err_target),
          target};
}

const std::vector<std::string> kSweepHeader{"m",    "eps",  "lambda_lo",  "lambda_hi",  "u_sup",
                                            "u_l2", "u_l1", "err_target", "target_name"};

json sweep_json(const SweepResult& res) {
  json entries = json::array();
  for (const auto& e : res.entries) {
    json j = {{"eps", e.epsilon}, {"skipped", e.skipped}};
    if (e.skipped) {
      j["reason"] = e.reason;
    } else {
      j["verdict"] = std::string(to_string(e.solution.verdict));
      j["lambda_p"] = bracket_json(e.lambda);
      j["err_sup"] = num_json(e.err_sup);
      j["err_l2"] = num_json(e.err_l2);
      j["lambda_target"] = num_json(e.lambda_target);
      j["lambda_error"] = num_json(e.lambda_error);
      j["energy"] = num_json(e.energy);
    }
    entries.push_back(j);
  }
  return {{"m", res.m},
          {"target", res.target_name},
          {"lambda_target", std::string(to_string(res.lambda_target))},
          {"straddling", res.straddling},
          {"incoherent", res.incoherent},
          {"entries", entries}};
}

int cmd_sweep(const ExperimentConfig& cfg, Artifacts& art, std::ostream& out) {
  if (cfg.epsilons.empty()) throw ConfigError("sweep.epsilons", "sweep.epsilons: required");
  json body = {{"status", "ok"}};
  SweepResult res;
  std::string summary;
  if (cfg.limit != "none") {
    const ConvergenceReport rep =
        asymptotic_limit_check(cfg.problem, cfg.sweep_m, cfg.limit == "zero", cfg.epsilons);
    res = rep.sweep;
    body["limit"] = {{"direction", cfg.limit},
                     {"errors", rep.errors},
                     {"lambda_errors", rep.lambda_errors},
                     {"error_monotone", rep.error_monotone},
                     {"lambda_monotone", rep.lambda_monotone},
                     {"error_rate", num_json(rep.error_rate)},
                     {"lambda_rate", num_json(rep.lambda_rate)},
                     {"findings", rep.findings}};
    summary = fmt::format("error to {} {}, eigenvalue error {}", res.target_name,
                          rep.error_monotone ? "decreasing" : "NOT decreasing",
                          rep.lambda_monotone ? "decreasing" : "NOT decreasing");
  } else {
    SweepOptions so;
    so.target = cfg.target;
    so.lambda_target = cfg.lambda_target;
    so.core_radius = cfg.core_radius;
    so.reference_spacing = cfg.reference_spacing;
    so.keep_solutions = false;
    res = epsilon_sweep(cfg.problem, cfg.sweep_m, cfg.epsilons, so);
    int persist = 0;
    for (const auto& e : res.entries) persist += !e.skipped && e.solution.verdict == Verdict::persistence;
    summary = fmt::format("{} of {} entries persist", persist, res.entries.size());
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto& e : res.entries) rows.push_back(sweep_row(res.m, e, res.target_name));
  art.csv(kSweepHeader, rows);
  body["sweep"] = sweep_json(res);
  art.json_summary(body);
  out << fmt::format("sweep: m = {}, {}; {} straddling, {} incoherent\n", res.m, summary,
                     res.straddling, res.incoherent.size());
  return exit_ok;
}

int cmd_eps_star(const ExperimentConfig& cfg, Artifacts& art, std::ostream& out) {
  ProblemSpec spec = cfg.problem;
  spec.m = 0.0;
  const EpsStarResult r = find_eps_star(spec, cfg.eps_lo, cfg.eps_hi, cfg.eps_tol);
  art.json_summary({{"status", "ok"},
                    {"infinite", r.infinite},
                    {"found", r.found},
                    {"eps_star", num_json(r.eps_star)},
                    {"lower", num_json(r.lower)},
                    {"upper", num_json(r.upper)},
                    {"grid_max_excess", num_json(r.grid_max_excess)},
                    {"warning", r.warning},
                    {"report", r.report},
                    {"evaluations", r.evaluations}});
  if (r.infinite) {
    out << "eps-star: infinite ((a-1)^+ > 0 on the grid)\n";
  } else if (r.found) {
    out << fmt::format("eps-star: {:.8g} in [{:.8g}, {:.8g}]\n", r.eps_star, r.lower, r.upper);
  } else {
    out << "eps-star: " << r.report << '\n';
  }
  if (!r.warning.empty()) out << "warning: " << r.warning << '\n';
  return exit_ok;
}

int cmd_ess(const ExperimentConfig& cfg, Artifacts& art, std::ostream& out) {
  if (cfg.residents.empty()) throw ConfigError("ess.residents", "ess.residents: required");
  const std::vector<double> mutants = cfg.mutants.empty() ? cfg.residents : cfg.mutants;
  const InvasionMatrix mat = invasion_matrix(cfg.problem, cfg.residents, mutants);
  std::vector<std::vector<std::string>> rows;
  int invade = 0;
  json skipped = json::array();
  for (const auto& e : mat.entries) {
    rows.push_back({num(e.eps1), num(e.eps2), num(e.skipped ? kNaN : e.lambda.lower),
                    num(e.skipped ? kNaN : e.lambda.upper), std::string(e.verdict())});
    invade += e.verdict() == "invade";
    if (e.skipped) skipped.push_back({{"eps1", e.eps1}, {"eps2", e.eps2}, {"reason", e.reason}});
  }
  art.csv({"eps1", "eps2", "lambda_lo", "lambda_hi", "verdict"}, rows);
  art.json_summary({{"status", "ok"},
                    {"m", mat.m},
                    {"grid_points", mat.grid.size()},
                    {"spacing", mat.grid.spacing},
                    {"radius", mat.grid.radius},
                    {"resident_extinct", mat.resident_extinct},
                    {"invasions", invade},
                    {"skipped", skipped}});
  out << fmt::format("ess: {} of {} mutant entries invade\n", invade, mat.entries.size());
  return exit_ok;
}

int cmd_fat_tail(const ExperimentConfig& cfg, Artifacts& art, std::ostream& out) {
  if (cfg.fat_radii.empty()) throw ConfigError("fat-tail.radii", "fat-tail.radii: required");
  const FatTailResult r = fat_tail_verdict(cfg.problem, cfg.fat_radii, cfg.fat_change_tol);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t k = 0; k < r.extrapolation.radii.size(); ++k) {
    const auto& e = r.extrapolation.estimates[k];
    rows.push_back({num(r.extrapolation.radii[k]), num(e.lower), num(e.upper)});
  }
  art.csv({"radius", "lambda_lo", "lambda_hi"}, rows);
  art.json_summary({{"status", "ok"},
                    {"verdict", std::string(to_string(r.verdict))},
                    {"lower", num_json(r.lower)},
                    {"upper", num_json(r.upper)},
                    {"truncation_error", num_json(r.truncation_error)},
                    {"extrapolated", num_json(r.extrapolation.value)},
                    {"extrapolation_converged", r.extrapolation.converged},
                    {"evidence", r.evidence}});
  out << fmt::format("fat-tail: {} ({})\n", to_string(r.verdict), r.evidence);
  return exit_ok;
}

int cmd_audit(const ExperimentConfig& cfg, Artifacts& art, std::ostream& out) {
  if (cfg.epsilons.empty()) throw ConfigError("sweep.epsilons", "sweep.epsilons: required");
  const SweepResult res = epsilon_sweep(cfg.problem, cfg.sweep_m, cfg.epsilons);
  std::vector<std::vector<std::string>> rows;
  int failed = 0, audited = 0;
  for (const auto& e : res.entries) {
    if (e.skipped || e.solution.verdict != Verdict::persistence) continue;
    ProblemSpec s = cfg.problem.at(e.epsilon);
    s.m = cfg.sweep_m;
    const AuditReport rep = apriori_estimate_audit(s.op(), s.growth, e.solution.values, e.lambda,
                                                   std::max(1e-8, 10.0 * cfg.problem.solver.tol));
    ++audited;
    for (const auto& it : rep.items) {
      rows.push_back({num(e.epsilon), it.name, num(it.value), num(it.bound), num(it.margin),
                      it.passed ? "true" : "false"});
      failed += !it.passed;
    }
  }
  art.csv({"eps", "item", "value", "bound", "margin", "passed"}, rows);
  const double slope = energy_slope(res);
  art.json_summary({{"status", "ok"},
                    {"m", res.m},
                    {"audited_entries", audited},
                    {"failed_items", failed},
                    {"energy_slope", num_json(slope)},
                    {"slope_within_0.2_of_m", std::isfinite(slope) && std::abs(slope - res.m) <= 0.2}});
  out << fmt::format("audit: {} entries, {} failed items, energy slope {:.4g} (m = {})\n", audited,
                     failed, slope, res.m);
  return exit_ok;
}

}  // namespace

int run(std::string_view command, const fs::path& config, std::ostream& out, std::ostream& err) {
  Command cmd;
  ExperimentConfig cfg;
  try {
    cmd = parse_command(command);
    cfg = load_config(config);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  }
  Artifacts art(cfg, cmd);
  try {
    switch (cmd) {
      case Command::validate: return cmd_validate(cfg, art, out);
      case Command::spectrum: return cmd_spectrum(cfg, art, out);
      case Command::stationary: return cmd_stationary(cfg, art, out);
      case Command::evolve: return cmd_evolve(cfg, art, out);
      case Command::sweep: return cmd_sweep(cfg, art, out);
      case Command::eps_star: return cmd_eps_star(cfg, art, out);
      case Command::ess: return cmd_ess(cfg, art, out);
      case Command::fat_tail: return cmd_fat_tail(cfg, art, out);
      case Command::audit: return cmd_audit(cfg, art, out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const InvalidArgument& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const InvalidKernel& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const Error& e) {
    err << "numerical failure: " << e.what() << '\n';
    try {
      art.failure("numerical", e.what());
    } catch (const std::exception&) {
    }
    return exit_numerical;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return exit_numerical;
  }
  return exit_numerical;
}

}  // namespace nichewave::cli
