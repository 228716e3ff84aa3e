#include "config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "nichewave/error.hpp"

namespace nichewave::cli {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"run", {"label", "output", "seed", "workers"}},
      {"kernel", {"family", "dimension", "params", "epsilon", "m", "alpha0"}},
      {"growth", {"family", "params", "reaction"}},
      {"grid", {"radius", "spacing", "topology", "h0", "radius_per_eps", "dense_limit", "tail_tol"}},
      {"spectral", {"tol", "max_iterations"}},
      {"solver", {"tol", "max_iterations"}},
      {"exhaustion", {"radii", "change_tol"}},
      {"evolve", {"horizon", "dt", "stride", "initial", "initial_value"}},
      {"sweep", {"m", "epsilons", "limit", "target", "lambda_target", "core_radius",
                 "reference_spacing"}},
      {"eps-star", {"lo", "hi", "tol"}},
      {"ess", {"residents", "mutants"}},
      {"fat-tail", {"radii", "change_tol"}},
  };
  return s;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || end != t.data() + t.size() || t.empty()) {
    throw ConfigError(key, fmt::format("{}: '{}' is not a number", key, text));
  }
  return v;
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!trim(item).empty()) out.push_back(to_number(key, item));
  }
  return out;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> raw(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(pt::ptree::path_type(section, '\0'));
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return trim(*v);
  }
  std::string text(const std::string& section, const std::string& key, std::string fallback) const {
    return raw(section, key).value_or(std::move(fallback));
  }
  std::string required(const std::string& section, const std::string& key) const {
    auto v = raw(section, key);
    if (!v || v->empty()) throw ConfigError(section + "." + key, section + "." + key + ": required");
    return *v;
  }
  double number(const std::string& section, const std::string& key, double fallback) const {
    auto v = raw(section, key);
    return v ? to_number(section + "." + key, *v) : fallback;
  }
  double positive(const std::string& section, const std::string& key, double fallback) const {
    const double v = number(section, key, fallback);
    if (!(v > 0)) throw ConfigError(section + "." + key, section + "." + key + ": must be positive");
    return v;
  }
  std::vector<double> list(const std::string& section, const std::string& key) const {
    auto v = raw(section, key);
    return v ? to_list(section + "." + key, *v) : std::vector<double>{};
  }
  std::vector<double> positive_list(const std::string& section, const std::string& key) const {
    auto v = list(section, key);
    for (double x : v) {
      if (!(x > 0)) {
        throw ConfigError(section + "." + key, section + "." + key + ": entries must be positive");
      }
    }
    return v;
  }

 private:
  const pt::ptree& tree_;
};

template <class F>
auto keyed(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(key, fmt::format("{}: {}", key, e.what()));
  }
}

}  // namespace

std::string_view to_string(Command command) {
  switch (command) {
    case Command::validate: return "validate";
    case Command::spectrum: return "spectrum";
    case Command::stationary: return "stationary";
    case Command::evolve: return "evolve";
    case Command::sweep: return "sweep";
    case Command::eps_star: return "eps-star";
    case Command::ess: return "ess";
    case Command::fat_tail: return "fat-tail";
    case Command::audit: return "audit";
  }
  return "unknown";
}

Command parse_command(std::string_view name) {
  for (auto c : {Command::validate, Command::spectrum, Command::stationary, Command::evolve,
                 Command::sweep, Command::eps_star, Command::ess, Command::fat_tail,
                 Command::audit}) {
    if (name == to_string(c)) return c;
  }
  throw ConfigError("command", fmt::format("unknown command '{}'", name));
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("file", fmt::format("line {}: {}", e.line(), e.message()));
  }
  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end()) {
      if (!body.data().empty()) {
        throw ConfigError(section, fmt::format("{}: key outside a section", section));
      }
      throw ConfigError(section, fmt::format("unknown section [{}]", section));
    }
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) {
        throw ConfigError(section + "." + key, fmt::format("unknown key {}.{}", section, key));
      }
    }
  }

  const Reader r(tree);
  ExperimentConfig c;
  c.label = r.text("run", "label", c.label);
  if (c.label.empty() || c.label.find_first_of("/\\ ") != std::string::npos) {
    throw ConfigError("run.label", "run.label: must be a non-empty name without spaces or slashes");
  }
  c.output = r.text("run", "output", c.output.string());
  c.seed = static_cast<std::uint64_t>(r.number("run", "seed", 1.0));
  const double workers = r.number("run", "workers", 0.0);
  if (workers < 0) throw ConfigError("run.workers", "run.workers: must be >= 0");
  c.problem.workers = static_cast<std::size_t>(workers);

  ProblemSpec& p = c.problem;
  const int dimension = static_cast<int>(r.number("kernel", "dimension", 1.0));
  if (dimension != 1 && dimension != 2) throw ConfigError("kernel.dimension", "kernel.dimension: must be 1 or 2");
  const std::string kfam = r.required("kernel", "family");
  const auto kparams = r.list("kernel", "params");
  p.kernel = keyed("kernel.params", [&] {
    return Kernel::from_params(keyed("kernel.family", [&] { return parse_kernel_family(kfam); }),
                               dimension, kparams);
  });
  p.epsilon = r.positive("kernel", "epsilon", 1.0);
  p.m = r.number("kernel", "m", 0.0);
  if (p.m < 0 || p.m > 2) throw ConfigError("kernel.m", "kernel.m: must lie in [0, 2]");
  p.alpha0 = r.positive("kernel", "alpha0", 1.0);

  const std::string gfam = r.required("growth", "family");
  const auto gparams = r.list("growth", "params");
  const std::string reaction = r.text("growth", "reaction", "logistic");
  p.growth = keyed("growth.params", [&] {
    return GrowthProfile::from_params(
        keyed("growth.family", [&] { return parse_growth_family(gfam); }), gparams);
  });
  p.growth = p.growth.with_reaction(keyed("growth.reaction", [&] { return parse_reaction(reaction); }));

  p.radius = r.positive("grid", "radius", p.radius);
  p.spacing = r.positive("grid", "spacing", p.spacing);
  p.topology = keyed("grid.topology", [&] {
    return parse_topology(r.text("grid", "topology", std::string(to_string(p.topology))));
  });
  p.h0 = r.number("grid", "h0", 0.0);
  p.radius_per_eps = r.number("grid", "radius_per_eps", 0.0);
  if (p.h0 < 0) throw ConfigError("grid.h0", "grid.h0: must be >= 0");
  if (p.radius_per_eps < 0) throw ConfigError("grid.radius_per_eps", "grid.radius_per_eps: must be >= 0");
  p.op_options.dense_limit = static_cast<std::size_t>(
      r.positive("grid", "dense_limit", double(p.op_options.dense_limit)));
  p.op_options.tail_tol = r.positive("grid", "tail_tol", p.op_options.tail_tol);
  keyed("grid.spacing", [&] { return p.grid(); });

  p.solver.spectral.tol = r.positive("spectral", "tol", p.solver.spectral.tol);
  p.solver.spectral.max_iterations =
      static_cast<int>(r.positive("spectral", "max_iterations", p.solver.spectral.max_iterations));
  p.solver.tol = r.positive("solver", "tol", p.solver.tol);
  p.solver.max_iterations =
      static_cast<int>(r.positive("solver", "max_iterations", p.solver.max_iterations));

  c.exhaustion_radii = r.positive_list("exhaustion", "radii");
  c.exhaustion_change_tol = r.positive("exhaustion", "change_tol", c.exhaustion_change_tol);

  c.horizon = r.positive("evolve", "horizon", c.horizon);
  if (r.raw("evolve", "dt")) c.dt = r.positive("evolve", "dt", 0.0);
  c.stride = r.positive("evolve", "stride", c.stride);
  c.initial = r.text("evolve", "initial", c.initial);
  if (c.initial != "saturation" && c.initial != "constant" && c.initial != "bump" &&
      c.initial != "random") {
    throw ConfigError("evolve.initial",
                      "evolve.initial: expected saturation, constant, bump or random");
  }
  c.initial_value = r.number("evolve", "initial_value", c.initial_value);
  if (c.initial_value < 0) throw ConfigError("evolve.initial_value", "evolve.initial_value: must be >= 0");

  c.sweep_m = r.number("sweep", "m", p.m);
  if (c.sweep_m < 0 || c.sweep_m > 2) throw ConfigError("sweep.m", "sweep.m: must lie in [0, 2]");
  c.epsilons = r.positive_list("sweep", "epsilons");
  c.limit = r.text("sweep", "limit", c.limit);
  if (c.limit != "none" && c.limit != "zero" && c.limit != "infinity") {
    throw ConfigError("sweep.limit", "sweep.limit: expected none, zero or infinity");
  }
  c.target = keyed("sweep.target", [&] { return parse_limit_target(r.text("sweep", "target", "none")); });
  c.lambda_target = keyed("sweep.lambda_target",
                          [&] { return parse_lambda_target(r.text("sweep", "lambda_target", "none")); });
  c.core_radius = r.number("sweep", "core_radius", 0.0);
  c.reference_spacing = r.number("sweep", "reference_spacing", 0.0);

  c.eps_lo = r.positive("eps-star", "lo", c.eps_lo);
  c.eps_hi = r.positive("eps-star", "hi", c.eps_hi);
  c.eps_tol = r.positive("eps-star", "tol", c.eps_tol);
  if (c.eps_hi <= c.eps_lo) throw ConfigError("eps-star.hi", "eps-star.hi: must exceed eps-star.lo");

  c.residents = r.positive_list("ess", "residents");
  c.mutants = r.positive_list("ess", "mutants");

  c.fat_radii = r.positive_list("fat-tail", "radii");
  c.fat_change_tol = r.positive("fat-tail", "change_tol", c.fat_change_tol);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("file", fmt::format("cannot read config '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace nichewave::cli
