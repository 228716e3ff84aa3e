#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nichewave/experiments.hpp"

namespace nichewave::cli {

enum class Command { validate, spectrum, stationary, evolve, sweep, eps_star, ess, fat_tail, audit };

std::string_view to_string(Command command);
Command parse_command(std::string_view name);

/*
 * INI schema (every key optional unless noted; unknown sections/keys are errors):
 *
 *   [run]        label, output, seed, workers
 *   [kernel]     family (required), dimension, params, epsilon, m, alpha0
 *   [growth]     family (required), params, reaction
 *   [grid]       radius, spacing, topology, h0, radius_per_eps, dense_limit, tail_tol
 *   [spectral]   tol, max_iterations
 *   [solver]     tol, max_iterations
 *   [exhaustion] radii, change_tol                     (stationary, spectrum)
 *   [evolve]     horizon, dt, stride, initial, initial_value
 *   [sweep]      m, epsilons, limit, target, lambda_target, core_radius,
 *                reference_spacing                     (sweep, audit)
 *   [eps-star]   lo, hi, tol
 *   [ess]        residents, mutants
 *   [fat-tail]   radii, change_tol
 *
 * Lists are comma separated. Numbers use '.' as the decimal separator.
 */
struct ExperimentConfig {
  std::string label = "run";
  std::filesystem::path output = ".";
  std::uint64_t seed = 1;

  ProblemSpec problem;

  std::vector<double> exhaustion_radii;
  double exhaustion_change_tol = 1e-6;

  double horizon = 200.0;
  std::optional<double> dt;
  double stride = 1.0;
  std::string initial = "saturation";  // saturation, constant, bump, random
  double initial_value = 1.0;

  double sweep_m = 0.0;
  std::vector<double> epsilons;
  std::string limit = "none";  // none, zero, infinity
  LimitTarget target = LimitTarget::none;
  LambdaTarget lambda_target = LambdaTarget::none;
  double core_radius = 0.0;
  double reference_spacing = 0.0;

  double eps_lo = 0.1;
  double eps_hi = 10.0;
  double eps_tol = 1e-3;

  std::vector<double> residents;
  std::vector<double> mutants;

  std::vector<double> fat_radii;
  double fat_change_tol = 1e-4;
};

// Throws ConfigError naming the offending "section.key".
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text);

}  // namespace nichewave::cli
