#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "nichewave/grid.hpp"
#include "nichewave/kernel.hpp"

namespace nichewave {

enum class GrowthFamily { bump, plateau, constant, tabulated };
enum class ReactionKind { logistic, cubic };

std::string_view to_string(GrowthFamily family);
GrowthFamily parse_growth_family(std::string_view name);
std::string_view to_string(ReactionKind kind);
ReactionKind parse_reaction(std::string_view name);

// KPP reaction f(x, s) built on the linearized rate a(x) = d_s f(x, 0).
//   logistic  f = s (a - s),    S = a^+
//   cubic     f = s (a - s^2),  S = sqrt(a^+)
// Both have f(x,s)/s strictly decreasing in s.
struct Reaction {
  ReactionKind kind = ReactionKind::logistic;

  double f(double a, double s) const;
  double df_ds(double a, double s) const;
  double per_capita(double a, double s) const;  // f(x,s)/s, continuous at s = 0
  double saturation(double a) const;
};

// a(x) families:
//   bump       max(a0 - b|x|^2, a_min)                          params {a0, b, a_min}
//   plateau    c on |x| <= r0, `outside` beyond r0 + ramp,
//              linear in |x| in between                         params {c, r0, outside, ramp}
//   constant   c                                                params {c}
//   tabulated  radial linear interpolation, last value beyond   params (r, a) pairs
class GrowthProfile {
 public:
  static GrowthProfile bump(double a0, double b, double a_min);
  static GrowthProfile plateau(double value, double core_radius, double outside, double ramp);
  static GrowthProfile constant(double value);
  static GrowthProfile tabulated(std::vector<double> radii, std::vector<double> values);
  static GrowthProfile from_params(GrowthFamily family, std::span<const double> params);

  GrowthProfile with_reaction(ReactionKind kind) const;

  double a(const Point& x, int dimension) const;
  double a_radial(double r) const;
  GridFunction sample(const Grid& grid) const;

  double sup() const;
  // Value of a(x) for |x| -> infinity.
  double limsup() const;
  // Smallest radius beyond which a(x) <= limsup() / 2 (only meaningful for limsup < 0).
  double core_radius() const;

  GrowthFamily family() const { return family_; }
  const std::vector<double>& params() const { return params_; }
  const Reaction& reaction() const { return reaction_; }

 private:
  GrowthProfile(GrowthFamily family, std::vector<double> params);

  GrowthFamily family_;
  std::vector<double> params_;
  std::vector<double> radii_;
  std::vector<double> values_;
  Reaction reaction_;
};

// sup |d_s f| over s in [0, upper] for the sampled rates; upper < 0 means sup S.
double reaction_lipschitz(const Reaction& reaction, const GridFunction& a, double upper = -1.0);
double sup_saturation(const Reaction& reaction, const GridFunction& a);

}  // namespace nichewave
