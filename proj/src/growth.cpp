#include "nichewave/growth.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "nichewave/error.hpp"

namespace nichewave {

std::string_view to_string(GrowthFamily family) {
  switch (family) {
    case GrowthFamily::bump:
      return "bump";
    case GrowthFamily::plateau:
      return "plateau";
    case GrowthFamily::constant:
      return "constant";
    case GrowthFamily::tabulated:
      return "tabulated";
  }
  return "unknown";
}

GrowthFamily parse_growth_family(std::string_view name) {
  for (auto f : {GrowthFamily::bump, GrowthFamily::plateau, GrowthFamily::constant,
                 GrowthFamily::tabulated}) {
    if (to_string(f) == name) return f;
  }
  throw InvalidArgument(fmt::format("unknown growth family '{}'", name));
}

std::string_view to_string(ReactionKind kind) {
  return kind == ReactionKind::cubic ? "cubic" : "logistic";
}

ReactionKind parse_reaction(std::string_view name) {
  if (name == "logistic") return ReactionKind::logistic;
  if (name == "cubic") return ReactionKind::cubic;
  throw InvalidArgument(fmt::format("unknown reaction '{}'", name));
}

double Reaction::f(double a, double s) const { return s * per_capita(a, s); }

double Reaction::per_capita(double a, double s) const {
  return kind == ReactionKind::logistic ? a - s : a - s * s;
}

double Reaction::df_ds(double a, double s) const {
  return kind == ReactionKind::logistic ? a - 2.0 * s : a - 3.0 * s * s;
}

double Reaction::saturation(double a) const {
  const double pos = std::max(a, 0.0);
  return kind == ReactionKind::logistic ? pos : std::sqrt(pos);
}

GrowthProfile::GrowthProfile(GrowthFamily family, std::vector<double> params)
    : family_(family), params_(std::move(params)) {}

GrowthProfile GrowthProfile::bump(double a0, double b, double a_min) {
  if (!(b > 0.0)) throw InvalidArgument("bump growth needs b > 0");
  if (!(a_min <= a0)) throw InvalidArgument("bump growth needs a_min <= a0");
  return GrowthProfile(GrowthFamily::bump, {a0, b, a_min});
}

GrowthProfile GrowthProfile::plateau(double value, double core_radius, double outside,
                                     double ramp) {
  if (!(core_radius >= 0.0) || !(ramp >= 0.0)) {
    throw InvalidArgument("plateau growth needs core radius >= 0 and ramp >= 0");
  }
  return GrowthProfile(GrowthFamily::plateau, {value, core_radius, outside, ramp});
}

GrowthProfile GrowthProfile::constant(double value) {
  return GrowthProfile(GrowthFamily::constant, {value});
}

GrowthProfile GrowthProfile::tabulated(std::vector<double> radii, std::vector<double> values) {
  if (radii.size() != values.size() || radii.empty()) {
    throw InvalidArgument("tabulated growth needs matching, non-empty radii and values");
  }
  if (radii.front() < 0.0 || !std::is_sorted(radii.begin(), radii.end()) ||
      std::adjacent_find(radii.begin(), radii.end()) != radii.end()) {
    throw InvalidArgument("tabulated growth radii must be >= 0 and strictly increasing");
  }
  GrowthProfile g(GrowthFamily::tabulated, {});
  for (std::size_t i = 0; i < radii.size(); ++i) {
    g.params_.push_back(radii[i]);
    g.params_.push_back(values[i]);
  }
  g.radii_ = std::move(radii);
  g.values_ = std::move(values);
  return g;
}

GrowthProfile GrowthProfile::from_params(GrowthFamily family, std::span<const double> p) {
  auto need = [&](std::size_t n) {
    if (p.size() != n) {
      throw InvalidArgument(fmt::format("growth family '{}' takes {} parameter(s), got {}",
                                        to_string(family), n, p.size()));
    }
  };
  switch (family) {
    case GrowthFamily::bump:
      need(3);
      return bump(p[0], p[1], p[2]);
    case GrowthFamily::plateau:
      need(4);
      return plateau(p[0], p[1], p[2], p[3]);
    case GrowthFamily::constant:
      need(1);
      return constant(p[0]);
    case GrowthFamily::tabulated: {
      if (p.size() % 2 != 0 || p.empty()) {
        throw InvalidArgument("tabulated growth takes (radius, value) pairs");
      }
      std::vector<double> r, v;
      for (std::size_t i = 0; i < p.size(); i += 2) {
        r.push_back(p[i]);
        v.push_back(p[i + 1]);
      }
      return tabulated(std::move(r), std::move(v));
    }
  }
  throw InvalidArgument("unreachable growth family");
}

GrowthProfile GrowthProfile::with_reaction(ReactionKind kind) const {
  GrowthProfile g = *this;
  g.reaction_.kind = kind;
  return g;
}

double GrowthProfile::a_radial(double r) const {
  switch (family_) {
    case GrowthFamily::bump:
      return std::max(params_[0] - params_[1] * r * r, params_[2]);
    case GrowthFamily::plateau: {
      const double c = params_[0], r0 = params_[1], out = params_[2], ramp = params_[3];
      if (r <= r0) return c;
      if (r >= r0 + ramp) return out;
      return c + (out - c) * (r - r0) / ramp;
    }
    case GrowthFamily::constant:
      return params_[0];
    case GrowthFamily::tabulated: {
      if (r >= radii_.back()) return values_.back();
      if (r <= radii_.front()) return values_.front();
      auto it = std::upper_bound(radii_.begin(), radii_.end(), r);
      const auto hi = static_cast<std::size_t>(it - radii_.begin());
      const double t = (r - radii_[hi - 1]) / (radii_[hi] - radii_[hi - 1]);
      return (1.0 - t) * values_[hi - 1] + t * values_[hi];
    }
  }
  return 0.0;
}

double GrowthProfile::a(const Point& x, int dimension) const {
  return a_radial(euclidean_norm(x, dimension));
}

GridFunction GrowthProfile::sample(const Grid& grid) const {
  return grid.sample([&](const Point& x) { return a(x, grid.dimension); });
}

double GrowthProfile::sup() const {
  switch (family_) {
    case GrowthFamily::bump:
      return params_[0];
    case GrowthFamily::plateau:
      return std::max(params_[0], params_[2]);
    case GrowthFamily::constant:
      return params_[0];
    case GrowthFamily::tabulated:
      return *std::max_element(values_.begin(), values_.end());
  }
  return 0.0;
}

double GrowthProfile::limsup() const {
  switch (family_) {
    case GrowthFamily::bump:
      return params_[2];
    case GrowthFamily::plateau:
      return params_[2];
    case GrowthFamily::constant:
      return params_[0];
    case GrowthFamily::tabulated:
      return values_.back();
  }
  return 0.0;
}

double GrowthProfile::core_radius() const {
  const double target = limsup() / 2.0;
  switch (family_) {
    case GrowthFamily::bump:
      return params_[0] <= target ? 0.0 : std::sqrt((params_[0] - target) / params_[1]);
    case GrowthFamily::plateau:
      return params_[1] + params_[3];
    case GrowthFamily::constant:
      return 0.0;
    case GrowthFamily::tabulated: {
      // last node where the profile is above the target, then one more segment
      double r = 0.0;
      for (std::size_t i = 0; i < radii_.size(); ++i) {
        if (values_[i] > target) r = i + 1 < radii_.size() ? radii_[i + 1] : radii_[i];
      }
      return r;
    }
  }
  return 0.0;
}

double reaction_lipschitz(const Reaction& reaction, const GridFunction& a, double upper) {
  const double S = upper < 0.0 ? sup_saturation(reaction, a) : upper;
  double L = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    // d_s f is monotone in s for both reactions, so the endpoints bound it
    L = std::max({L, std::abs(reaction.df_ds(a[i], 0.0)), std::abs(reaction.df_ds(a[i], S))});
  }
  return L;
}

double sup_saturation(const Reaction& reaction, const GridFunction& a) {
  double S = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) S = std::max(S, reaction.saturation(a[i]));
  return S;
}

}  // namespace nichewave
