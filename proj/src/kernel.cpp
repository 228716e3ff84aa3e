#include "nichewave/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include "nichewave/error.hpp"

namespace nichewave {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_dimension(int dimension) {
  if (dimension != 1 && dimension != 2) {
    throw InvalidArgument(fmt::format("kernel dimension must be 1 or 2, got {}", dimension));
  }
}

template <class F>
MomentEstimate integrate(F&& f, double a, double b, double tol) {
  double error = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, tol, &error);
  return {value, error};
}

// int_0^b g(r) * (surface measure) dr for a radial integrand in dimension N.
template <class F>
MomentEstimate radial_integral(int dimension, F&& g, double b, double tol,
                               std::span<const double> breaks = {}) {
  const double shell = dimension == 1 ? 2.0 : 2.0 * kPi;
  auto integrand = [&](double r) { return shell * g(r) * (dimension == 2 ? r : 1.0); };
  MomentEstimate total;
  double lo = 0.0;
  std::vector<double> points(breaks.begin(), breaks.end());
  points.push_back(b);
  std::sort(points.begin(), points.end());
  for (double hi : points) {
    if (hi <= lo) continue;
    const auto piece = integrate(integrand, lo, hi, tol);
    total.value += piece.value;
    total.error += piece.error;
    lo = hi;
  }
  return total;
}

}  // namespace

double euclidean_norm(const Point& x, int dimension) {
  return dimension == 1 ? std::abs(x[0]) : std::hypot(x[0], x[1]);
}

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::tent:
      return "tent";
    case KernelFamily::truncated_quadratic:
      return "truncated-quadratic";
    case KernelFamily::truncated_gaussian:
      return "truncated-gaussian";
    case KernelFamily::exponential_tail:
      return "exponential-tail";
    case KernelFamily::algebraic_tail:
      return "algebraic-tail";
    case KernelFamily::tabulated:
      return "tabulated";
  }
  return "unknown";
}

KernelFamily parse_kernel_family(std::string_view name) {
  for (auto family : {KernelFamily::tent, KernelFamily::truncated_quadratic,
                      KernelFamily::truncated_gaussian, KernelFamily::exponential_tail,
                      KernelFamily::algebraic_tail, KernelFamily::tabulated}) {
    if (to_string(family) == name) return family;
  }
  throw InvalidArgument(fmt::format("unknown kernel family '{}'", name));
}

Kernel::Kernel(KernelFamily family, int dimension, std::vector<double> params)
    : family_(family), dimension_(dimension), params_(std::move(params)) {
  require_dimension(dimension);
}

Kernel Kernel::tent(int dimension) {
  Kernel k(KernelFamily::tent, dimension, {});
  k.normalization_ = dimension == 1 ? 1.0 : 3.0 / kPi;
  return k;
}

Kernel Kernel::truncated_quadratic(int dimension) {
  Kernel k(KernelFamily::truncated_quadratic, dimension, {});
  k.normalization_ = dimension == 1 ? 0.75 : 2.0 / kPi;
  return k;
}

Kernel Kernel::truncated_gaussian(int dimension, double sigma, double cutoff) {
  if (!(sigma > 0.0) || !(cutoff > 0.0)) {
    throw InvalidArgument("truncated-gaussian needs sigma > 0 and cutoff > 0");
  }
  Kernel k(KernelFamily::truncated_gaussian, dimension, {sigma, cutoff});
  if (dimension == 1) {
    k.normalization_ =
        1.0 / (sigma * std::sqrt(2.0 * kPi) * std::erf(cutoff / (sigma * std::numbers::sqrt2)));
  } else {
    k.normalization_ =
        1.0 / (2.0 * kPi * sigma * sigma * -std::expm1(-cutoff * cutoff / (2.0 * sigma * sigma)));
  }
  return k;
}

Kernel Kernel::exponential_tail(int dimension, double length) {
  if (!(length > 0.0)) throw InvalidArgument("exponential-tail needs length > 0");
  Kernel k(KernelFamily::exponential_tail, dimension, {length});
  k.normalization_ = dimension == 1 ? 1.0 / (2.0 * length) : 1.0 / (2.0 * kPi * length * length);
  return k;
}

Kernel Kernel::algebraic_tail(int dimension, double exponent) {
  if (!(exponent > dimension)) {
    throw InvalidArgument(
        fmt::format("algebraic-tail exponent must exceed the dimension, got {}", exponent));
  }
  Kernel k(KernelFamily::algebraic_tail, dimension, {exponent});
  const double q = exponent;
  k.normalization_ = dimension == 1 ? (q - 1.0) / 2.0 : (q - 1.0) * (q - 2.0) / (2.0 * kPi);
  return k;
}

Kernel Kernel::tabulated(int dimension, std::vector<double> nodes, std::vector<double> values) {
  if (nodes.size() != values.size() || nodes.size() < 2) {
    throw InvalidKernel("tabulated kernel needs at least two (node, value) pairs");
  }
  if (!std::is_sorted(nodes.begin(), nodes.end()) ||
      std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end()) {
    throw InvalidKernel("tabulated kernel nodes must be strictly increasing");
  }
  if (dimension == 2 && nodes.front() < 0.0) {
    throw InvalidKernel("2D tabulated kernels are radial: nodes must be >= 0");
  }
  Kernel k(KernelFamily::tabulated, dimension, {});
  k.nodes_ = std::move(nodes);
  k.values_ = std::move(values);
  return k;
}

Kernel Kernel::from_params(KernelFamily family, int dimension, std::span<const double> params) {
  auto need = [&](std::size_t count) {
    if (params.size() != count) {
      throw InvalidArgument(fmt::format("kernel family '{}' takes {} parameter(s), got {}",
                                        to_string(family), count, params.size()));
    }
  };
  switch (family) {
    case KernelFamily::tent:
      need(0);
      return tent(dimension);
    case KernelFamily::truncated_quadratic:
      need(0);
      return truncated_quadratic(dimension);
    case KernelFamily::truncated_gaussian:
      need(2);
      return truncated_gaussian(dimension, params[0], params[1]);
    case KernelFamily::exponential_tail:
      need(1);
      return exponential_tail(dimension, params[0]);
    case KernelFamily::algebraic_tail:
      need(1);
      return algebraic_tail(dimension, params[0]);
    case KernelFamily::tabulated: {
      if (params.size() % 2 != 0) {
        throw InvalidArgument("tabulated kernel parameters are (node, value) pairs");
      }
      std::vector<double> nodes, values;
      for (std::size_t i = 0; i < params.size(); i += 2) {
        nodes.push_back(params[i]);
        values.push_back(params[i + 1]);
      }
      return tabulated(dimension, std::move(nodes), std::move(values));
    }
  }
  throw InvalidArgument("unreachable kernel family");
}

double Kernel::interpolate(double z) const {
  if (z < nodes_.front() || z > nodes_.back()) return 0.0;
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), z);
  if (it == nodes_.end()) return values_.back();
  const auto hi = static_cast<std::size_t>(it - nodes_.begin());
  const auto lo = hi - 1;
  const double t = (z - nodes_[lo]) / (nodes_[hi] - nodes_[lo]);
  return (1.0 - t) * values_[lo] + t * values_[hi];
}

double Kernel::radial(double r) const {
  switch (family_) {
    case KernelFamily::tent:
      return r < 1.0 ? normalization_ * (1.0 - r) : 0.0;
    case KernelFamily::truncated_quadratic:
      return r < 1.0 ? normalization_ * (1.0 - r * r) : 0.0;
    case KernelFamily::truncated_gaussian: {
      const double s = params_[0];
      return r <= params_[1] ? normalization_ * std::exp(-r * r / (2.0 * s * s)) : 0.0;
    }
    case KernelFamily::exponential_tail:
      return normalization_ * std::exp(-r / params_[0]);
    case KernelFamily::algebraic_tail:
      return normalization_ * std::pow(1.0 + r, -params_[0]);
    case KernelFamily::tabulated:
      return dimension_ == 1 ? 0.5 * (interpolate(r) + interpolate(-r)) : interpolate(r);
  }
  return 0.0;
}

double Kernel::operator()(const Point& z) const {
  if (family_ == KernelFamily::tabulated && dimension_ == 1) return interpolate(z[0]);
  return radial(euclidean_norm(z, dimension_));
}

double Kernel::support_radius() const {
  switch (family_) {
    case KernelFamily::tent:
    case KernelFamily::truncated_quadratic:
      return 1.0;
    case KernelFamily::truncated_gaussian:
      return params_[1];
    case KernelFamily::exponential_tail:
    case KernelFamily::algebraic_tail:
      return kInf;
    case KernelFamily::tabulated:
      return std::max(std::abs(nodes_.front()), std::abs(nodes_.back()));
  }
  return kInf;
}

double Kernel::tail_mass(double radius) const {
  if (radius <= 0.0) return 1.0;
  switch (family_) {
    case KernelFamily::exponential_tail: {
      const double t = radius / params_[0];
      return dimension_ == 1 ? std::exp(-t) : (1.0 + t) * std::exp(-t);
    }
    case KernelFamily::algebraic_tail: {
      const double q = params_[0];
      const double base = 1.0 + radius;
      if (dimension_ == 1) return std::pow(base, 1.0 - q);
      return (q - 1.0) * std::pow(base, 2.0 - q) - (q - 2.0) * std::pow(base, 1.0 - q);
    }
    default:
      break;
  }
  const double support = support_radius();
  if (radius >= support) return 0.0;
  auto g = [this](double r) { return std::abs(radial(r)); };
  return radial_integral(dimension_, g, support, 1e-12).value -
         radial_integral(dimension_, g, radius, 1e-12).value;
}

bool Kernel::moment_finite(double p) const {
  if (compact()) return true;
  if (family_ == KernelFamily::exponential_tail) return true;
  // algebraic: r^{p+N-1} (1+r)^{-q} integrable iff q > p + N
  return params_[0] > p + dimension_;
}

bool Kernel::exponential_moment_finite(double alpha) const {
  if (compact() || alpha <= 0.0) return true;
  if (family_ == KernelFamily::exponential_tail) return alpha < 1.0 / params_[0];
  return false;
}

ScaledKernel::ScaledKernel(Kernel base, double epsilon, double m, double alpha0)
    : base_(std::move(base)), epsilon_(epsilon), m_(m), alpha0_(alpha0) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (!(m >= 0.0 && m <= 2.0)) throw InvalidArgument("cost exponent m must lie in [0, 2]");
  if (!(alpha0 > 0.0)) throw InvalidArgument("alpha0 must be positive");
  rate_ = alpha0 / std::pow(epsilon, m);
}

double ScaledKernel::operator()(const Point& z) const {
  const Point scaled{z[0] / epsilon_, z[1] / epsilon_};
  return base_(scaled) / std::pow(epsilon_, base_.dimension());
}

double ScaledKernel::radial(double r) const {
  return base_.radial(r / epsilon_) / std::pow(epsilon_, base_.dimension());
}

ScaledKernel rescale_kernel(const Kernel& kernel, double epsilon, double m, double alpha0) {
  return ScaledKernel(kernel, epsilon, m, alpha0);
}

namespace {

template <class Profile>
MomentEstimate moment_impl(const Kernel& shape, double scale, Profile&& profile, double p,
                           double tol) {
  if (p < 0.0) throw InvalidArgument("moment order must be >= 0");
  if (!shape.moment_finite(p)) {
    throw InfiniteMoment(fmt::format("moment of order {} diverges for the {} kernel", p,
                                     to_string(shape.family())));
  }
  const int dim = shape.dimension();
  if (shape.family() == KernelFamily::tabulated && dim == 1) {
    // signed 1D integral, split at every node and at the origin
    std::vector<double> cuts;
    for (double z : shape.nodes()) cuts.push_back(z * scale);
    cuts.push_back(0.0);
    std::sort(cuts.begin(), cuts.end());
    MomentEstimate total;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      if (cuts[i + 1] <= cuts[i]) continue;
      auto piece = integrate(
          [&](double z) { return profile(Point{z, 0.0}) * std::pow(std::abs(z), p); }, cuts[i],
          cuts[i + 1], tol);
      total.value += piece.value;
      total.error += piece.error;
    }
    return total;
  }
  auto g = [&](double r) { return profile(Point{r, 0.0}) * std::pow(r, p); };
  std::vector<double> breaks;
  if (shape.family() == KernelFamily::tabulated) {
    for (double r : shape.nodes()) breaks.push_back(r * scale);
  }
  if (shape.compact()) return radial_integral(dim, g, shape.support_radius() * scale, tol, breaks);
  return radial_integral(dim, g, kInf, tol);
}

}  // namespace

MomentEstimate kernel_moment(const Kernel& kernel, double p, double tol) {
  return moment_impl(kernel, 1.0, [&](const Point& z) { return kernel(z); }, p, tol);
}

MomentEstimate kernel_moment(const ScaledKernel& kernel, double p, double tol) {
  return moment_impl(kernel.base(), kernel.epsilon(), [&](const Point& z) { return kernel(z); }, p,
                     tol);
}

bool ValidationReport::passed(std::string_view name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c.passed;
  }
  return false;
}

bool ValidationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

ValidationReport validate_kernel(const Kernel& kernel, double tol) {
  const int dim = kernel.dimension();
  double extent = kernel.support_radius();
  if (!kernel.compact()) {
    extent = 1.0;
    while (kernel.tail_mass(extent) > 1e-12 && extent < 1e8) extent *= 2.0;
  }

  std::vector<Point> samples;
  if (kernel.family() == KernelFamily::tabulated) {
    for (double z : kernel.nodes()) {
      samples.push_back(Point{z, 0.0});
      samples.push_back(Point{-z, 0.0});
    }
  }
  const int count = 2001;
  for (int i = 0; i < count; ++i) {
    const double z = -extent + 2.0 * extent * i / (count - 1);
    samples.push_back(Point{z, 0.0});
    if (dim == 2) samples.push_back(Point{z / std::numbers::sqrt2, -z / std::numbers::sqrt2 / 2.0});
  }

  ValidationReport report;
  report.compact_support = kernel.compact();

  bool nonnegative = true;
  double worst_asymmetry = 0.0;
  for (const auto& z : samples) {
    const double v = kernel(z);
    const double mirrored = kernel(Point{-z[0], -z[1]});
    if (!std::isfinite(v) || !std::isfinite(mirrored)) {
      throw InvalidKernel(fmt::format("kernel value at z = ({}, {}) is not finite", z[0], z[1]));
    }
    if (v < 0.0) nonnegative = false;
    worst_asymmetry = std::max(worst_asymmetry, std::abs(v - mirrored));
  }
  report.checks.push_back({"H1-nonnegative", nonnegative,
                           nonnegative ? "all samples >= 0" : "negative sample found"});
  report.checks.push_back({"H1-symmetric", worst_asymmetry <= tol,
                           fmt::format("max |J(z) - J(-z)| = {:.3g}", worst_asymmetry)});

  report.mass = kernel_moment(kernel, 0.0, std::min(tol, 1e-10)).value;
  report.checks.push_back({"H1-unit-mass", std::abs(report.mass - 1.0) <= tol,
                           fmt::format("mass = {:.15g}", report.mass)});

  const double at_origin = kernel(Point{0.0, 0.0});
  report.checks.push_back(
      {"H2", at_origin > 0.0, fmt::format("J(0) = {:.6g}", at_origin)});

  const double order = dim + 1.0;
  const bool h5 = kernel.moment_finite(order);
  if (h5) report.moment_n_plus_1 = kernel_moment(kernel, order, 1e-10).value;
  report.checks.push_back(
      {"H5", h5,
       h5 ? fmt::format("int J |z|^{} = {:.6g}", order, report.moment_n_plus_1)
          : fmt::format("tail decay too slow for a finite moment of order {}", order)});
  return report;
}

}  // namespace nichewave
