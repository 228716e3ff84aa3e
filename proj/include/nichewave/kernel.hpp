#pragma once

#include <array>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nichewave {

/// Spatial point; only the first `dimension` coordinates are meaningful.
using Point = std::array<double, 2>;

double euclidean_norm(const Point& x, int dimension);

enum class KernelFamily {
  tent,
  truncated_quadratic,
  truncated_gaussian,
  exponential_tail,
  algebraic_tail,
  tabulated,
};

std::string_view to_string(KernelFamily family);
KernelFamily parse_kernel_family(std::string_view name);

/*
 * Dispersal kernel J on R^N (N = 1 or 2).
 *
 * Closed-form families are radial and normalized to unit mass analytically:
 *
 *   tent                 c (1 - |z|)^+
 *   truncated_quadratic  c (1 - |z|^2)^+
 *   truncated_gaussian   c exp(-|z|^2 / (2 s^2)) on |z| <= L          params {s, L}
 *   exponential_tail     c exp(-|z| / l)                              params {l}
 *   algebraic_tail       c (1 + |z|)^(-q), q > N                       params {q}
 *
 * Tabulated kernels are given by nodes and values and evaluated by linear
 * interpolation (signed coordinate for N = 1, radius for N = 2). They are
 * NOT renormalized; validate_kernel reports their mass.
 */
class Kernel {
 public:
  static Kernel tent(int dimension);
  static Kernel truncated_quadratic(int dimension);
  static Kernel truncated_gaussian(int dimension, double sigma, double cutoff);
  static Kernel exponential_tail(int dimension, double length);
  static Kernel algebraic_tail(int dimension, double exponent);
  static Kernel tabulated(int dimension, std::vector<double> nodes, std::vector<double> values);

  /// Builds a kernel from the flat parameter list used in config files.
  /// Tabulated kernels take interleaved (node, value) pairs.
  static Kernel from_params(KernelFamily family, int dimension, std::span<const double> params);

  double operator()(const Point& z) const;

  /// Radial profile J(r); for a 1D tabulated kernel this is the average of J(r) and J(-r).
  double radial(double r) const;

  KernelFamily family() const { return family_; }
  int dimension() const { return dimension_; }
  const std::vector<double>& params() const { return params_; }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& values() const { return values_; }

  /// +infinity for the tail families.
  double support_radius() const;
  bool compact() const { return support_radius() < std::numeric_limits<double>::infinity(); }

  /// Analytic upper bound on the mass outside the ball of given radius.
  double tail_mass(double radius) const;

  /// Analytic finiteness of the p-th absolute moment.
  bool moment_finite(double p) const;

  /// Analytic finiteness of the exponential moment int J(z) e^{alpha |z|} dz.
  bool exponential_moment_finite(double alpha) const;

 private:
  Kernel(KernelFamily family, int dimension, std::vector<double> params);

  double interpolate(double z) const;

  KernelFamily family_;
  int dimension_;
  std::vector<double> params_;
  double normalization_ = 1.0;
  std::vector<double> nodes_;
  std::vector<double> values_;
};

/// J_eps(z) = eps^{-N} J(z / eps) together with the dispersal budget rate alpha0 / eps^m.
class ScaledKernel {
 public:
  ScaledKernel(Kernel base, double epsilon, double m, double alpha0);

  double operator()(const Point& z) const;
  double radial(double r) const;

  const Kernel& base() const { return base_; }
  int dimension() const { return base_.dimension(); }
  double epsilon() const { return epsilon_; }
  double cost_exponent() const { return m_; }
  double alpha0() const { return alpha0_; }
  double rate() const { return rate_; }
  double support_radius() const { return epsilon_ * base_.support_radius(); }
  double tail_mass(double radius) const { return base_.tail_mass(radius / epsilon_); }

 private:
  Kernel base_;
  double epsilon_;
  double m_;
  double alpha0_;
  double rate_;
};

ScaledKernel rescale_kernel(const Kernel& kernel, double epsilon, double m, double alpha0);

struct MomentEstimate {
  double value = 0.0;
  double error = 0.0;
};

/// D_p(J) = int J(z) |z|^p dz by adaptive quadrature. Throws InfiniteMoment
/// when the analytic tail check says the integral diverges.
MomentEstimate kernel_moment(const Kernel& kernel, double p, double tol = 1e-12);

/// Same integral computed on the rescaled kernel samples (no eps^p shortcut).
MomentEstimate kernel_moment(const ScaledKernel& kernel, double p, double tol = 1e-12);

struct HypothesisCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<HypothesisCheck> checks;
  bool compact_support = false;
  double mass = 0.0;
  double moment_n_plus_1 = std::numeric_limits<double>::infinity();

  bool passed(std::string_view name) const;
  bool all_passed() const;
};

/// Checks H1 (nonnegative, symmetric, unit mass), H2 (J(0) > 0) and H5 (finite
/// (N+1)-th moment). Non-finite samples raise InvalidKernel.
ValidationReport validate_kernel(const Kernel& kernel, double tol = 1e-8);

}  // namespace nichewave
