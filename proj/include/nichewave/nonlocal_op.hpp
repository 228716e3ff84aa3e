#pragma once

#include <cstddef>
#include <memory>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "nichewave/grid.hpp"
#include "nichewave/growth.hpp"
#include "nichewave/kernel.hpp"

namespace nichewave {

enum class ConvolutionPath { automatic, direct, fast };

std::string_view to_string(ConvolutionPath path);

struct OperatorOptions {
  std::size_t dense_limit = 8192;
  // fat-tailed kernels are cut where the tail mass drops below this
  double tail_tol = 1e-10;
};

/*
 * rate (J_eps * u - u) + a u on a grid, with the kernel integral truncated to
 * the grid (ball) or wrapped (torus).
 *
 * Kernel weights are s_d = h^N J_eps(d h) / Z over lattice offsets d, where Z
 * makes the full-lattice discrete mass exactly 1. On a torus the weights are
 * periodized over all images.
 *
 * The direct path sums over the nonzero stencil and keeps full relative
 * accuracy on tiny entries (the spectral code relies on that). The fast path
 * is an FFT convolution (zero-padded for balls, circular for tori).
 */
class DiscreteOperator {
 public:
  DiscreteOperator(Grid grid, ScaledKernel kernel, GridFunction a, OperatorOptions options = {});
  DiscreteOperator(Grid grid, ScaledKernel kernel, const GrowthProfile& growth,
                   OperatorOptions options = {});

  const Grid& grid() const { return grid_; }
  const ScaledKernel& kernel() const { return kernel_; }
  const GridFunction& a() const { return a_; }
  const OperatorOptions& options() const { return options_; }
  double rate() const { return kernel_.rate(); }
  std::size_t size() const { return grid_.size(); }

  double stencil_center() const;
  // Normalized weight for a lattice offset (wrapped on a torus).
  double stencil(int di, int dj = 0) const;
  std::size_t stencil_nonzeros() const;
  double normalization() const;

  GridFunction convolve(const GridFunction& u,
                        ConvolutionPath path = ConvolutionPath::automatic) const;
  GridFunction apply(const GridFunction& u, bool include_growth = true,
                     ConvolutionPath path = ConvolutionPath::automatic) const;

  // k_i = sum_j s(x_i - x_j): discrete mass of J_eps over the domain seen from x_i.
  GridFunction row_mass() const;

  DiscreteOperator with_growth(GridFunction a) const;

  // Sup-norm bound on the operator change caused by cutting a fat tail.
  double truncation_error() const;

  Eigen::MatrixXd assemble_matrix() const;

  struct Stencil;
  struct FftEngine;

 private:
  void check(const GridFunction& u) const;
  GridFunction convolve_direct(const GridFunction& u) const;
  GridFunction convolve_fast(const GridFunction& u) const;

  Grid grid_;
  ScaledKernel kernel_;
  GridFunction a_;
  OperatorOptions options_;
  std::shared_ptr<const Stencil> stencil_;
  std::shared_ptr<const FftEngine> fft_;
};

// Row-wise symmetric form W^{1/2} A W^{-1/2}.
Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& A, const std::vector<double>& weights);

}  // namespace nichewave
