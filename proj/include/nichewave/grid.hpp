#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "nichewave/kernel.hpp"

namespace nichewave {

using GridFunction = Eigen::VectorXd;

enum class Topology { ball_truncated, torus };

std::string_view to_string(Topology topology);
Topology parse_topology(std::string_view name);

// Cell-centred lattice on [-R, R)^N. Cell k along an axis (0 <= k < 2K) has
// centre (k - K + 1/2) h. Ball grids keep the centres with |x| <= R; torus
// grids keep the whole box and wrap.
struct Grid {
  int dimension = 1;
  double radius = 0.0;
  double spacing = 0.0;
  Topology topology = Topology::ball_truncated;
  int half_cells = 0;  // K
  std::vector<Point> points;
  std::vector<std::array<int, 2>> lattice;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
  int cells_per_axis() const { return 2 * half_cells; }
  double cell_weight() const;
  double center(int k) const { return (k - half_cells + 0.5) * spacing; }
  double total_weight() const;

  GridFunction sample(const std::function<double(const Point&)>& f) const;
  double integrate(const GridFunction& u) const;
  double norm_l1(const GridFunction& u) const;
  double norm_l2(const GridFunction& u) const;
};

Grid build_grid(int dimension, double radius, double spacing, Topology topology,
                int max_per_axis = 8192);

// Index into `outer` of every point of `inner` (same spacing, outer at least as
// large); -1 for points with no counterpart.
std::vector<std::ptrdiff_t> embed_indices(const Grid& inner, const Grid& outer);

// Restriction of an outer-grid function to the inner grid.
GridFunction restrict_to(const GridFunction& u, const std::vector<std::ptrdiff_t>& map);

// Extension of an inner-grid function by `fill` to the outer grid.
GridFunction extend_to(const GridFunction& u, const std::vector<std::ptrdiff_t>& map,
                       std::size_t outer_size, double fill = 0.0);

// Piecewise-linear interpolation of a grid function at x (bilinear in 2D).
// Lattice cells missing from the grid count as `outside`.
double interpolate(const Grid& grid, const GridFunction& u, const Point& x, double outside = 0.0);

// Samples `u` (living on `from`) at every point of `to`.
GridFunction transfer(const Grid& from, const GridFunction& u, const Grid& to,
                      double outside = 0.0);

}  // namespace nichewave
