#include "nichewave/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "nichewave/error.hpp"

namespace nichewave {

std::string_view to_string(Topology topology) {
  return topology == Topology::torus ? "torus" : "ball-truncated";
}

Topology parse_topology(std::string_view name) {
  if (name == "torus") return Topology::torus;
  if (name == "ball-truncated" || name == "ball") return Topology::ball_truncated;
  throw InvalidArgument(fmt::format("unknown topology '{}'", name));
}

double Grid::cell_weight() const { return std::pow(spacing, dimension); }

double Grid::total_weight() const {
  double total = 0.0;
  for (double w : weights) total += w;
  return total;
}

GridFunction Grid::sample(const std::function<double(const Point&)>& f) const {
  GridFunction u(static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) u[static_cast<Eigen::Index>(i)] = f(points[i]);
  return u;
}

double Grid::integrate(const GridFunction& u) const {
  if (static_cast<std::size_t>(u.size()) != size()) {
    throw DimensionMismatch("grid function size does not match the grid");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < size(); ++i) total += weights[i] * u[static_cast<Eigen::Index>(i)];
  return total;
}

double Grid::norm_l1(const GridFunction& u) const { return integrate(u.cwiseAbs()); }

double Grid::norm_l2(const GridFunction& u) const {
  return std::sqrt(integrate(u.cwiseAbs2()));
}

Grid build_grid(int dimension, double radius, double spacing, Topology topology,
                int max_per_axis) {
  if (dimension != 1 && dimension != 2) {
    throw InvalidArgument(fmt::format("grid dimension must be 1 or 2, got {}", dimension));
  }
  if (!(radius > 0.0) || !(spacing > 0.0) || !(spacing < radius)) {
    throw InvalidArgument(
        fmt::format("grid needs 0 < h < R, got R = {}, h = {}", radius, spacing));
  }
  const double ratio = radius / spacing;
  if (2.0 * ratio > max_per_axis) {
    throw ResourceLimit(fmt::format("grid with R/h = {} exceeds {} points per axis", ratio,
                                    max_per_axis));
  }
  const int K = static_cast<int>(std::floor(ratio + 1e-9));
  if (topology == Topology::torus && std::abs(ratio - K) > 1e-9 * ratio) {
    throw InvalidArgument("torus grids need R/h to be an integer");
  }

  Grid g;
  g.dimension = dimension;
  g.radius = radius;
  g.spacing = spacing;
  g.topology = topology;
  g.half_cells = K;
  const double w = g.cell_weight();
  const double limit = radius * (1.0 + 1e-12);
  const int cells = 2 * K;
  const int rows = dimension == 2 ? cells : 1;
  for (int i = 0; i < cells; ++i) {
    for (int j = 0; j < rows; ++j) {
      const Point x{g.center(i), dimension == 2 ? g.center(j) : 0.0};
      if (topology == Topology::ball_truncated && euclidean_norm(x, dimension) > limit) continue;
      g.points.push_back(x);
      g.lattice.push_back({i, dimension == 2 ? j : 0});
      g.weights.push_back(w);
    }
  }
  return g;
}

std::vector<std::ptrdiff_t> embed_indices(const Grid& inner, const Grid& outer) {
  if (inner.dimension != outer.dimension ||
      std::abs(inner.spacing - outer.spacing) > 1e-12 * outer.spacing) {
    throw DimensionMismatch("nested grids need the same dimension and spacing");
  }
  const int shift = outer.half_cells - inner.half_cells;
  const int cells = outer.cells_per_axis();
  std::vector<std::ptrdiff_t> box(static_cast<std::size_t>(cells) *
                                      (outer.dimension == 2 ? cells : 1),
                                  -1);
  auto key = [&](int i, int j) {
    return static_cast<std::size_t>(i) * (outer.dimension == 2 ? cells : 1) +
           static_cast<std::size_t>(j);
  };
  for (std::size_t k = 0; k < outer.size(); ++k) {
    box[key(outer.lattice[k][0], outer.lattice[k][1])] = static_cast<std::ptrdiff_t>(k);
  }
  std::vector<std::ptrdiff_t> map(inner.size(), -1);
  for (std::size_t k = 0; k < inner.size(); ++k) {
    const int i = inner.lattice[k][0] + shift;
    const int j = inner.dimension == 2 ? inner.lattice[k][1] + shift : 0;
    if (i < 0 || i >= cells || j < 0 || (outer.dimension == 2 && j >= cells)) continue;
    map[k] = box[key(i, j)];
  }
  return map;
}

GridFunction restrict_to(const GridFunction& u, const std::vector<std::ptrdiff_t>& map) {
  GridFunction out(static_cast<Eigen::Index>(map.size()));
  for (std::size_t k = 0; k < map.size(); ++k) {
    if (map[k] < 0) throw DimensionMismatch("inner grid point has no outer counterpart");
    out[static_cast<Eigen::Index>(k)] = u[map[k]];
  }
  return out;
}

GridFunction extend_to(const GridFunction& u, const std::vector<std::ptrdiff_t>& map,
                       std::size_t outer_size, double fill) {
  GridFunction out = GridFunction::Constant(static_cast<Eigen::Index>(outer_size), fill);
  for (std::size_t k = 0; k < map.size(); ++k) {
    if (map[k] >= 0) out[map[k]] = u[static_cast<Eigen::Index>(k)];
  }
  return out;
}

double interpolate(const Grid& grid, const GridFunction& u, const Point& x, double outside) {
  const int cells = grid.cells_per_axis();
  const bool two = grid.dimension == 2;
  auto lookup = [&](int i, int j) -> double {
    if (grid.topology == Topology::torus) {
      i = ((i % cells) + cells) % cells;
      j = two ? ((j % cells) + cells) % cells : 0;
    }
    if (i < 0 || i >= cells || (two && (j < 0 || j >= cells))) return outside;
    // ball lattices are row-major over the kept cells; search the column
    const std::array<int, 2> key{i, two ? j : 0};
    auto it = std::lower_bound(grid.lattice.begin(), grid.lattice.end(), key);
    if (it == grid.lattice.end() || *it != key) return outside;
    return u[it - grid.lattice.begin()];
  };
  // fractional cell coordinate: centre of cell k sits at k + 1/2
  auto coord = [&](double v) { return v / grid.spacing + grid.half_cells - 0.5; };
  const double fx = coord(x[0]);
  const int i0 = static_cast<int>(std::floor(fx));
  const double tx = fx - i0;
  if (!two) return (1.0 - tx) * lookup(i0, 0) + tx * lookup(i0 + 1, 0);
  const double fy = coord(x[1]);
  const int j0 = static_cast<int>(std::floor(fy));
  const double ty = fy - j0;
  return (1.0 - tx) * ((1.0 - ty) * lookup(i0, j0) + ty * lookup(i0, j0 + 1)) +
         tx * ((1.0 - ty) * lookup(i0 + 1, j0) + ty * lookup(i0 + 1, j0 + 1));
}

GridFunction transfer(const Grid& from, const GridFunction& u, const Grid& to, double outside) {
  return to.sample([&](const Point& x) { return interpolate(from, u, x, outside); });
}

}  // namespace nichewave
