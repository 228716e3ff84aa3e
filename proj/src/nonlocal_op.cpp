#include "nichewave/nonlocal_op.hpp"

#include <cmath>
#include <complex>
#include <mutex>

#include <fftw3.h>
#include <fmt/format.h>

#include "nichewave/error.hpp"

namespace nichewave {

std::string_view to_string(ConvolutionPath path) {
  switch (path) {
    case ConvolutionPath::automatic:
      return "automatic";
    case ConvolutionPath::direct:
      return "direct";
    case ConvolutionPath::fast:
      return "fast";
  }
  return "unknown";
}

struct DiscreteOperator::Stencil {
  int dimension = 1;
  bool torus = false;
  int reach = 0;  // ball: offsets in [-reach, reach]; torus: wrapped into [0, side)
  int side = 1;
  std::vector<double> values;  // dense over the offset box
  std::vector<std::array<int, 2>> nz_offsets;
  std::vector<double> nz_values;
  std::vector<std::ptrdiff_t> box_index;  // lattice cell -> grid point, -1 outside
  int cells = 0;
  double center = 0.0;
  double normalization = 1.0;
  double dropped_tail = 0.0;

  std::size_t slot(int di, int dj) const {
    if (torus) {
      di = ((di % side) + side) % side;
      dj = dimension == 2 ? ((dj % side) + side) % side : 0;
      return static_cast<std::size_t>(di) * (dimension == 2 ? side : 1) +
             static_cast<std::size_t>(dj);
    }
    const int w = 2 * reach + 1;
    return static_cast<std::size_t>(di + reach) * (dimension == 2 ? w : 1) +
           static_cast<std::size_t>(dimension == 2 ? dj + reach : 0);
  }
  bool in_range(int di, int dj) const {
    if (torus) return true;
    return std::abs(di) <= reach && (dimension == 1 || std::abs(dj) <= reach);
  }
};

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <class T>
std::unique_ptr<T[], FftwFree> fftw_buffer(std::size_t count) {
  return std::unique_ptr<T[], FftwFree>(static_cast<T*>(fftw_malloc(sizeof(T) * count)));
}

double find_tail_radius(const ScaledKernel& k, double tol) {
  double hi = k.epsilon();
  while (k.tail_mass(hi) > tol) {
    hi *= 2.0;
    if (hi > 1e12 * k.epsilon()) throw InvalidKernel("kernel tail mass does not decay");
  }
  double lo = 0.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (k.tail_mass(mid) > tol ? lo : hi) = mid;
  }
  return hi;
}

}  // namespace

struct DiscreteOperator::FftEngine {
  int dimension = 1;
  int length = 0;  // per axis
  std::size_t real_size = 0;
  std::size_t complex_size = 0;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::vector<std::complex<double>> kernel_hat;

  FftEngine(const Stencil& st, int length_, int dim) : dimension(dim), length(length_) {
    const auto L = static_cast<std::size_t>(length);
    real_size = dim == 2 ? L * L : L;
    complex_size = dim == 2 ? L * (L / 2 + 1) : L / 2 + 1;
    auto in = fftw_buffer<double>(real_size);
    auto out = fftw_buffer<fftw_complex>(complex_size);
    {
      std::lock_guard lock(planner_mutex());
      if (dim == 1) {
        forward = fftw_plan_dft_r2c_1d(length, in.get(), out.get(), FFTW_ESTIMATE);
        backward = fftw_plan_dft_c2r_1d(length, out.get(), in.get(), FFTW_ESTIMATE);
      } else {
        forward = fftw_plan_dft_r2c_2d(length, length, in.get(), out.get(), FFTW_ESTIMATE);
        backward = fftw_plan_dft_c2r_2d(length, length, out.get(), in.get(), FFTW_ESTIMATE);
      }
    }
    std::fill(in.get(), in.get() + real_size, 0.0);
    auto wrap = [&](int d) { return static_cast<std::size_t>(((d % length) + length) % length); };
    for (std::size_t k = 0; k < st.nz_offsets.size(); ++k) {
      const auto [di, dj] = st.nz_offsets[k];
      const std::size_t pos = dim == 2 ? wrap(di) * L + wrap(dj) : wrap(di);
      in[pos] += st.nz_values[k];
    }
    fftw_execute_dft_r2c(forward, in.get(), out.get());
    kernel_hat.resize(complex_size);
    for (std::size_t k = 0; k < complex_size; ++k) kernel_hat[k] = {out[k][0], out[k][1]};
  }

  ~FftEngine() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }

  FftEngine(const FftEngine&) = delete;
  FftEngine& operator=(const FftEngine&) = delete;
};

DiscreteOperator::DiscreteOperator(Grid grid, ScaledKernel kernel, const GrowthProfile& growth,
                                   OperatorOptions options)
    : DiscreteOperator(grid, std::move(kernel), growth.sample(grid), options) {}

DiscreteOperator::DiscreteOperator(Grid grid, ScaledKernel kernel, GridFunction a,
                                   OperatorOptions options)
    : grid_(std::move(grid)), kernel_(std::move(kernel)), a_(std::move(a)), options_(options) {
  if (kernel_.dimension() != grid_.dimension) {
    throw DimensionMismatch(fmt::format("kernel dimension {} does not match grid dimension {}",
                                        kernel_.dimension(), grid_.dimension));
  }
  if (static_cast<std::size_t>(a_.size()) != grid_.size()) {
    throw DimensionMismatch("growth samples do not match the grid");
  }
  const double h = grid_.spacing;
  if (kernel_.support_radius() < h) {
    throw UnderResolvedKernel(fmt::format(
        "kernel support {} is finer than the grid spacing {}", kernel_.support_radius(), h));
  }

  const int N = grid_.dimension;
  auto st = std::make_shared<Stencil>();
  st->dimension = N;
  st->torus = grid_.topology == Topology::torus;
  st->cells = grid_.cells_per_axis();
  st->reach = st->cells - 1;
  st->side = st->torus ? st->cells : 2 * st->reach + 1;
  st->values.assign(N == 2 ? static_cast<std::size_t>(st->side) * st->side
                           : static_cast<std::size_t>(st->side),
                    0.0);

  const bool compact = kernel_.base().compact();
  const double keep = compact ? kernel_.support_radius() * (1.0 + 1e-12)
                              : find_tail_radius(kernel_, options_.tail_tol);
  const int cap = N == 1 ? (1 << 22) : 2048;
  const int span = static_cast<int>(std::min<double>(std::floor(keep / h), cap));
  const double covered = (span + 0.5) * h;

  const double wN = grid_.cell_weight();
  double Z = 0.0;
  const int jspan = N == 2 ? span : 0;
  for (int di = -span; di <= span; ++di) {
    for (int dj = -jspan; dj <= jspan; ++dj) {
      const Point z{di * h, dj * h};
      if (euclidean_norm(z, N) > keep) continue;
      const double v = wN * kernel_(z);
      if (!std::isfinite(v) || v < 0.0) {
        throw InvalidKernel(fmt::format("kernel sample {} at offset ({}, {})", v, di, dj));
      }
      Z += v;
      if (v != 0.0 && st->in_range(di, dj)) st->values[st->slot(di, dj)] += v;
    }
  }
  // grid span capped before the tail radius: account for the unsampled mass
  if (!compact && covered < keep) Z += kernel_.tail_mass(covered);
  if (!(Z > 0.0)) throw InvalidKernel("kernel has zero discrete mass on this grid");
  for (double& v : st->values) v /= Z;
  st->normalization = Z;

  // mass of J_eps the operator should see but does not; a ball never looks
  // further than its own diameter
  const double sampled = std::min(keep, covered);
  const double reach_radius = st->reach * h * std::sqrt(double(N));
  if (!compact && (st->torus || sampled < reach_radius)) {
    st->dropped_tail = kernel_.tail_mass(sampled);
  }

  const int lo = st->torus ? 0 : -st->reach;
  const int hi = st->torus ? st->side - 1 : st->reach;
  for (int di = lo; di <= hi; ++di) {
    for (int dj = (N == 2 ? lo : 0); dj <= (N == 2 ? hi : 0); ++dj) {
      const double v = st->values[st->slot(di, dj)];
      if (v != 0.0) {
        st->nz_offsets.push_back({di, dj});
        st->nz_values.push_back(v);
      }
    }
  }
  st->center = st->values[st->slot(0, 0)];

  const auto cells = static_cast<std::size_t>(st->cells);
  st->box_index.assign(N == 2 ? cells * cells : cells, -1);
  for (std::size_t k = 0; k < grid_.size(); ++k) {
    const auto& l = grid_.lattice[k];
    st->box_index[static_cast<std::size_t>(l[0]) * (N == 2 ? cells : 1) +
                  static_cast<std::size_t>(l[1])] = static_cast<std::ptrdiff_t>(k);
  }
  stencil_ = st;
  fft_ = std::make_shared<FftEngine>(*st, st->torus ? st->cells : 2 * st->cells, N);
}

double DiscreteOperator::stencil_center() const { return stencil_->center; }

double DiscreteOperator::stencil(int di, int dj) const {
  if (!stencil_->in_range(di, dj)) return 0.0;
  return stencil_->values[stencil_->slot(di, grid_.dimension == 2 ? dj : 0)];
}

std::size_t DiscreteOperator::stencil_nonzeros() const { return stencil_->nz_values.size(); }

double DiscreteOperator::normalization() const { return stencil_->normalization; }

double DiscreteOperator::truncation_error() const { return rate() * 2.0 * stencil_->dropped_tail; }

void DiscreteOperator::check(const GridFunction& u) const {
  if (static_cast<std::size_t>(u.size()) != size()) {
    throw DimensionMismatch(
        fmt::format("grid function has {} entries, operator has {}", u.size(), size()));
  }
}

GridFunction DiscreteOperator::convolve(const GridFunction& u, ConvolutionPath path) const {
  check(u);
  if (path == ConvolutionPath::automatic) {
    // the sparse sum wins until the stencil covers a sizeable part of the grid
    const double direct_cost = double(stencil_nonzeros()) * double(size());
    const double fast_cost = 12.0 * double(fft_->real_size) * std::log2(double(fft_->real_size) + 2);
    path = direct_cost <= fast_cost ? ConvolutionPath::direct : ConvolutionPath::fast;
  }
  return path == ConvolutionPath::direct ? convolve_direct(u) : convolve_fast(u);
}

GridFunction DiscreteOperator::convolve_direct(const GridFunction& u) const {
  const Stencil& st = *stencil_;
  const int cells = st.cells;
  const bool two = grid_.dimension == 2;
  GridFunction out = GridFunction::Zero(u.size());
  for (std::size_t i = 0; i < size(); ++i) {
    const int li = grid_.lattice[i][0];
    const int lj = grid_.lattice[i][1];
    double acc = 0.0;
    for (std::size_t k = 0; k < st.nz_values.size(); ++k) {
      int pi = li - st.nz_offsets[k][0];
      int pj = two ? lj - st.nz_offsets[k][1] : 0;
      if (st.torus) {
        pi = ((pi % cells) + cells) % cells;
        if (two) pj = ((pj % cells) + cells) % cells;
      } else if (pi < 0 || pi >= cells || pj < 0 || pj >= (two ? cells : 1)) {
        continue;
      }
      const std::ptrdiff_t j =
          st.box_index[static_cast<std::size_t>(pi) * (two ? cells : 1) +
                       static_cast<std::size_t>(pj)];
      if (j >= 0) acc += st.nz_values[k] * u[j];
    }
    out[static_cast<Eigen::Index>(i)] = acc;
  }
  return out;
}

GridFunction DiscreteOperator::convolve_fast(const GridFunction& u) const {
  const FftEngine& f = *fft_;
  const auto L = static_cast<std::size_t>(f.length);
  const bool two = grid_.dimension == 2;
  auto in = fftw_buffer<double>(f.real_size);
  auto spec = fftw_buffer<fftw_complex>(f.complex_size);
  std::fill(in.get(), in.get() + f.real_size, 0.0);
  auto pos = [&](std::size_t i) {
    const auto& l = grid_.lattice[i];
    return two ? static_cast<std::size_t>(l[0]) * L + static_cast<std::size_t>(l[1])
               : static_cast<std::size_t>(l[0]);
  };
  for (std::size_t i = 0; i < size(); ++i) in[pos(i)] = u[static_cast<Eigen::Index>(i)];
  fftw_execute_dft_r2c(f.forward, in.get(), spec.get());
  for (std::size_t k = 0; k < f.complex_size; ++k) {
    const std::complex<double> z(spec[k][0], spec[k][1]);
    const auto p = z * f.kernel_hat[k];
    spec[k][0] = p.real();
    spec[k][1] = p.imag();
  }
  fftw_execute_dft_c2r(f.backward, spec.get(), in.get());
  const double scale = 1.0 / static_cast<double>(f.real_size);
  GridFunction out(u.size());
  for (std::size_t i = 0; i < size(); ++i) out[static_cast<Eigen::Index>(i)] = in[pos(i)] * scale;
  return out;
}

GridFunction DiscreteOperator::apply(const GridFunction& u, bool include_growth,
                                     ConvolutionPath path) const {
  GridFunction out = rate() * (convolve(u, path) - u);
  if (include_growth) out += a_.cwiseProduct(u);
  return out;
}

GridFunction DiscreteOperator::row_mass() const {
  return convolve_direct(GridFunction::Ones(static_cast<Eigen::Index>(size())));
}

DiscreteOperator DiscreteOperator::with_growth(GridFunction a) const {
  check(a);
  DiscreteOperator copy = *this;
  copy.a_ = std::move(a);
  return copy;
}

Eigen::MatrixXd DiscreteOperator::assemble_matrix() const {
  const std::size_t n = size();
  if (n > options_.dense_limit) {
    throw ResourceLimit(
        fmt::format("{} grid points exceed the dense limit {}", n, options_.dense_limit));
  }
  const auto N = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd A(N, N);
  const bool two = grid_.dimension == 2;
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto& li = grid_.lattice[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < N; ++j) {
      const auto& lj = grid_.lattice[static_cast<std::size_t>(j)];
      A(i, j) = rate() * stencil(li[0] - lj[0], two ? li[1] - lj[1] : 0);
    }
    A(i, i) = rate() * (stencil_center() - 1.0) + a_[i];
  }
  return A;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& A, const std::vector<double>& weights) {
  Eigen::MatrixXd S = A;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      S(i, j) = A(i, j) * std::sqrt(weights[static_cast<std::size_t>(i)] /
                                    weights[static_cast<std::size_t>(j)]);
    }
  }
  return S;
}

}  // namespace nichewave
