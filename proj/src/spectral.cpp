#include "nichewave/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include "nichewave/error.hpp"

namespace nichewave {

std::string_view to_string(SpectralMethod method) {
  switch (method) {
    case SpectralMethod::perron_cw:
      return "perron-cw";
    case SpectralMethod::rayleigh:
      return "rayleigh";
    case SpectralMethod::fd_laplacian:
      return "fd-laplacian";
  }
  return "unknown";
}

namespace {

using Apply = std::function<GridFunction(const GridFunction&)>;

// Power iteration on B = A + cI. B is entrywise nonnegative and irreducible,
// so for positive phi: min (B phi)_i / phi_i <= rho(B) <= max (B phi)_i / phi_i.
SpectralEstimate collatz_wielandt(const Apply& A, Eigen::Index n, double shift,
                                  const std::vector<double>& weights,
                                  const SpectralOptions& opts) {
  GridFunction phi = GridFunction::Ones(n);
  if (opts.initial && opts.initial->size() == n && opts.initial->minCoeff() > 0.0) {
    phi = *opts.initial / opts.initial->maxCoeff();
  }
  double lo = 0.0, hi = 0.0;
  GridFunction y;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    y = A(phi) + shift * phi;
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = y[i] / phi[i];
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(y.minCoeff() > 0.0)) {
      throw NumericalFailure(
          "power iteration lost positivity (entries underflowed or overflowed)");
    }
    if (hi - lo <= opts.tol) break;
    phi = y / y.maxCoeff();
  }
  if (it == opts.max_iterations) {
    throw NonConvergence("Collatz-Wielandt bracket did not close", shift - hi, shift - lo, it);
  }
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(i)];
    num += w * phi[i] * y[i];
    den += w * phi[i] * phi[i];
  }
  const double rho = std::clamp(num / den, lo, hi);
  SpectralEstimate est;
  est.method = SpectralMethod::perron_cw;
  est.iterations = it + 1;
  est.lower = shift - hi;
  est.upper = shift - lo;
  est.value = shift - rho;
  est.eigenvector = phi;
  est.residual = (A(phi) + est.value * phi).cwiseAbs().maxCoeff();
  return est;
}

bool connected(const Eigen::MatrixXd& A) {
  const Eigen::Index n = A.rows();
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::queue<Eigen::Index> q;
  q.push(0);
  seen[0] = 1;
  Eigen::Index count = 1;
  while (!q.empty()) {
    const auto i = q.front();
    q.pop();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i && A(i, j) > 0.0 && !seen[static_cast<std::size_t>(j)]) {
        seen[static_cast<std::size_t>(j)] = 1;
        ++count;
        q.push(j);
      }
    }
  }
  return count == n;
}

// Largest eigenvalue of a symmetric operator, restarted Lanczos.
struct LanczosResult {
  double theta = 0.0;
  GridFunction vector;
  double residual = 0.0;
  int iterations = 0;
};

LanczosResult lanczos_max(const Apply& S, Eigen::Index n, const SpectralOptions& opts) {
  const Eigen::Index kmax = std::min<Eigen::Index>(n, 300);
  GridFunction start = GridFunction::Ones(n);
  if (opts.initial && opts.initial->size() == n) start = *opts.initial;
  start.normalize();
  LanczosResult best;
  int total = 0;
  const int restarts = 60;
  for (int restart = 0; restart < restarts; ++restart) {
    Eigen::MatrixXd V(n, kmax);
    std::vector<double> alpha, beta;
    V.col(0) = start;
    Eigen::Index k = 0;
    for (; k < kmax; ++k) {
      GridFunction w = S(V.col(k));
      ++total;
      const double a = V.col(k).dot(w);
      alpha.push_back(a);
      // full reorthogonalization, twice
      for (int pass = 0; pass < 2; ++pass) {
        w -= V.leftCols(k + 1) * (V.leftCols(k + 1).transpose() * w);
      }
      const double b = w.norm();
      if (k + 1 == kmax || b <= 1e-14 * std::max(1.0, std::abs(a))) {
        ++k;
        break;
      }
      beta.push_back(b);
      V.col(k + 1) = w / b;
    }
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      T(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < k) T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(T);
    const double theta = eig.eigenvalues()(k - 1);
    GridFunction y = V.leftCols(k) * eig.eigenvectors().col(k - 1);
    y.normalize();
    const GridFunction r = S(y) - theta * y;
    ++total;
    best.theta = theta;
    best.vector = y;
    best.residual = r.norm();
    best.iterations = total;
    if (best.residual <= opts.tol) return best;
    start = y;
  }
  throw NonConvergence("Lanczos did not reach the residual tolerance", -best.theta - best.residual,
                       -best.theta, total);
}

SpectralEstimate lanczos_estimate(const Apply& S, Eigen::Index n,
                                  const std::function<GridFunction(const GridFunction&)>& unsym,
                                  const SpectralOptions& opts) {
  auto res = lanczos_max(S, n, opts);
  SpectralEstimate est;
  est.method = SpectralMethod::rayleigh;
  est.iterations = res.iterations;
  est.value = -res.theta;
  est.upper = -res.theta;
  est.lower = -res.theta - res.residual;
  GridFunction v = unsym(res.vector);
  if (v.sum() < 0.0) v = -v;
  v /= v.cwiseAbs().maxCoeff();
  est.eigenvector = v;
  est.residual = res.residual;
  return est;
}

}  // namespace

SpectralEstimate principal_eigenvalue(const DiscreteOperator& op, const SpectralOptions& opts) {
  const bool two = op.grid().dimension == 2;
  if (op.size() > 1 && !(op.stencil(1, 0) > 0.0 && (!two || op.stencil(0, 1) > 0.0))) {
    throw IrreducibleOperator(
        "kernel does not couple neighbouring grid points; the operator is reducible");
  }
  const double shift = 1.0 + op.a().cwiseAbs().maxCoeff() + op.rate();
  auto A = [&](const GridFunction& u) { return op.apply(u, true, ConvolutionPath::direct); };
  // Any positive vector gives valid Collatz-Wielandt bounds, so start from the
  // Lanczos eigenvector: the core is already converged and the hostile tails
  // relax within a few dozen power steps.
  SpectralOptions cw = opts;
  if (!cw.initial && op.size() >= 32) {
    try {
      SpectralOptions lz;
      lz.tol = std::max(1e-2 * opts.tol, 1e-12);
      const GridFunction v = rayleigh_lambda_v(op, lz).eigenvector.cwiseAbs();
      cw.initial = v.cwiseMax(1e-14 * v.maxCoeff());
    } catch (const NonConvergence&) {
    }
  }
  auto est = collatz_wielandt(A, static_cast<Eigen::Index>(op.size()), shift, op.grid().weights,
                              cw);
  const double widen = op.truncation_error();
  est.lower -= widen;
  est.upper += widen;
  est.eigenfunction_flag = est.upper < op.rate() - op.a().maxCoeff();
  return est;
}

SpectralEstimate principal_eigenvalue(const Eigen::MatrixXd& A, const SpectralOptions& opts) {
  if (A.rows() != A.cols() || A.rows() == 0) throw DimensionMismatch("matrix must be square");
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      if (i != j && A(i, j) < 0.0) {
        throw InvalidArgument("off-diagonal entries must be nonnegative for Perron iteration");
      }
    }
  }
  if (!connected(A)) throw IrreducibleOperator("matrix graph is not connected");
  const double shift = 1.0 + A.diagonal().cwiseAbs().maxCoeff();
  auto apply = [&](const GridFunction& u) -> GridFunction { return A * u; };
  return collatz_wielandt(apply, A.rows(), shift, {}, opts);
}

SpectralEstimate rayleigh_lambda_v(const DiscreteOperator& op, const SpectralOptions& opts) {
  // uniform weights: the operator is symmetric in the plain inner product
  auto S = [&](const GridFunction& u) { return op.apply(u, true, ConvolutionPath::automatic); };
  auto id = [](const GridFunction& v) { return v; };
  auto est = lanczos_estimate(S, static_cast<Eigen::Index>(op.size()), id, opts);
  const double widen = op.truncation_error();
  est.lower -= widen;
  est.upper += widen;
  est.residual = (op.apply(est.eigenvector) + est.value * est.eigenvector).cwiseAbs().maxCoeff();
  return est;
}

SpectralEstimate rayleigh_lambda_v(const Eigen::MatrixXd& A, const std::vector<double>& weights,
                                   const SpectralOptions& opts) {
  if (static_cast<std::size_t>(A.rows()) != weights.size()) {
    throw DimensionMismatch("weights do not match the matrix");
  }
  const Eigen::MatrixXd S = symmetrize(A, weights);
  GridFunction sw(A.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i) sw[i] = std::sqrt(weights[std::size_t(i)]);
  auto apply = [&](const GridFunction& u) -> GridFunction { return S * u; };
  auto unsym = [&](const GridFunction& v) -> GridFunction { return v.cwiseQuotient(sw); };
  auto est = lanczos_estimate(apply, A.rows(), unsym, opts);
  est.residual = (A * est.eigenvector + est.value * est.eigenvector).cwiseAbs().maxCoeff();
  return est;
}

RExtrapolation lambda_p_extrapolate_R(const std::function<DiscreteOperator(double)>& make,
                                      const std::vector<double>& schedule, double tol,
                                      const SpectralOptions& opts) {
  if (schedule.empty()) throw InvalidArgument("R schedule is empty");
  if (!std::is_sorted(schedule.begin(), schedule.end()) ||
      std::adjacent_find(schedule.begin(), schedule.end()) != schedule.end()) {
    throw InvalidArgument("R schedule must be strictly increasing");
  }
  RExtrapolation out;
  std::optional<Grid> previous;
  SpectralOptions local = opts;
  for (double R : schedule) {
    DiscreteOperator op = make(R);
    if (previous) {
      // warm start from the previous Perron vector, flat continuation outside
      const auto map = embed_indices(*previous, op.grid());
      const GridFunction& last = out.estimates.back().eigenvector;
      local.initial = extend_to(last, map, op.size(), last.minCoeff());
    }
    auto est = principal_eigenvalue(op, local);
    if (!out.estimates.empty()) {
      const auto& prev = out.estimates.back();
      const double slack = prev.width() + est.width();
      if (est.value > prev.value + slack) {
        throw DiscretizationInconsistency(fmt::format(
            "lambda_p rose from {:.12g} (R = {}) to {:.12g} (R = {})", prev.value,
            out.radii.back(), est.value, R));
      }
    }
    previous = op.grid();
    out.radii.push_back(R);
    out.estimates.push_back(std::move(est));
    const std::size_t k = out.estimates.size();
    if (k >= 2) {
      const double drop = out.estimates[k - 2].value - out.estimates[k - 1].value;
      if (drop <= tol) {
        out.converged = true;
        break;
      }
    }
  }
  const auto& last = out.estimates.back();
  const double drop =
      out.estimates.size() >= 2
          ? out.estimates[out.estimates.size() - 2].value - last.value
          : std::numeric_limits<double>::infinity();
  out.value = last.value;
  out.uncertainty = std::max(drop, 0.0) + last.width();
  // the limit can only lie below the last value
  out.upper = last.upper;
  out.lower = last.lower - std::max(drop, 0.0);
  return out;
}

ScalingReport scaling_invariance_check(const Kernel& kernel, const GrowthProfile& growth,
                                       double radius, double spacing, Topology topology,
                                       double epsilon, const SpectralOptions& opts) {
  const int N = kernel.dimension();
  ScalingReport rep;
  rep.epsilon = epsilon;
  {
    Grid g = build_grid(N, radius, spacing, topology);
    DiscreteOperator op(g, ScaledKernel(kernel, 1.0, 0.0, 1.0), growth.sample(g));
    rep.original = principal_eigenvalue(op, opts);
  }
  {
    Grid g = build_grid(N, epsilon * radius, epsilon * spacing, topology);
    GridFunction a = g.sample([&](const Point& x) {
      return growth.a(Point{x[0] / epsilon, x[1] / epsilon}, N);
    });
    DiscreteOperator op(g, ScaledKernel(kernel, epsilon, 0.0, 1.0), std::move(a));
    rep.scaled = principal_eigenvalue(op, opts);
  }
  rep.difference = std::abs(rep.original.value - rep.scaled.value);
  rep.allowed = rep.original.width() + rep.scaled.width();
  rep.passed = rep.difference <= rep.allowed;
  return rep;
}

Eigen::SparseMatrix<double> fd_neg_laplacian(const Grid& grid, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("diffusion coefficient must be positive");
  const int N = grid.dimension;
  const int cells = grid.cells_per_axis();
  const double c = sigma / (grid.spacing * grid.spacing);
  std::vector<std::ptrdiff_t> box(static_cast<std::size_t>(cells) * (N == 2 ? cells : 1), -1);
  auto key = [&](int i, int j) {
    return static_cast<std::size_t>(i) * (N == 2 ? cells : 1) + static_cast<std::size_t>(j);
  };
  for (std::size_t k = 0; k < grid.size(); ++k) {
    box[key(grid.lattice[k][0], grid.lattice[k][1])] = static_cast<std::ptrdiff_t>(k);
  }
  std::vector<Eigen::Triplet<double>> trip;
  const int steps[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    double diag = 0.0;
    for (int s = 0; s < 2 * N; ++s) {
      const int i = grid.lattice[k][0] + steps[s][0];
      const int j = grid.lattice[k][1] + steps[s][1];
      const bool inside = i >= 0 && i < cells && j >= 0 && j < (N == 2 ? cells : 1);
      const std::ptrdiff_t nb = inside ? box[key(i, j)] : -1;
      if (grid.topology == Topology::torus && nb < 0) {
        const int wi = (i + cells) % cells;
        const int wj = N == 2 ? (j + cells) % cells : 0;
        trip.emplace_back(row, box[key(wi, wj)], -c);
        diag += c;
        continue;
      }
      if (nb >= 0) {
        trip.emplace_back(row, nb, -c);
        diag += c;
      } else {
        diag += 2.0 * c;  // ghost value -u_k
      }
    }
    trip.emplace_back(row, row, diag);
  }
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::SparseMatrix<double> L(n, n);
  L.setFromTriplets(trip.begin(), trip.end());
  return L;
}

SpectralEstimate local_lambda1_fd(const Grid& grid, const GridFunction& a, double sigma,
                                  double tol) {
  if (static_cast<std::size_t>(a.size()) != grid.size()) {
    throw DimensionMismatch("growth samples do not match the grid");
  }
  using Sparse = Eigen::SparseMatrix<double>;
  Sparse H = fd_neg_laplacian(grid, sigma);
  const auto n = static_cast<Eigen::Index>(grid.size());
  for (Eigen::Index i = 0; i < n; ++i) H.coeffRef(i, i) -= a[i];
  Sparse I(n, n);
  I.setIdentity();

  Eigen::SimplicialLDLT<Sparse> ldlt;
  ldlt.analyzePattern(H);
  // number of eigenvalues of H strictly below mu (Sylvester inertia)
  auto count_below = [&](double mu) {
    for (int nudge = 0; nudge < 8; ++nudge) {
      ldlt.factorize(H - mu * I);
      if (ldlt.info() == Eigen::Success) {
        const auto& D = ldlt.vectorD();
        return static_cast<int>((D.array() < 0.0).count());
      }
      mu += 1e-13 * (1.0 + std::abs(mu));
    }
    throw NumericalFailure("LDL^T factorization failed during inertia bisection");
  };

  // Gershgorin interval
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Eigen::Index k = 0; k < H.outerSize(); ++k) {
    double d = 0.0, off = 0.0;
    for (Sparse::InnerIterator it(H, k); it; ++it) {
      if (it.row() == it.col()) d = it.value();
      else off += std::abs(it.value());
    }
    lo = std::min(lo, d - off);
    hi = std::max(hi, d + off);
  }
  lo -= 1e-12 * (1.0 + std::abs(lo));
  int it = 0;
  const double width = std::max(tol, 1e-15 * (std::abs(lo) + std::abs(hi)));
  while (hi - lo > width && it < 200) {
    const double mid = 0.5 * (lo + hi);
    (count_below(mid) >= 1 ? hi : lo) = mid;
    ++it;
  }

  // inverse iteration just below the bracket
  const double mu = lo - std::max(tol, 1e-9 * (1.0 + std::abs(lo)));
  ldlt.factorize(H - mu * I);
  if (ldlt.info() != Eigen::Success) throw NumericalFailure("inverse-iteration factorization failed");
  GridFunction v = GridFunction::Ones(n).normalized();
  for (int k = 0; k < 50; ++k) {
    GridFunction next = ldlt.solve(v);
    next.normalize();
    const double change = (next - v).norm();
    v = next;
    ++it;
    if (change < 1e-14) break;
  }
  const GridFunction Hv = H * v;
  const double theta = v.dot(Hv);
  SpectralEstimate est;
  est.method = SpectralMethod::fd_laplacian;
  est.iterations = it;
  est.lower = std::max(lo, theta - (Hv - theta * v).norm());
  est.upper = std::min(hi, theta);
  est.lower = std::min(est.lower, est.upper);
  est.value = std::clamp(theta, est.lower, est.upper);
  if (v.sum() < 0.0) v = -v;
  v /= v.cwiseAbs().maxCoeff();
  est.eigenvector = v;
  est.residual = (H * v - est.value * v).cwiseAbs().maxCoeff();
  return est;
}

}  // namespace nichewave
