#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "epiwave/error.hpp"
#include "epiwave/grid.hpp"
#include "epiwave/kernel.hpp"
#include "epiwave/parallel.hpp"

namespace epiwave {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SparseRow = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Discretized kernel: one cell x cell table per lattice offset m, entry
// (i, j) = V(x_i, y_j + m) averaged over the y-cell. V_per is their sum.
class SpatialKernel {
 public:
  SpatialKernel(PeriodicGrid grid, int truncation, std::vector<Mat> images, double reach)
      : grid_(grid), K_(truncation), images_(std::move(images)), reach_(reach) {
    periodic_ = Mat::Zero(grid_.cell_size(), grid_.cell_size());
    for (const auto& T : images_) periodic_ += T;
  }

  const PeriodicGrid& grid() const { return grid_; }
  int lattice_truncation() const { return K_; }
  int span() const { return 2 * K_ + 1; }
  double reach() const { return reach_; }
  const Mat& periodic() const { return periodic_; }
  const std::vector<Mat>& images() const { return images_; }
  bool gprime0_absorbed() const { return absorbed_; }

  // gamma1, gamma2 at the cell nodes when the kernel is symmetric up to them.
  const std::optional<std::pair<Vec, Vec>>& symmetry() const { return symmetry_; }
  void set_symmetry(Vec g1, Vec g2) { symmetry_ = std::make_pair(std::move(g1), std::move(g2)); }

  const Mat& image(int m0, int m1 = 0) const {
    return images_[std::size_t((m0 + K_) + span() * (grid_.dim() == 1 ? 0 : m1 + K_))];
  }

  // V between two window nodes.
  double window_value(std::size_t a, std::size_t b) const {
    const auto ka = grid_.lattice_of(a), kb = grid_.lattice_of(b);
    const int m0 = kb[0] - ka[0], m1 = kb[1] - ka[1];
    if (std::abs(m0) > K_ || std::abs(m1) > K_) return 0.0;
    return image(m0, m1)(Eigen::Index(grid_.cell_index_of(a)), Eigen::Index(grid_.cell_index_of(b)));
  }

  // int V(x_i, y) dy for each cell node.
  Vec row_integrals() const { return periodic_.rowwise().sum() * grid_.weight(); }

  SpatialKernel scaled(double alpha) const {
    SpatialKernel out = *this;
    for (auto& T : out.images_) T *= alpha;
    out.periodic_ *= alpha;
    return out;
  }

  // Window operator restricted to `rows` x (nodes with col_of[b] >= 0):
  // entries scale * V(a,b) * w. col_of maps window index -> column.
  SparseRow window_matrix(const std::vector<std::size_t>& rows, const std::vector<long>& col_of,
                          long ncols, double scale) const {
    const int n = grid_.cell_points();
    const double w = grid_.weight() * scale;
    std::vector<std::vector<Eigen::Triplet<double>>> parts(rows.size());
    parallel_for(0, rows.size(), [&](std::size_t r) {
      const std::size_t a = rows[r];
      const auto ax = grid_.axis_index(a);
      const auto ka = grid_.lattice_of(a);
      const std::size_t ia = grid_.cell_index_of(a);
      auto& out = parts[r];
      const int m1lo = grid_.dim() == 1 ? 0 : -K_, m1hi = grid_.dim() == 1 ? 0 : K_;
      for (int m1 = m1lo; m1 <= m1hi; ++m1)
        for (int m0 = -K_; m0 <= K_; ++m0) {
          const Mat& T = image(m0, m1);
          for (std::size_t j = 0; j < grid_.cell_size(); ++j) {
            const double v = T(Eigen::Index(ia), Eigen::Index(j));
            if (v == 0.0) continue;
            const int j0 = int(j % n), j1 = int(j / n);
            const int b0 = (ka[0] + m0 + grid_.window_radius()) * n + j0;
            const int b1 = grid_.dim() == 1 ? 0 : (ka[1] + m1 + grid_.window_radius()) * n + j1;
            std::size_t b;
            if (!grid_.window_index(b0, b1, b)) continue;
            const long c = col_of[b];
            if (c >= 0) out.emplace_back(long(r), c, v * w);
          }
        }
      (void)ax;
    });
    std::vector<Eigen::Triplet<double>> all;
    for (auto& p : parts) all.insert(all.end(), p.begin(), p.end());
    SparseRow M(long(rows.size()), ncols);
    M.setFromTriplets(all.begin(), all.end());
    return M;
  }

 private:
  PeriodicGrid grid_;
  int K_;
  std::vector<Mat> images_;
  Mat periodic_;
  double reach_;
  std::optional<std::pair<Vec, Vec>> symmetry_;
  bool absorbed_ = false;
};

namespace detail {

// Cell table for lattice offset (m0, m1): y-cell average of `core`.
inline Mat cell_table(const PeriodicGrid& grid, const PairFn& core, int m0, int m1, int s) {
  const std::size_t N = grid.cell_size();
  const double h = grid.spacing();
  std::vector<double> off(static_cast<std::size_t>(s));
  for (int q = 0; q < s; ++q) off[std::size_t(q)] = ((q + 0.5) / s - 0.5) * h;
  const int sq = grid.dim() == 1 ? s : s * s;
  Mat T(N, N);
  parallel_for(0, N, [&](std::size_t i) {
    const Point x = grid.cell_point(i);
    for (std::size_t j = 0; j < N; ++j) {
      const Point y = grid.cell_point(j);
      double acc = 0.0;
      for (int q = 0; q < sq; ++q) {
        Point yq{y[0] + off[std::size_t(q % s)] + m0,
                 grid.dim() == 1 ? 0.0 : y[1] + off[std::size_t(q / s)] + m1};
        acc += core(x, yq);
      }
      T(Eigen::Index(i), Eigen::Index(j)) = acc / sq;
    }
  });
  return T;
}

}  // namespace detail

// Lattice-summed discretization of a whole-space kernel. truncation > 0 forces
// the number of images per axis; otherwise it is derived from the support or
// grown until a new shell of images adds less than tol to every row-integral.
inline SpatialKernel periodize_kernel(const KernelFunction& V, const PeriodicGrid& grid,
                                      double tol = 1e-10, int subsamples = 4, int truncation = 0) {
  require(tol > 0, "periodization tolerance must be positive");
  require(subsamples >= 2 && subsamples % 2 == 0, "subsamples must be even and >= 2");
  const int dim = grid.dim();
  const std::size_t N = grid.cell_size();
  const bool fac = V.factored.has_value();
  const PairFn& core = fac ? V.factored->core : V.value;

  auto table = [&](int m0, int m1) { return detail::cell_table(grid, core, m0, m1, subsamples); };

  // Collect raw core tables, indexed (m0, m1) -> vector position.
  int K;
  std::vector<Mat> raw;
  auto index = [&](int m0, int m1, int KK) {
    const int sp = 2 * KK + 1;
    return std::size_t((m0 + KK) + sp * (dim == 1 ? 0 : m1 + KK));
  };
  auto build = [&](int KK) {
    const int sp = 2 * KK + 1;
    std::vector<Mat> out(std::size_t(dim == 1 ? sp : sp * sp));
    for (int m1 = (dim == 1 ? 0 : -KK); m1 <= (dim == 1 ? 0 : KK); ++m1)
      for (int m0 = -KK; m0 <= KK; ++m0) out[index(m0, m1, KK)] = table(m0, m1);
    return out;
  };

  if (truncation > 0) {
    K = truncation;
    raw = build(K);
  } else if (std::isfinite(V.support)) {
    K = int(std::ceil(V.support)) + 1;
    raw = build(K);
  } else {
    const int kmax = dim == 1 ? 64 : 12;
    K = 1;
    raw = build(K);
    while (true) {
      const int KK = K + 1;
      // Shell |m|_inf = KK.
      double inc = 0.0;
      std::vector<std::pair<std::pair<int, int>, Mat>> shell;
      for (int m1 = (dim == 1 ? 0 : -KK); m1 <= (dim == 1 ? 0 : KK); ++m1)
        for (int m0 = -KK; m0 <= KK; ++m0) {
          if (std::max(std::abs(m0), std::abs(m1)) != KK) continue;
          shell.push_back({{m0, m1}, table(m0, m1)});
        }
      Vec rows = Vec::Zero(Eigen::Index(N));
      for (auto& [m, T] : shell) {
        Mat full = T;
        if (fac)
          for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j)
              full(Eigen::Index(i), Eigen::Index(j)) *=
                  V.factored->left(grid.cell_point(i)) * V.factored->right(grid.cell_point(j));
        rows += full.cwiseAbs().rowwise().sum();
      }
      inc = rows.maxCoeff() * grid.weight();
      std::vector<Mat> grown(std::size_t(dim == 1 ? 2 * KK + 1 : (2 * KK + 1) * (2 * KK + 1)));
      for (int m1 = (dim == 1 ? 0 : -K); m1 <= (dim == 1 ? 0 : K); ++m1)
        for (int m0 = -K; m0 <= K; ++m0) grown[index(m0, m1, KK)] = std::move(raw[index(m0, m1, K)]);
      for (auto& [m, T] : shell) grown[index(m.first, m.second, KK)] = std::move(T);
      raw = std::move(grown);
      K = KK;
      if (!std::isfinite(inc) || K >= kmax) {
        std::ostringstream os;
        os << "{\"lattice_truncation\":" << K << ",\"last_increment\":" << inc << "}";
        throw NumericalError(
            "lattice sum of the kernel did not converge; algebraically decaying kernels "
            "lead to super-linear spreading, which is not supported",
            os.str());
      }
      if (inc < tol) break;
    }
  }

  // Symmetrize the core so that the weighted operator is exactly symmetric.
  if (fac && V.factored->symmetric_core) {
    std::vector<Mat> sym(raw.size());
    for (int m1 = (dim == 1 ? 0 : -K); m1 <= (dim == 1 ? 0 : K); ++m1)
      for (int m0 = -K; m0 <= K; ++m0)
        sym[index(m0, m1, K)] =
            0.5 * (raw[index(m0, m1, K)] + raw[index(-m0, -m1, K)].transpose());
    raw = std::move(sym);
  }
  Vec g1 = Vec::Ones(Eigen::Index(N)), g2 = Vec::Ones(Eigen::Index(N));
  if (fac) {
    for (std::size_t i = 0; i < N; ++i) {
      g1(Eigen::Index(i)) = V.factored->left(grid.cell_point(i));
      g2(Eigen::Index(i)) = V.factored->right(grid.cell_point(i));
    }
    for (auto& T : raw) T = g1.asDiagonal() * T * g2.asDiagonal();
  }
  for (auto& T : raw)
    require((T.array() >= 0).all(), "kernel must be nonnegative");
  SpatialKernel out(grid, K, std::move(raw), std::isfinite(V.support) ? V.support : double(K));
  if (fac && V.factored->symmetric_core) {
    require((g1.array() > 0).all() && (g2.array() > 0).all(),
            "symmetry factors must be positive");
    out.set_symmetry(g1, g2);
  }
  return out;
}

}  // namespace epiwave
