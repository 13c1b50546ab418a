#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "epiwave/error.hpp"
#include "epiwave/nonlinearity.hpp"
#include "epiwave/spatial_kernel.hpp"

namespace epiwave {

enum class Domain { Cell, Ball };

// A = g'(0) V(x_i, x_j) w_j on the cell (dense) or a ball of the window (sparse).
template <class Matrix>
struct OperatorMatrix {
  Matrix entries;
  Domain domain = Domain::Cell;
  double radius = 0.0;
  std::optional<Vec> weight;  // gamma = gamma2 / gamma1 at the nodes
  double node_weight = 1.0;   // quadrature weight w_i
  std::vector<std::size_t> nodes;  // window indices for Ball operators
};

using CellOperator = OperatorMatrix<Mat>;
using BallOperator = OperatorMatrix<SparseRow>;

struct EigenPair {
  double lambda = 0.0;
  Vec phi;
  double residual = 0.0;
  int iterations = 0;
};

inline double gprime_factor(const SpatialKernel& V, const Nonlinearity& g) {
  return V.gprime0_absorbed() ? 1.0 : g.slope0;
}

inline CellOperator assemble_periodic(const SpatialKernel& V, const Nonlinearity& g) {
  CellOperator A;
  A.entries = V.periodic() * (gprime_factor(V, g) * V.grid().weight());
  A.domain = Domain::Cell;
  A.node_weight = V.grid().weight();
  if (V.symmetry()) A.weight = V.symmetry()->second.cwiseQuotient(V.symmetry()->first);
  return A;
}

// Dirichlet restriction of the window operator to |x| <= R.
inline BallOperator assemble_ball(const SpatialKernel& V, const Nonlinearity& g, double R) {
  const auto& grid = V.grid();
  require(R > 0 && R <= grid.window_radius(), "ball radius must lie inside the window");
  BallOperator A;
  A.nodes = grid.ball(R);
  std::vector<long> col(grid.window_size(), -1);
  for (std::size_t k = 0; k < A.nodes.size(); ++k) col[A.nodes[k]] = long(k);
  A.entries = V.window_matrix(A.nodes, col, long(A.nodes.size()), gprime_factor(V, g));
  A.domain = Domain::Ball;
  A.radius = R;
  A.node_weight = grid.weight();
  if (V.symmetry()) {
    Vec w(Eigen::Index(A.nodes.size()));
    for (std::size_t k = 0; k < A.nodes.size(); ++k) {
      const auto i = Eigen::Index(grid.cell_index_of(A.nodes[k]));
      w(Eigen::Index(k)) = V.symmetry()->second(i) / V.symmetry()->first(i);
    }
    A.weight = w;
  }
  return A;
}

// <A psi, psi>_gamma / <psi, psi>_gamma
template <class Matrix>
double weighted_rayleigh(const OperatorMatrix<Matrix>& A, const Vec& psi) {
  const Vec Ap = A.entries * psi;
  if (!A.weight) return Ap.dot(psi) / psi.dot(psi);
  const Vec& w = *A.weight;
  return (Ap.array() * psi.array() * w.array()).sum() /
         (psi.array() * psi.array() * w.array()).sum();
}

// Power iteration from the constant vector, normalized sup phi = 1.
template <class Matrix>
EigenPair principal_eigenpair(const OperatorMatrix<Matrix>& A, double tol = 1e-10,
                              int max_iter = 200000) {
  require(tol > 0 && max_iter > 0, "invalid eigen solver settings");
  const Eigen::Index n = A.entries.rows();
  Vec phi = Vec::Ones(n);
  EigenPair out;
  double residual = kInf;
  for (int it = 1; it <= max_iter; ++it) {
    const Vec y = A.entries * phi;
    const double lam = y.maxCoeff();
    if (it == 1 && y.cwiseAbs().maxCoeff() == 0.0) {
      out.lambda = 0.0;
      out.phi = phi;
      out.residual = 0.0;
      out.iterations = 1;
      return out;
    }
    if (!(y.minCoeff() > 0.0)) {
      Eigen::Index at;
      y.minCoeff(&at);
      std::ostringstream os;
      os << "{\"node\":" << at << ",\"iteration\":" << it << "}";
      throw NumericalError("power iterate lost strict positivity (kernel positivity violated)",
                           os.str());
    }
    residual = (y - lam * phi).cwiseAbs().maxCoeff();
    bool done = residual <= tol;
    if (done && A.weight) done = std::abs(weighted_rayleigh(A, phi) - lam) <= tol;
    if (done) {
      out.lambda = lam;
      out.phi = phi;
      out.residual = residual;
      out.iterations = it;
      return out;
    }
    phi = y / lam;
  }
  std::ostringstream os;
  os << "{\"last_residual\":" << residual << ",\"max_iter\":" << max_iter << "}";
  throw NumericalError("principal eigenpair did not converge", os.str());
}

inline EigenPair principal_eigenpair(const SpatialKernel& V, const Nonlinearity& g,
                                     double tol = 1e-10) {
  return principal_eigenpair(assemble_periodic(V, g), tol);
}

struct EigenBounds {
  double lower = 0.0;
  double upper = 0.0;
};

inline EigenBounds eigenvalue_bounds(const SpatialKernel& V, const Nonlinearity& g) {
  const Vec rows = V.row_integrals() * gprime_factor(V, g);
  return {rows.minCoeff(), rows.maxCoeff()};
}

struct SweepEntry {
  double R = 0.0;
  double lambda = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

inline std::vector<SweepEntry> ball_eigenvalue_sweep(const SpatialKernel& V,
                                                     const std::vector<double>& radii,
                                                     const Nonlinearity& g, double tol = 1e-10) {
  std::vector<SweepEntry> out;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (k > 0) require(radii[k] > radii[k - 1], "radii must be increasing");
    const auto A = assemble_ball(V, g, radii[k]);
    const auto ep = principal_eigenpair(A, tol);
    out.push_back({radii[k], ep.lambda, ep.residual, ep.iterations});
  }
  return out;
}

struct SubEigenfunction {
  Vec values;         // on the whole window
  double R = 0.0;     // support ball
  double eta = 0.0;   // cutoff width
  double lambda1 = 0.0;
  double lambda_R = 0.0;
  double min_slack = 0.0;  // min over window of L(phi) - (lambda1 - eps) phi
};

// Compactly supported phi_eps >= 0 with L(phi_eps) >= (lambda1 - eps) phi_eps on
// the window: principal eigenfunction of the smallest integer ball with
// lambda_R > lambda1 - eps/2, cut off linearly over a width eta.
inline SubEigenfunction sub_eigenfunction(const SpatialKernel& V, const Nonlinearity& g,
                                          double eps, double tol = 1e-10) {
  const auto& grid = V.grid();
  const double lambda1 = principal_eigenpair(V, g, tol).lambda;
  require(eps > 0 && eps < lambda1, "sub_eigenfunction needs 0 < eps < lambda1");
  const double target = lambda1 - 0.5 * eps;
  std::optional<BallOperator> ball;
  EigenPair ep;
  for (int R = 1; R <= grid.window_radius(); ++R) {
    auto A = assemble_ball(V, g, R);
    ep = principal_eigenpair(A, tol);
    if (ep.lambda > target) {
      ball = std::move(A);
      break;
    }
  }
  if (!ball) {
    std::ostringstream os;
    os << "{\"lambda1\":" << lambda1 << ",\"largest_lambda_R\":" << ep.lambda << "}";
    throw NumericalError("window too small to reach lambda_R > lambda1 - eps/2; enlarge the window",
                         os.str());
  }
  // Operator from the ball to every window node.
  std::vector<std::size_t> rows(grid.window_size());
  for (std::size_t a = 0; a < rows.size(); ++a) rows[a] = a;
  std::vector<long> col(grid.window_size(), -1);
  for (std::size_t k = 0; k < ball->nodes.size(); ++k) col[ball->nodes[k]] = long(k);
  const SparseRow L = V.window_matrix(rows, col, long(ball->nodes.size()), gprime_factor(V, g));

  SubEigenfunction out;
  out.R = ball->radius;
  out.lambda1 = lambda1;
  out.lambda_R = ep.lambda;
  for (double eta = grid.spacing(); eta > 1e-12; eta *= 0.5) {
    Vec phi(Eigen::Index(ball->nodes.size()));
    for (std::size_t k = 0; k < ball->nodes.size(); ++k) {
      const double dist = out.R - grid.window_norm(ball->nodes[k]);
      phi(Eigen::Index(k)) = ep.phi(Eigen::Index(k)) * std::min(1.0, dist / eta);
    }
    const Vec Lphi = L * phi;
    Vec full = Vec::Zero(Eigen::Index(grid.window_size()));
    for (std::size_t k = 0; k < ball->nodes.size(); ++k)
      full(Eigen::Index(ball->nodes[k])) = phi(Eigen::Index(k));
    const double slack = (Lphi - (lambda1 - eps) * full).minCoeff();
    if (slack >= 0) {
      out.values = full;
      out.eta = eta;
      out.min_slack = slack;
      return out;
    }
  }
  throw NumericalError("no cutoff width satisfied the sub-eigenfunction inequality");
}

}  // namespace epiwave
