#pragma once

#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

#include "epiwave/dynamics.hpp"
#include "epiwave/kernel.hpp"
#include "epiwave/spatial_kernel.hpp"

namespace epiwave {

enum class Diffusion { None, Laplacian };

// S_t = -S int K(x,y) I(t,y) dy
// I_t = D Lap I + S int K(x,y) I(t,y) dy - mu I
struct SirModel {
  PeriodicGrid grid;
  KernelFunction K;
  PointFn mu;
  PointFn S0;
  PointFn I0;
  Diffusion diffusion = Diffusion::None;
  double D = 0.0;
};

struct SirTrajectory {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<Vec> S, I;
  Vec S0;
  Vec removed;  // dt * sum_k mu I_k, accumulated per node up to the last step
  double min_S = 0.0;
  bool S_nonincreasing = true;

  Vec u(std::size_t k) const { return -(S[k].array() / S0.array()).log().matrix(); }
};

namespace detail {

inline Vec node_values(const PeriodicGrid& grid, const PointFn& fn, bool cell_reduce) {
  Vec out(Eigen::Index(grid.window_size()));
  for (std::size_t a = 0; a < grid.window_size(); ++a)
    out(Eigen::Index(a)) = fn(cell_reduce ? grid.cell_point(grid.cell_index_of(a)) : grid.window_point(a));
  return out;
}

inline SparseRow full_window_matrix(const SpatialKernel& K) {
  const auto& grid = K.grid();
  std::vector<std::size_t> rows(grid.window_size());
  std::vector<long> col(grid.window_size());
  for (std::size_t a = 0; a < rows.size(); ++a) {
    rows[a] = a;
    col[a] = long(a);
  }
  return K.window_matrix(rows, col, long(rows.size()), 1.0);
}

}  // namespace detail

// Explicit scheme; S is marched in log form, ln S_{n+1} = ln S_n - dt P_n, and
// I picks up what S loses, so S + I changes only by recovery and
// diffusion.
inline SirTrajectory simulate_sir(const SirModel& m, double dt, double T, double snapshot_every = 1.0) {
  const auto& grid = m.grid;
  require(dt > 0 && T >= 0, "invalid time stepping");
  const auto Kp = periodize_kernel(m.K, grid);
  const SparseRow Kw = detail::full_window_matrix(Kp);
  const Vec mu = detail::node_values(grid, m.mu, true);
  const Vec S0 = detail::node_values(grid, m.S0, true);
  const Vec I0 = detail::node_values(grid, m.I0, false);
  require(S0.minCoeff() > 0, "S0 must be bounded below by a positive constant");
  require(I0.minCoeff() >= 0, "I0 must be nonnegative");
  require(mu.minCoeff() > 0, "mu must be positive");
  const double h = grid.spacing();
  const double lap = m.diffusion == Diffusion::Laplacian ? 2.0 * grid.dim() * m.D / (h * h) : 0.0;
  const double rows = Kp.row_integrals().maxCoeff();
  require(dt * (mu.maxCoeff() + rows * S0.maxCoeff() + lap) < 1.0,
          "time step violates dt (max mu + max row-sum K sup S0 + 2 d D / h^2) < 1");

  SirTrajectory tr;
  tr.dt = dt;
  tr.S0 = S0;
  Vec logS = S0.array().log().matrix();
  Vec S = S0, I = I0;
  tr.removed = Vec::Zero(S.size());
  const int stride = std::max(1, int(std::lround(snapshot_every / dt)));
  tr.times.push_back(0.0);
  tr.S.push_back(S);
  tr.I.push_back(I);
  const long steps = std::lround(T / dt);
  for (long k = 1; k <= steps; ++k) {
    const Vec P = Kw * I;
    logS -= dt * P;
    const Vec Snew = logS.array().exp().matrix();
    // S - Snew written as S (1 - exp(-dt P)) so I never picks up a negative
    // round-off difference where P is tiny.
    const Vec loss = S.cwiseProduct((-(-dt * P).array().expm1()).matrix());
    Vec Inew = I + loss - dt * mu.cwiseProduct(I);
    tr.removed += dt * mu.cwiseProduct(I);
    if (m.diffusion == Diffusion::Laplacian) {
      for (std::size_t a = 0; a < grid.window_size(); ++a) {
        const auto ax = grid.axis_index(a);
        double acc = -2.0 * grid.dim() * I(Eigen::Index(a));
        for (int dir = 0; dir < grid.dim(); ++dir)
          for (int sgn : {-1, 1}) {
            int b0 = ax[0], b1 = ax[1];
            (dir == 0 ? b0 : b1) += sgn;
            std::size_t b;
            if (grid.window_index(b0, b1, b)) acc += I(Eigen::Index(b));
          }
        Inew(Eigen::Index(a)) += dt * m.D / (h * h) * acc;
      }
    }
    if ((Snew - S).maxCoeff() > 0) tr.S_nonincreasing = false;
    if (Inew.minCoeff() < 0 || !Inew.allFinite()) {
      Eigen::Index at;
      Inew.minCoeff(&at);
      std::ostringstream os;
      os << "{\"node\":" << at << ",\"t\":" << k * dt << ",\"I\":" << Inew(at) << "}";
      throw NumericalError("SIR scheme produced a negative or non-finite I", os.str());
    }
    S = Snew;
    I = std::move(Inew);
    if (k % stride == 0 || k == steps) {
      tr.times.push_back(k * dt);
      tr.S.push_back(S);
      tr.I.push_back(I);
    }
  }
  tr.min_S = S.minCoeff();
  return tr;
}

struct SirKernel {
  TimeKernel Gamma;
  Forcing f;
  Nonlinearity g;
};

// Gamma(t,x,y) = S0(y) exp(-mu(y) t) K(x,y),
// f(t,x) = int K(x,y) I0(y) (1 - exp(-mu(y) t)) / mu(y) dy, g = 1 - exp(-z).
// f uses the same window quadrature as the simulator.
inline SirKernel sir_to_kernel(const SirModel& m) {
  require(m.diffusion == Diffusion::None,
          "the exact bridge needs no diffusion; with a Laplacian the heat kernel has no closed "
          "form for variable mu, so use simulate_sir directly");
  const auto& grid = m.grid;
  KernelFunction K2;
  auto K = m.K;
  auto S0 = m.S0;
  K2.value = [K, S0](const Point& x, const Point& y) { return K(x, y) * S0(y); };
  K2.support = K.support;
  if (K.factored) {
    auto f = *K.factored;
    K2.factored = Factored{f.core, f.left, [f, S0](const Point& y) { return f.right(y) * S0(y); },
                           f.symmetric_core};
  } else {
    K2.factored = Factored{K.value, [](const Point&) { return 1.0; }, S0, false};
  }
  TimeKernel G = TimeKernel::separable(grid.dim(), m.mu, K2);

  struct Cache {
    SparseRow Kw;
    Vec mu, I0;
    double t = -1.0;
    Vec f;
    PeriodicGrid grid{1, 8, 1};
  };
  auto cache = std::make_shared<Cache>();
  cache->grid = grid;
  cache->Kw = detail::full_window_matrix(periodize_kernel(m.K, grid));
  cache->mu = detail::node_values(grid, m.mu, true);
  cache->I0 = detail::node_values(grid, m.I0, false);
  auto eval_all = [cache](double t) -> const Vec& {
    if (t != cache->t) {
      const Vec w = (cache->I0.array() * (-(-cache->mu.array() * t).exp() + 1.0) / cache->mu.array()).matrix();
      cache->f = cache->Kw * w;
      cache->t = t;
    }
    return cache->f;
  };
  auto locate = [cache](const Point& x) -> long {
    const auto& gr = cache->grid;
    const double h = gr.spacing();
    const int a0 = int(std::floor((x[0] + gr.window_radius()) / h));
    const int a1 = gr.dim() == 1 ? 0 : int(std::floor((x[1] + gr.window_radius()) / h));
    std::size_t a;
    if (!gr.window_index(a0, a1, a)) return -1;
    return long(a);
  };
  Forcing f;
  f.eval = [eval_all, locate](double t, const Point& x) {
    const long a = locate(x);
    return a < 0 ? 0.0 : eval_all(t)(a);
  };
  f.limit = [eval_all, locate](const Point& x) {
    const long a = locate(x);
    return a < 0 ? 0.0 : eval_all(kInf)(a);
  };
  // Support of f_inf: support of I0 (sampled on the window) plus that of K.
  double rI = 0.0;
  for (std::size_t a = 0; a < grid.window_size(); ++a)
    if (cache->I0(Eigen::Index(a)) > 0) rI = std::max(rI, grid.window_norm(a));
  f.support = rI + K.support + grid.spacing();
  return {G, f, Nonlinearity::exponential()};
}

struct Equivalence {
  double sup_difference = 0.0;
  double dt = 0.0;
  double spacing = 0.0;
};

// sup over marched nodes and stored times of |-ln(S/S0) - u|.
inline Equivalence equivalence_check(const SirModel& m, double dt, double T) {
  const auto tr = simulate_sir(m, dt, T, dt);
  const auto sk = sir_to_kernel(m);
  const auto field = solve_initial_value(sk.Gamma, sk.f, sk.g, m.grid, dt, T, dt);
  Equivalence eq{0.0, dt, m.grid.spacing()};
  require(tr.times.size() == field.times.size(), "time grids differ");
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const Vec us = tr.u(k);
    for (std::size_t a = 0; a < field.active.size(); ++a)
      if (field.active[a])
        eq.sup_difference = std::max(eq.sup_difference,
                                     std::abs(us(Eigen::Index(a)) - field.snapshots[k](Eigen::Index(a))));
  }
  return eq;
}

}  // namespace epiwave
