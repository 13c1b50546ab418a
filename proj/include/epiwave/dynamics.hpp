#pragma once

#include <cmath>
#include <deque>
#include <optional>
#include <sstream>
#include <vector>

#include "epiwave/error.hpp"
#include "epiwave/kernel.hpp"
#include "epiwave/nonlinearity.hpp"
#include "epiwave/spatial_kernel.hpp"

namespace epiwave {

// u(t_n, x_a) on the window, stored every `stride` steps.
struct SpaceTimeField {
  PeriodicGrid grid{1, 8, 1};
  double dt = 0.05;
  double T = 0.0;
  int stride = 1;
  std::vector<double> times;
  std::vector<Vec> snapshots;
  std::vector<char> active;   // nodes where the equation is marched
  double reach = 0.0;         // kernel support radius
  double min_increment = 0.0; // min over steps and nodes of u_n - u_{n-1}

  const Vec& final() const { return snapshots.back(); }
  // Latest snapshot at or before time t.
  const Vec& at(double t) const {
    std::size_t k = 0;
    while (k + 1 < times.size() && times[k + 1] <= t + 1e-9) ++k;
    return snapshots[k];
  }
};

namespace detail {

inline std::vector<char> interior_nodes(const PeriodicGrid& grid, double reach) {
  std::vector<char> act(grid.window_size());
  for (std::size_t a = 0; a < act.size(); ++a) {
    const Point x = grid.window_point(a);
    const double m = std::max(std::abs(x[0]), std::abs(x[1]));
    act[a] = m + reach <= grid.window_radius() ? 1 : 0;
  }
  return act;
}

inline void check_finite(const Vec& u, double t) {
  if (u.allFinite()) return;
  Eigen::Index bad = 0;
  for (Eigen::Index a = 0; a < u.size(); ++a)
    if (!std::isfinite(u(a))) {
      bad = a;
      break;
    }
  std::ostringstream os;
  os << "{\"node\":" << bad << ",\"t\":" << t << "}";
  throw NumericalError("non-finite value while marching", os.str());
}

}  // namespace detail

// Explicit marching for Gamma = exp(-mu(y) tau) K(x,y): with memory
// w(t,y) = int_0^t exp(-mu tau) g(u(t-tau,y)) dtau,
//   w_n = q w_{n-1} + dt/2 (1 + q) g(u_{n-1}),  q = exp(-mu dt),
//   u_n = int K(x,y) w_n(y) dy + f(t_n, x).
class SeparableMarcher {
 public:
  SeparableMarcher(const TimeKernel& G, const Forcing& f, const Nonlinearity& g,
                   const PeriodicGrid& grid, double dt)
      : grid_(grid), f_(f), g_(g), dt_(dt) {
    const auto& s = G.separable_part();
    require(dt > 0, "dt must be positive");
    const auto K = periodize_kernel(s.K, grid);
    reach_ = K.reach();
    double mumax = 0.0;
    q_.resize(Eigen::Index(grid.window_size()));
    for (std::size_t a = 0; a < grid.window_size(); ++a) {
      const double mu = s.mu(grid.cell_point(grid.cell_index_of(a)));
      mumax = std::max(mumax, mu);
      q_(Eigen::Index(a)) = std::exp(-mu * dt);
    }
    require(dt * mumax < 1.0, "time step too large: need dt * max mu < 1");
    active_ = detail::interior_nodes(grid, reach_);
    for (std::size_t a = 0; a < active_.size(); ++a)
      if (active_[a]) rows_.push_back(a);
    std::vector<long> col(grid.window_size());
    for (std::size_t b = 0; b < col.size(); ++b) col[b] = long(b);
    M_ = K.window_matrix(rows_, col, long(grid.window_size()), 1.0);
    u = forcing_at(0.0);
    w = Vec::Zero(u.size());
  }

  Vec forcing_at(double t) const {
    Vec out(Eigen::Index(grid_.window_size()));
    for (std::size_t a = 0; a < grid_.window_size(); ++a)
      out(Eigen::Index(a)) = f_.eval(t, grid_.window_point(a));
    return out;
  }

  // Advance (w, u) from t to t + dt.
  void step() {
    const Vec gu = u.unaryExpr([this](double z) { return g_(z); });
    w = q_.cwiseProduct(w) + (0.5 * dt_) * (Vec::Ones(q_.size()) + q_).cwiseProduct(gu);
    t += dt_;
    Vec next = forcing_at(t);
    const Vec conv = M_ * w;
    for (std::size_t r = 0; r < rows_.size(); ++r) next(Eigen::Index(rows_[r])) += conv(Eigen::Index(r));
    u = std::move(next);
  }

  const std::vector<char>& active() const { return active_; }
  double reach() const { return reach_; }

  Vec u, w;
  double t = 0.0;

 private:
  PeriodicGrid grid_;
  Forcing f_;
  Nonlinearity g_;
  double dt_;
  double reach_ = 0.0;
  Vec q_;
  std::vector<char> active_;
  std::vector<std::size_t> rows_;
  SparseRow M_;
};

// Full history convolution for non-separable kernels:
//   u_n = sum_k dt/2 (G(tau_{k-1}) + G(tau_k)) g(u_{n-k}) + f_n.
class HistoryMarcher {
 public:
  HistoryMarcher(const TimeKernel& G, const Forcing& f, const Nonlinearity& g,
                 const PeriodicGrid& grid, double dt)
      : grid_(grid), f_(f), g_(g), dt_(dt) {
    require(dt > 0, "dt must be positive");
    const int nk = int(std::ceil(G.horizon() / dt));
    reach_ = std::isfinite(G.support_radius()) ? G.support_radius() : 0.0;
    std::vector<SparseRow> slices;
    std::vector<long> col(grid.window_size());
    for (std::size_t b = 0; b < col.size(); ++b) col[b] = long(b);
    for (int k = 0; k <= nk; ++k) {
      const double tau = k * dt;
      KernelFunction slice{[&G, tau](const Point& x, const Point& y) { return G(tau, x, y); },
                           std::nullopt, G.support_radius()};
      const auto S = periodize_kernel(slice, grid);
      if (k == 0) {
        reach_ = S.reach();
        active_ = detail::interior_nodes(grid, reach_);
        for (std::size_t a = 0; a < active_.size(); ++a)
          if (active_[a]) rows_.push_back(a);
      }
      slices.push_back(S.window_matrix(rows_, col, long(grid.window_size()), 1.0));
    }
    for (int k = 1; k <= nk; ++k) coef_.push_back((0.5 * dt) * (slices[k - 1] + slices[k]));
    u = forcing_at(0.0);
  }

  Vec forcing_at(double t) const {
    Vec out(Eigen::Index(grid_.window_size()));
    for (std::size_t a = 0; a < grid_.window_size(); ++a)
      out(Eigen::Index(a)) = f_.eval(t, grid_.window_point(a));
    return out;
  }

  void step() {
    history_.push_front(u.unaryExpr([this](double z) { return g_(z); }));
    if (history_.size() > coef_.size()) history_.pop_back();
    t += dt_;
    Vec next = forcing_at(t);
    Vec conv = Vec::Zero(Eigen::Index(rows_.size()));
    for (std::size_t k = 0; k < history_.size(); ++k) conv += coef_[k] * history_[k];
    for (std::size_t r = 0; r < rows_.size(); ++r) next(Eigen::Index(rows_[r])) += conv(Eigen::Index(r));
    u = std::move(next);
  }

  const std::vector<char>& active() const { return active_; }
  double reach() const { return reach_; }

  Vec u;
  double t = 0.0;

 private:
  PeriodicGrid grid_;
  Forcing f_;
  Nonlinearity g_;
  double dt_;
  double reach_ = 0.0;
  std::vector<char> active_;
  std::vector<std::size_t> rows_;
  std::vector<SparseRow> coef_;
  std::deque<Vec> history_;
};

namespace detail {

template <class Marcher>
SpaceTimeField march(Marcher& m, const PeriodicGrid& grid, double dt, double T,
                     double snapshot_every) {
  SpaceTimeField field;
  field.grid = grid;
  field.dt = dt;
  field.T = T;
  field.stride = std::max(1, int(std::lround(snapshot_every / dt)));
  field.active = m.active();
  field.reach = m.reach();
  const long steps = std::lround(T / dt);
  field.times.push_back(0.0);
  field.snapshots.push_back(m.u);
  double min_inc = kInf;
  for (long n = 1; n <= steps; ++n) {
    const Vec prev = m.u;
    m.step();
    check_finite(m.u, m.t);
    min_inc = std::min(min_inc, (m.u - prev).minCoeff());
    if (n % field.stride == 0 || n == steps) {
      field.times.push_back(n * dt);
      field.snapshots.push_back(m.u);
    }
  }
  field.min_increment = steps > 0 ? min_inc : 0.0;
  return field;
}

}  // namespace detail

inline SpaceTimeField solve_initial_value(const TimeKernel& G, const Forcing& f,
                                          const Nonlinearity& g, const PeriodicGrid& grid,
                                          double dt = 0.05, double T = 80.0,
                                          double snapshot_every = 1.0) {
  require(T >= 0, "horizon must be nonnegative");
  if (G.is_separable()) {
    SeparableMarcher m(G, f, g, grid, dt);
    return detail::march(m, grid, dt, T, snapshot_every);
  }
  HistoryMarcher m(G, f, g, grid, dt);
  return detail::march(m, grid, dt, T, snapshot_every);
}

struct LongTimeLimit {
  Vec u_inf;
  bool converged = false;
  double last_change = 0.0;
};

inline LongTimeLimit long_time_limit(const SpaceTimeField& field, double tol = 1e-4) {
  LongTimeLimit out;
  out.u_inf = field.final();
  if (field.T < 1.0) return out;
  out.last_change = (field.final() - field.at(field.T - 1.0)).cwiseAbs().maxCoeff();
  out.converged = out.last_change < tol;
  return out;
}

inline Vec sample_on_window(const PeriodicGrid& grid, const PointFn& fn) {
  Vec out(Eigen::Index(grid.window_size()));
  for (std::size_t a = 0; a < grid.window_size(); ++a) out(Eigen::Index(a)) = fn(grid.window_point(a));
  return out;
}

// sup over nodes whose kernel support lies in the window of
// |u - int V g(u) - f_inf|.
inline double limiting_equation_residual(const Vec& u_inf, const SpatialKernel& V,
                                         const Nonlinearity& g, const Vec& f_inf) {
  const auto& grid = V.grid();
  require(grid.window_radius() >= 2.0 * V.reach(), "window must be at least twice the kernel reach");
  require(std::size_t(u_inf.size()) == grid.window_size(), "u_inf must live on the window");
  const auto act = detail::interior_nodes(grid, V.reach());
  std::vector<std::size_t> rows;
  for (std::size_t a = 0; a < act.size(); ++a)
    if (act[a]) rows.push_back(a);
  std::vector<long> col(grid.window_size());
  for (std::size_t b = 0; b < col.size(); ++b) col[b] = long(b);
  const SparseRow M = V.window_matrix(rows, col, long(grid.window_size()), 1.0);
  const Vec gu = u_inf.unaryExpr([&](double z) { return g(z); });
  const Vec conv = M * gu;
  double res = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto a = Eigen::Index(rows[r]);
    res = std::max(res, std::abs(u_inf(a) - conv(Eigen::Index(r)) - f_inf(a)));
  }
  return res;
}

enum class Outcome { Propagates, FadesOut, Undetermined };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Propagates: return "Propagates";
    case Outcome::FadesOut: return "FadesOut";
    default: return "Undetermined";
  }
}

struct Classification {
  Outcome outcome = Outcome::Undetermined;
  double tail_inf = 0.0;
  double tail_sup = 0.0;
  double tail_dist_U = 0.0;  // sup |u - U| on the tail, when U is given
  std::size_t tail_nodes = 0;
};

// Tail = tail_radius <= |x| <= outer_radius; outer_radius <= 0 picks
// R - 5 * reach, dropping the frozen band and the boundary layer it feeds.
inline Classification classify_outcome(const Vec& u_inf, const PeriodicGrid& grid,
                                       const std::optional<Vec>& U, double tail_radius,
                                       double tol, double reach, double outer_radius = 0.0) {
  if (outer_radius <= 0) outer_radius = grid.window_radius() - 5.0 * reach;
  require(tail_radius < outer_radius, "tail radius must lie inside the usable window");
  Classification c;
  c.tail_inf = kInf;
  for (std::size_t a = 0; a < grid.window_size(); ++a) {
    const Point x = grid.window_point(a);
    const double m = std::max(std::abs(x[0]), std::abs(x[1]));
    if (m < tail_radius || m > outer_radius) continue;
    ++c.tail_nodes;
    const double v = u_inf(Eigen::Index(a));
    c.tail_inf = std::min(c.tail_inf, v);
    c.tail_sup = std::max(c.tail_sup, v);
    if (U) c.tail_dist_U = std::max(c.tail_dist_U, std::abs(v - (*U)(Eigen::Index(grid.cell_index_of(a)))));
  }
  if (c.tail_sup <= tol)
    c.outcome = Outcome::FadesOut;
  else if (c.tail_inf >= tol && (!U || c.tail_dist_U <= tol))
    c.outcome = Outcome::Propagates;
  return c;
}

}  // namespace epiwave
