#pragma once

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "epiwave/dispersion.hpp"
#include "epiwave/parallel.hpp"
#include "epiwave/steady_state.hpp"

namespace epiwave {

// Profiles W(zeta, theta) in the moving frame zeta = x e - c t, theta the cell
// index of x, on zeta nodes a h for a in [lo, hi]. Rows are zeta nodes,
// columns cell nodes. apply() evaluates
//   sum_{j,m} kappa_{ijm} int_0^inf exp(-mu_j tau) G(zeta + shift h + c tau, j) dtau
// with G linear between nodes and the tau-integral done exactly.
class Slab {
 public:
  Slab(const DispersionModel& model, double c, int lo, int hi)
      : model_(&model), c_(c), lo_(lo), hi_(hi) {
    require(model.exact_slab(), "wave construction needs a separable kernel in one dimension");
    require(c >= 0, "speed must be nonnegative");
    const int n = int(model.grid().cell_size());
    h_ = model.grid().spacing();
    by_row_.resize(std::size_t(n));
    for (const auto& en : model.entries()) by_row_[std::size_t(en.i)].push_back(en);
    for (int j = 0; j < n; ++j) w_.emplace_back(model.mu()[std::size_t(j)], c, h_);
  }

  int lo() const { return lo_; }
  int hi() const { return hi_; }
  int rows() const { return hi_ - lo_ + 1; }
  int cols() const { return int(w_.size()); }
  double h() const { return h_; }
  double zeta(int a) const { return a * h_; }
  int pad() const { return model_->max_shift() + 1; }

  // Time-integrated profile per column; beyond hi, G continues as
  // G(hi) exp(-tail_rate (zeta - zeta_hi)), or as zero when tail_rate < 0.
  Mat transport(const Mat& G, double tail_rate) const {
    Mat H(G.rows(), G.cols());
    for (int j = 0; j < cols(); ++j) {
      const auto& mw = w_[std::size_t(j)];
      const Eigen::Index last = G.rows() - 1;
      if (mw.frozen) {
        H.col(j) = G.col(j) * mw.inv_mu;
        continue;
      }
      H(last, j) = tail_rate >= 0 ? G(last, j) * mw.factor(tail_rate, h_) : mw.a * G(last, j);
      for (Eigen::Index k = last - 1; k >= 0; --k)
        H(k, j) = mw.a * G(k, j) + mw.b * G(k + 1, j) + mw.q * H(k + 1, j);
    }
    return H;
  }

  // Operator values at nodes [t_lo, t_hi], given G on the whole slab.
  Mat apply(const Mat& G, int t_lo, int t_hi, double tail_rate) const {
    require(t_lo - pad() >= lo_ && t_hi + pad() <= hi_, "target nodes too close to the slab edge");
    const Mat H = transport(G, tail_rate);
    Mat out(t_hi - t_lo + 1, cols());
    parallel_for(0, std::size_t(t_hi - t_lo + 1), [&](std::size_t r) {
      const int a = t_lo + int(r);
      for (int i = 0; i < cols(); ++i) {
        double acc = 0.0;
        for (const auto& en : by_row_[std::size_t(i)]) acc += en.kappa * H(a + en.shift - lo_, en.j);
        out(Eigen::Index(r), i) = acc;
      }
    });
    return out;
  }

 private:
  const DispersionModel* model_;
  double c_;
  int lo_, hi_;
  double h_ = 0.0;
  std::vector<std::vector<DispersionModel::Entry>> by_row_;
  std::vector<MovingWeights> w_;
};

inline Mat apply_g(const Mat& W, const Nonlinearity& g) {
  return W.unaryExpr([&](double z) { return g(z); });
}

struct SubSuper {
  double c = 0.0;
  double rho = 0.0, rho_prime = 0.0;
  double lambda = 0.0, lambda_prime = 0.0;
  double M = 0.0;
  Vec phi, phi_prime;
  Vec U;
  int lo = 0, hi = 0;              // slab nodes
  int inner_lo = 0, inner_hi = 0;  // iterated / checked nodes
  Mat usub, usuper;
  // band where usub stays above plateau_inf
  double plateau_lo = 0.0, plateau_hi = 0.0, plateau_inf = 0.0;
};

struct SubSuperCheck {
  double super_fraction = 0.0;  // share of inner nodes with T(usuper) <= usuper
  double sub_fraction = 0.0;    // share with T(usub) >= usub
  double super_worst = 0.0;     // max of T(usuper) - usuper
  double sub_worst = 0.0;       // max of usub - T(usub)
  double order_worst = 0.0;     // max of usub - usuper
};

namespace detail {

// Smallest rho with lambda(rho, c) = 1, and the minimizer of lambda(., c).
inline std::pair<double, double> decay_roots(const DispersionModel& model, double c) {
  std::uintmax_t iters = 200;
  auto mn = boost::math::tools::brent_find_minima([&](double r) { return model.lambda(r, c); },
                                                  1e-6, 12.0, 40, iters);
  if (mn.second >= 1.0) {
    std::ostringstream os;
    os << "{\"c\":" << c << ",\"min_lambda\":" << mn.second << ",\"rho_min\":" << mn.first << "}";
    throw NumericalError("no decay rate with lambda(rho, c) <= 1: c is not above c*", os.str());
  }
  auto f = [&](double r) { return model.lambda(r, c) - 1.0; };
  auto tol = [](double a, double b) { return std::abs(b - a) <= 4e-16 * std::max(1.0, std::abs(a)); };
  iters = 300;
  auto r = boost::math::tools::toms748_solve(f, 0.0, mn.first, tol, iters);
  // Take the end of the bracket where lambda is closest to 1.
  const double rho = std::abs(f(r.first)) <= std::abs(f(r.second)) ? r.first : r.second;
  return {rho, mn.first};
}

}  // namespace detail

// usuper = min(phi_rho exp(-rho zeta), U) and usub = max(v, 0) with
// v = phi_rho exp(-rho zeta) - M phi_rho' exp(-rho' zeta).
inline SubSuper build_sub_super(const DispersionModel& model, double c, const Vec& U, double L) {
  require(model.exact_slab(), "wave construction needs a separable kernel in one dimension");
  require(model.lambda(0.0, 0.0) > 1.0, "waves need lambda1 > 1");
  require(L > 0, "slab half-width must be positive");
  const auto& g = model.g();
  SubSuper ss;
  ss.c = c;
  ss.U = U;
  const auto [rho, rho_min] = detail::decay_roots(model, c);
  ss.rho = rho;
  ss.rho_prime = std::min(rho_min, 1.9 * rho);
  const auto p = model.eigen(ss.rho, c, 1e-14);
  const auto pp = model.eigen(ss.rho_prime, c, 1e-14);
  ss.phi = p.phi;
  ss.phi_prime = pp.phi;
  ss.lambda = p.lambda;
  ss.lambda_prime = pp.lambda;
  if (!(ss.lambda_prime < 1.0)) {
    std::ostringstream os;
    os << "{\"rho\":" << ss.rho << ",\"rho_prime\":" << ss.rho_prime << ",\"lambda_prime\":" << ss.lambda_prime << "}";
    throw NumericalError("no admissible rho' with lambda(rho', c) < 1 (c too close to c*)", os.str());
  }

  const double h = model.grid().spacing();
  const int n = int(model.grid().cell_size());
  const int Ln = int(std::ceil(L / h));
  const int pad = model.max_shift() + 1;
  const int tail = int(std::ceil(36.0 / (ss.rho * h)));
  ss.inner_lo = -Ln;
  ss.inner_hi = Ln;
  ss.lo = -Ln - pad;
  ss.hi = Ln + pad + tail;
  const int rows = ss.hi - ss.lo + 1;

  const double C = g.curvature_bound / g.slope0;
  const double ratio2 = (ss.phi.array().square() / ss.phi_prime.array()).maxCoeff();
  ss.usuper.resize(rows, n);
  for (int r = 0; r < rows; ++r)
    for (int i = 0; i < n; ++i)
      ss.usuper(r, i) = std::min(ss.phi(i) * std::exp(-ss.rho * (ss.lo + r) * h), U(i));

  double M = (ss.phi.array() / ss.phi_prime.array()).maxCoeff();
  auto build = [&](double Mv) {
    Mat s(rows, n);
    for (int r = 0; r < rows; ++r) {
      const double z = (ss.lo + r) * h;
      for (int i = 0; i < n; ++i)
        s(r, i) = std::max(0.0, ss.phi(i) * std::exp(-ss.rho * z) -
                                    Mv * ss.phi_prime(i) * std::exp(-ss.rho_prime * z));
    }
    return s;
  };
  while (true) {
    const bool ineq = M * ss.lambda_prime + C * ratio2 * ss.lambda_prime <= M;
    if (ineq) {
      ss.usub = build(M);
      if ((ss.usub - ss.usuper).maxCoeff() <= 0.0) break;
    }
    M *= 2.0;
    if (M > 1e8) {
      std::ostringstream os;
      os << "{\"M\":" << M << ",\"lambda_prime\":" << ss.lambda_prime << "}";
      throw NumericalError("subsolution scale M exceeded its cap", os.str());
    }
  }
  ss.M = M;
  // Plateau: where every cell node of usub exceeds half its maximum.
  const Vec rowmin = ss.usub.rowwise().minCoeff();
  const double peak = rowmin.maxCoeff();
  int first = -1, last = -1;
  for (int r = 0; r < rows; ++r)
    if (rowmin(r) >= 0.5 * peak) {
      if (first < 0) first = r;
      last = r;
    }
  ss.plateau_lo = (ss.lo + first) * h;
  ss.plateau_hi = (ss.lo + last) * h;
  ss.plateau_inf = 0.5 * peak;
  return ss;
}

inline Slab make_slab(const DispersionModel& model, const SubSuper& ss) {
  return Slab(model, ss.c, ss.lo, ss.hi);
}

// Nodewise check of T(usuper) <= usuper and T(usub) >= usub on the inner nodes,
// with a round-off allowance `slack`.
inline SubSuperCheck verify_sub_super(const DispersionModel& model, const SubSuper& ss,
                                      double slack = 1e-12) {
  const Slab slab = make_slab(model, ss);
  const auto& g = model.g();
  const Mat Tsup = slab.apply(apply_g(ss.usuper, g), ss.inner_lo, ss.inner_hi, ss.rho);
  const Mat Tsub = slab.apply(apply_g(ss.usub, g), ss.inner_lo, ss.inner_hi, ss.rho);
  const int off = ss.inner_lo - ss.lo;
  const Eigen::Index nr = Tsup.rows(), nc = Tsup.cols();
  const Mat dsup = Tsup - ss.usuper.block(off, 0, nr, nc);
  const Mat dsub = ss.usub.block(off, 0, nr, nc) - Tsub;
  SubSuperCheck ck;
  ck.super_worst = dsup.maxCoeff();
  ck.sub_worst = dsub.maxCoeff();
  ck.order_worst = (ss.usub - ss.usuper).maxCoeff();
  const double total = double(nr * nc);
  ck.super_fraction = (dsup.array() <= slack).count() / total;
  ck.sub_fraction = (dsub.array() <= slack).count() / total;
  return ck;
}

struct TailDiagnostic {
  double delta = 0.0;
  double ahead_sup = 0.0;   // sup over zeta >= delta of u
  double behind_dist = 0.0; // sup over zeta <= -delta of |u - U|
};

struct WaveSolution {
  double c = 0.0;
  double e = 1.0;
  double h = 0.0;
  int lo = 0, inner_lo = 0, inner_hi = 0;
  Mat u;  // slab values, rows lo..
  double residual = 0.0;
  int iterations = 0;
  std::vector<double> increments;
  bool monotone = true;      // iterates nonincreasing at every node
  bool sandwiched = true;    // usub <= u <= usuper at every node
  double min_gap_sub = 0.0;  // min of u - usub
  std::vector<TailDiagnostic> tails;
  SubSuper bounds;

  double zeta(int r) const { return (lo + r) * h; }
};

inline std::vector<TailDiagnostic> tail_diagnostics(const Mat& u, int lo, int inner_lo, int inner_hi,
                                                    double h, const Vec& U,
                                                    const std::vector<double>& deltas) {
  std::vector<TailDiagnostic> out;
  for (double d : deltas) {
    TailDiagnostic t{d, 0.0, 0.0};
    for (int a = inner_lo; a <= inner_hi; ++a) {
      const double z = a * h;
      const int r = a - lo;
      for (int i = 0; i < u.cols(); ++i) {
        if (z >= d) t.ahead_sup = std::max(t.ahead_sup, u(r, i));
        if (z <= -d) t.behind_dist = std::max(t.behind_dist, std::abs(u(r, i) - U(i)));
      }
    }
    out.push_back(t);
  }
  return out;
}

// Decreasing iteration u_{n+1} = T(u_n) from usuper on |zeta| <= L, values
// outside taken from usuper.
inline WaveSolution construct_wave(const DispersionModel& model, double c, const Vec& U,
                                   double L = 40.0, double tol = 1e-6, int max_iter = 200000,
                                   const std::vector<double>& deltas = {1, 2, 5, 10, 15, 20, 30}) {
  WaveSolution ws;
  ws.bounds = build_sub_super(model, c, U, L);
  const auto& ss = ws.bounds;
  const Slab slab = make_slab(model, ss);
  const auto& g = model.g();
  ws.c = c;
  ws.e = model.direction();
  ws.h = slab.h();
  ws.lo = ss.lo;
  ws.inner_lo = ss.inner_lo;
  ws.inner_hi = ss.inner_hi;
  ws.u = ss.usuper;
  const int off = ss.inner_lo - ss.lo;
  const double round = 1e-12;
  double inc = kInf;
  for (int it = 1; it <= max_iter; ++it) {
    const Mat next = slab.apply(apply_g(ws.u, g), ss.inner_lo, ss.inner_hi, ss.rho);
    auto cur = ws.u.block(off, 0, next.rows(), next.cols());
    const Mat d = next - cur;
    if (d.maxCoeff() > round) ws.monotone = false;
    const Mat below = ss.usub.block(off, 0, next.rows(), next.cols()) - next;
    if (below.maxCoeff() > round) {
      ws.sandwiched = false;
      std::ostringstream os;
      os << "{\"iteration\":" << it << ",\"depth\":" << below.maxCoeff() << "}";
      throw NumericalError("wave iterate dropped below the subsolution; enlarge the slab", os.str());
    }
    inc = d.cwiseAbs().maxCoeff();
    ws.increments.push_back(inc);
    cur = next;
    ws.iterations = it;
    if (inc < tol) break;
  }
  if (!(inc < tol)) {
    std::ostringstream os;
    os << "{\"last_increment\":" << inc << ",\"iterations\":" << max_iter << "}";
    throw NumericalError("wave iteration exceeded max_iter", os.str());
  }
  const Mat Tu = slab.apply(apply_g(ws.u, g), ss.inner_lo, ss.inner_hi, ss.rho);
  ws.residual = (Tu - ws.u.block(off, 0, Tu.rows(), Tu.cols())).cwiseAbs().maxCoeff();
  ws.min_gap_sub = (ws.u - ss.usub).minCoeff();
  if (ws.min_gap_sub < -round || (ws.u - ss.usuper).maxCoeff() > round) ws.sandwiched = false;
  ws.tails = tail_diagnostics(ws.u, ws.lo, ws.inner_lo, ws.inner_hi, ws.h, U, deltas);
  return ws;
}

struct OscillatingSubsolution {
  double c = 0.0;
  double rho_R = 0.0, rho_I = 0.0;
  Vec phi_R, phi_I;
  double band = 0.0;  // |xi| <= band
  int lo = 0;
  double h = 0.0;
  Mat values;         // v_plus on the slab, rows lo..
  Mat slack;          // L(v_plus) - v_plus on band nodes
  int band_lo = 0, band_hi = 0;
  double min_slack_positive = 0.0;  // over band nodes with v_plus > 0
  double min_slack_band = 0.0;      // over all band nodes
  double edge_minus = 0.0, edge_plus = 0.0;  // v_c at xi = -band, +band (cell node 0)
};

// v_c = Re(phi exp(-rho xi)) = exp(-rho_R xi)(phi_R cos(rho_I xi) + phi_I sin(rho_I xi)).
inline double oscillating_value(double rR, double rI, double pR, double pI, double xi) {
  return std::exp(-rR * xi) * (pR * std::cos(rI * xi) + pI * std::sin(rI * xi));
}

inline OscillatingSubsolution oscillating_subsolution(const DispersionModel& model, double c,
                                                      const ComplexRoot& root) {
  require(model.exact_slab(), "oscillating subsolution needs a separable kernel in one dimension");
  require(std::abs(root.rho.imag()) > 0, "decay rate must have a nonzero imaginary part");
  OscillatingSubsolution os;
  os.c = c;
  os.rho_R = root.rho.real();
  os.rho_I = std::abs(root.rho.imag());
  CVec phi = root.phi;
  if (root.rho.imag() < 0) phi = phi.conjugate();
  os.phi_R = phi.real();
  os.phi_I = phi.imag();
  require(os.phi_R.minCoeff() > os.phi_I.cwiseAbs().maxCoeff(),
          "need min phi_R > max |phi_I|; retry with c closer to c*");
  os.band = 3.0 * std::numbers::pi / (4.0 * os.rho_I);
  const double h = model.grid().spacing();
  const int n = int(model.grid().cell_size());
  const int pad = model.max_shift() + 1;
  os.h = h;
  os.band_lo = -int(std::floor(os.band / h));
  os.band_hi = int(std::floor(os.band / h));
  os.lo = os.band_lo - pad;
  const int hi = os.band_hi + pad;
  const int rows = hi - os.lo + 1;
  os.values = Mat::Zero(rows, n);
  for (int r = 0; r < rows; ++r) {
    const double xi = (os.lo + r) * h;
    if (std::abs(xi) > os.band) continue;
    for (int i = 0; i < n; ++i)
      os.values(r, i) = std::max(0.0, oscillating_value(os.rho_R, os.rho_I, os.phi_R(i), os.phi_I(i), xi));
  }
  os.edge_minus = oscillating_value(os.rho_R, os.rho_I, os.phi_R(0), os.phi_I(0), -os.band);
  os.edge_plus = oscillating_value(os.rho_R, os.rho_I, os.phi_R(0), os.phi_I(0), os.band);

  const Slab slab(model, c, os.lo, hi);
  const Mat Lv = slab.apply(os.values * model.g().slope0, os.band_lo, os.band_hi, -1.0);
  const int off = os.band_lo - os.lo;
  os.slack = Lv - os.values.block(off, 0, Lv.rows(), Lv.cols());
  os.min_slack_band = os.slack.minCoeff();
  os.min_slack_positive = kInf;
  const double scale = os.values.maxCoeff();
  for (int r = 0; r < Lv.rows(); ++r)
    for (int i = 0; i < n; ++i) {
      if (os.values(off + r, i) > 0) os.min_slack_positive = std::min(os.min_slack_positive, os.slack(r, i));
      if (os.slack(r, i) < -1e-12 * scale) {
        std::ostringstream d;
        d << "{\"xi\":" << (os.band_lo + r) * h << ",\"cell\":" << i << ",\"slack\":" << os.slack(r, i) << "}";
        throw NumericalError("L(v_plus) >= v_plus fails; move c closer to c*", d.str());
      }
    }
  return os;
}

}  // namespace epiwave
