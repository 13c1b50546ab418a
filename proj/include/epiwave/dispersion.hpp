#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "epiwave/error.hpp"
#include "epiwave/kernel.hpp"
#include "epiwave/nonlinearity.hpp"
#include "epiwave/spatial_kernel.hpp"
#include "epiwave/spectral.hpp"

namespace epiwave {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

struct DispersionPoint {
  double rho = 0.0;
  double c = 0.0;
  double e = 1.0;
  double lambda = 0.0;
  Vec phi;
  double residual = 0.0;
};

// Time-integration weights for a piecewise-linear profile G on a grid of
// step h moving at speed c: H_k = a G_k + b G_{k+1} + q H_{k+1} equals
// int_0^inf exp(-mu tau) G(zeta_k + c tau) dtau.
struct MovingWeights {
  double a = 0.0, b = 0.0, q = 0.0;
  double inv_mu = 0.0;
  bool frozen = false;  // c == 0: H = G / mu

  MovingWeights() = default;
  MovingWeights(double mu, double c, double h) {
    inv_mu = 1.0 / mu;
    if (c <= 0) {
      frozen = true;
      return;
    }
    const double z = mu * h / c;
    double E0, E1;  // int_0^1 e^{-z s} ds and int_0^1 s e^{-z s} ds
    if (z < 1e-3) {
      E0 = 1 - z / 2 + z * z / 6 - z * z * z / 24;
      E1 = 0.5 - z / 3 + z * z / 8 - z * z * z / 30;
    } else {
      E0 = -std::expm1(-z) / z;
      E1 = (1 - std::exp(-z) * (1 + z)) / (z * z);
    }
    a = h / c * (E0 - E1);
    b = h / c * E1;
    q = std::exp(-z);
  }

  // Transfer factor for G_k = exp(-rho k h).
  template <class S>
  S factor(S rho, double h) const {
    if (frozen) return S(inv_mu);
    const S r = std::exp(-rho * h);
    return (a + b * r) / (1.0 - q * r);
  }

  double factor_drho(double rho, double h) const {
    if (frozen) return 0.0;
    const double r = std::exp(-rho * h);
    const double den = 1.0 - q * r;
    return -h * r * (b + q * a) / (den * den);
  }
};

// Discrete exponentially weighted operator S_{rho,c,e}. For separable kernels
// in d = 1 the entries are
//   g'(0) sum_m kappa_{ijm} exp(-rho e (j - i + m n) h) F_j(rho, c)
// with kappa the lattice tables of K and F_j the moving-frame transfer factor,
// so that the slab operator used for waves maps phi exp(-rho zeta) to exactly
// lambda phi exp(-rho zeta). Other kernels go through periodize_kernel.
class DispersionModel {
 public:
  struct Entry {
    int i, j, shift;
    double kappa;
  };

  // e is +1 or -1 in one dimension and the angle of the unit direction in two.
  DispersionModel(const TimeKernel& G, const Nonlinearity& g, const PeriodicGrid& grid,
                  double e = 1.0)
      : G_(G), g_(g), grid_(grid), e_(e) {
    require(std::abs(std::abs(e) - 1.0) < 1e-12 || grid.dim() == 2,
            "direction must be +1 or -1 in one dimension");
    exact_ = G.is_separable() && grid.dim() == 1;
    if (!exact_) return;
    const auto& s = G.separable_part();
    const auto K = periodize_kernel(s.K, grid);
    const int n = grid.cell_points();
    const double h = grid.spacing();
    mu_.resize(std::size_t(n));
    for (int j = 0; j < n; ++j) mu_[std::size_t(j)] = s.mu(grid.cell_point(std::size_t(j)));
    for (int m = -K.lattice_truncation(); m <= K.lattice_truncation(); ++m) {
      const Mat& T = K.image(m);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double v = T(i, j);
          if (v == 0.0) continue;
          const int d = j - i + m * n;
          entries_.push_back({i, j, int(std::lround(e * d)), v * h});
          max_shift_ = std::max(max_shift_, std::abs(d));
        }
    }
  }

  bool exact_slab() const { return exact_; }
  const std::vector<Entry>& entries() const { return entries_; }
  const std::vector<double>& mu() const { return mu_; }
  int max_shift() const { return max_shift_; }
  const PeriodicGrid& grid() const { return grid_; }
  const Nonlinearity& g() const { return g_; }
  const TimeKernel& kernel() const { return G_; }
  double direction() const { return e_; }

  template <class S>
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> matrix(S rho, double c) const {
    using M = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
    const int n = int(grid_.cell_size());
    if (exact_) {
      const double h = grid_.spacing();
      std::vector<S> F(static_cast<std::size_t>(n));
      for (int j = 0; j < n; ++j) F[std::size_t(j)] = MovingWeights(mu_[std::size_t(j)], c, h).factor(rho, h);
      M A = M::Zero(n, n);
      for (const auto& en : entries_)
        A(en.i, en.j) += en.kappa * std::exp(-rho * double(en.shift) * h) * F[std::size_t(en.j)];
      return A * g_.slope0;
    }
    if constexpr (std::is_same_v<S, double>) {
      require(rho >= 0 && c >= 0, "rho and c must be nonnegative");
      auto V = time_integrate_kernel(G_, rho * c);
      const double ex = grid_.dim() == 2 ? std::cos(e_) : e_, ey = grid_.dim() == 2 ? std::sin(e_) : 0.0;
      const double r = rho;
      KernelFunction W;
      auto weight = [r, ex, ey](const Point& x, const Point& y) {
        return std::exp(-r * ((y[0] - x[0]) * ex + (y[1] - x[1]) * ey));
      };
      W.value = [V, weight](const Point& x, const Point& y) { return V(x, y) * weight(x, y); };
      if (V.factored) {
        auto f = *V.factored;
        W.factored = Factored{[f, weight](const Point& x, const Point& y) { return f.core(x, y) * weight(x, y); },
                              f.left, f.right, false};
      }
      W.support = V.support;
      try {
        const auto P = periodize_kernel(W, grid_);
        return P.periodic() * (g_.slope0 * grid_.weight());
      } catch (const NumericalError& err) {
        throw ValidationError(std::string("exponential weight overflows the lattice sum (rho too large "
                                          "for a non-compact kernel; super-linear spreading): ") +
                              err.what());
      }
    } else {
      throw ValidationError("complex decay rates need a separable kernel in one dimension");
    }
  }

  DispersionPoint eigen(double rho, double c, double tol = 1e-12) const {
    require(rho >= 0 && c >= 0, "rho and c must be nonnegative");
    CellOperator A;
    A.entries = matrix<double>(rho, c);
    const double scale = std::max(1.0, A.entries.rowwise().sum().maxCoeff());
    const auto ep = principal_eigenpair(A, tol * scale);
    return {rho, c, e_, ep.lambda, ep.phi, ep.residual};
  }

  double lambda(double rho, double c) const { return eigen(rho, c).lambda; }

  // d lambda / d rho = psi^T A_rho phi / psi^T phi with psi the left eigenvector.
  double lambda_drho(double rho, double c) const {
    require(exact_, "analytic rho-derivative needs a separable kernel in one dimension");
    const int n = int(grid_.cell_size());
    const double h = grid_.spacing();
    Mat dA = Mat::Zero(n, n);
    for (const auto& en : entries_) {
      const MovingWeights mw(mu_[std::size_t(en.j)], c, h);
      const double ex = std::exp(-rho * en.shift * h);
      dA(en.i, en.j) += en.kappa * ex * (mw.factor_drho(rho, h) - en.shift * h * mw.factor(rho, h));
    }
    CellOperator A, At;
    A.entries = matrix<double>(rho, c);
    At.entries = A.entries.transpose();
    const double scale = std::max(1.0, A.entries.rowwise().sum().maxCoeff());
    const Vec phi = principal_eigenpair(A, 1e-14 * scale).phi;
    const Vec psi = principal_eigenpair(At, 1e-14 * scale).phi;
    return g_.slope0 * psi.dot(dA * phi) / psi.dot(phi);
  }

 private:
  TimeKernel G_;
  Nonlinearity g_;
  PeriodicGrid grid_;
  double e_;
  bool exact_ = false;
  std::vector<Entry> entries_;
  std::vector<double> mu_;
  int max_shift_ = 0;
};

inline DispersionPoint dispersion_eigenvalue(const DispersionModel& model, double rho, double c) {
  return model.eigen(rho, c);
}

inline std::vector<double> default_rho_grid(int count = 64, double lo = 1e-3, double hi = 8.0) {
  std::vector<double> out;
  for (int k = 0; k < count; ++k) out.push_back(lo * std::pow(hi / lo, double(k) / (count - 1)));
  return out;
}

struct MinimalSpeed {
  double c_star = 0.0;
  double rho_star = 0.0;
  bool at_rest = false;  // lambda1 <= 1: c* = 0
  std::vector<std::pair<double, double>> curve;  // (rho, c(rho))
};

// c(rho): the speed with lambda(rho, c) = 1, 0 when lambda(rho, 0) <= 1 and
// infinity when lambda(rho, c_max) > 1.
inline double speed_at(const DispersionModel& model, double rho, double c_max = 1e3) {
  const double l0 = model.lambda(rho, 0.0);
  if (l0 <= 1.0) return 0.0;
  if (model.lambda(rho, c_max) > 1.0) return kInf;
  std::uintmax_t iters = 200;
  auto f = [&](double c) { return model.lambda(rho, c) - 1.0; };
  auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-14 * std::max(1.0, std::abs(a)); };
  auto r = boost::math::tools::toms748_solve(f, 0.0, c_max, l0 - 1.0, model.lambda(rho, c_max) - 1.0,
                                             tol, iters);
  return 0.5 * (r.first + r.second);
}

// c* = min over rho of c(rho): sampled on rho_grid, then refined by Brent's
// method around the best sample.
inline MinimalSpeed minimal_speed(const DispersionModel& model,
                                  const std::vector<double>& rho_grid = default_rho_grid(),
                                  double c_max = 1e3) {
  require(rho_grid.size() >= 3, "rho grid needs at least three points");
  MinimalSpeed out;
  if (model.lambda(0.0, 0.0) <= 1.0) {
    out.at_rest = true;
    return out;
  }
  std::size_t best = 0;
  for (std::size_t k = 0; k < rho_grid.size(); ++k) {
    const double c = speed_at(model, rho_grid[k], c_max);
    out.curve.emplace_back(rho_grid[k], c);
    if (c < out.curve[best].second) best = k;
  }
  if (!std::isfinite(out.curve[best].second)) {
    std::ostringstream os;
    os << "{\"c_max\":" << c_max << "}";
    throw NumericalError("no speed below c_max satisfies lambda(rho, c) <= 1; raise c_max", os.str());
  }
  const double lo = best > 0 ? rho_grid[best - 1] : rho_grid[0] * 0.5;
  const double hi = best + 1 < rho_grid.size() ? rho_grid[best + 1] : rho_grid[best];
  std::uintmax_t iters = 200;
  auto r = boost::math::tools::brent_find_minima(
      [&](double rho) { return speed_at(model, rho, c_max); }, lo, hi, 40, iters);
  out.rho_star = r.first;
  out.c_star = r.second;
  if (out.curve[best].second < out.c_star) {
    out.rho_star = out.curve[best].first;
    out.c_star = out.curve[best].second;
  }
  // Brent locates a flat minimum only to about sqrt(eps). Where the analytic
  // derivative exists, polish rho* as the zero of lambda_rho(rho, c(rho)),
  // which has the sign of c'(rho).
  if (model.exact_slab()) {
    auto dl = [&](double rho) { return model.lambda_drho(rho, speed_at(model, rho, c_max)); };
    const double a = lo, b = hi;
    const double fa = dl(a), fb = dl(b);
    if (fa < 0 && fb > 0) {
      std::uintmax_t it = 100;
      auto tol = [](double x, double y) { return std::abs(y - x) <= 1e-15 * std::max(1.0, std::abs(x)); };
      auto root = boost::math::tools::toms748_solve(dl, a, b, fa, fb, tol, it);
      const double rs = 0.5 * (root.first + root.second);
      const double cs = speed_at(model, rs, c_max);
      if (cs <= out.c_star + 1e-12) {
        out.rho_star = rs;
        out.c_star = cs;
      }
    }
  }
  return out;
}

// Principal eigenpair of the complex matrix near a known one, by inverse
// iteration with a fixed shift.
struct ComplexEigen {
  cplx lambda;
  CVec phi;
  double residual = 0.0;
};

inline ComplexEigen complex_eigen(const CMat& A, const CVec& seed, cplx shift, double tol = 1e-13) {
  const Eigen::Index n = A.rows();
  Eigen::PartialPivLU<CMat> lu(A - shift * CMat::Identity(n, n));
  CVec v = seed / seed.norm();
  ComplexEigen out;
  for (int it = 0; it < 200; ++it) {
    CVec x = lu.solve(v);
    v = x / x.norm();
    const CVec Av = A * v;
    out.lambda = v.dot(Av);  // conjugates v
    out.residual = (Av - out.lambda * v).cwiseAbs().maxCoeff() / v.cwiseAbs().maxCoeff();
    if (out.residual < tol * std::max(1.0, std::abs(out.lambda))) break;
  }
  // Normalize: mean real positive, max modulus 1.
  const cplx mean = v.mean();
  v *= std::abs(mean) / mean;
  v /= v.cwiseAbs().maxCoeff();
  out.phi = v;
  return out;
}

struct ComplexRoot {
  cplx rho;
  cplx lambda;
  CVec phi;
  double residual = 0.0;  // |lambda(rho(c), c) - 1|
  int continuation_steps = 0;
};

// Root of lambda(rho, c) = 1 in complex rho, continued from (rho*, c*).
// The branch is parametrized by s = sqrt(c* - c): near c* the root behaves
// like rho* + i k s.
inline ComplexRoot complex_decay_root(const DispersionModel& model, double c, double rho_star,
                                      double c_star, int steps = 8) {
  require(model.exact_slab(), "complex decay root needs a separable kernel in one dimension");
  require(c <= c_star + 1e-12, "continuation runs from c* downwards");
  auto F = [&](cplx rho, double cc, CVec& phi, cplx& lam) {
    const CMat A = model.matrix<cplx>(rho, cc);
    auto ce = complex_eigen(A, phi, lam);
    phi = ce.phi;
    lam = ce.lambda;
    return ce.lambda - 1.0;
  };
  const auto base = model.eigen(rho_star, c_star, 1e-14);
  CVec phi = base.phi.cast<cplx>();
  cplx lam = base.lambda;
  ComplexRoot out;
  out.rho = rho_star;
  const double s_end = std::sqrt(std::max(0.0, c_star - c));
  if (s_end == 0.0) {
    out.lambda = lam;
    out.phi = phi / phi.cwiseAbs().maxCoeff();
    out.residual = std::abs(lam - 1.0);
    return out;
  }
  // Quadratic model around (rho*, c*).
  const double d = 1e-4;
  const double lc = (model.lambda(rho_star, c_star + d) - model.lambda(rho_star, c_star - d)) / (2 * d);
  const double lrr = (model.lambda(rho_star + d, c_star) - 2 * base.lambda +
                      model.lambda(rho_star - d, c_star)) / (d * d);
  require(lrr > 0 && lc < 0, "dispersion curve is not locally quadratic at (rho*, c*)");
  const double kq = std::sqrt(2 * std::abs(lc) / lrr);
  std::vector<std::pair<double, cplx>> hist{{0.0, cplx(rho_star, 0.0)}};
  for (int k = 1; k <= steps; ++k) {
    const double s = s_end * k / steps;
    const double cc = c_star - s * s;
    cplx rho;
    if (hist.size() == 1) {
      rho = cplx(rho_star, kq * s);
    } else {
      const auto [s1, r1] = hist[hist.size() - 2];
      const auto [s2, r2] = hist.back();
      rho = r2 + (r2 - r1) * ((s - s2) / (s2 - s1));
    }
    bool ok = false;
    for (int it = 0; it < 50; ++it) {
      cplx l0 = lam;
      const cplx Fv = F(rho, cc, phi, l0);
      lam = l0;
      if (std::abs(Fv) <= 1e-13) {
        ok = true;
        break;
      }
      const double dr = 1e-6 * std::max(1.0, std::abs(rho));
      CVec p1 = phi, p2 = phi;
      cplx l1 = l0, l2 = l0;
      const cplx dF = (F(rho + dr, cc, p1, l1) - F(rho - dr, cc, p2, l2)) / (2 * dr);
      rho -= Fv / dF;
      if (!std::isfinite(rho.real()) || !std::isfinite(rho.imag())) break;
    }
    if (!ok) {
      std::ostringstream os;
      os << "{\"c\":" << cc << ",\"rho_re\":" << rho.real() << ",\"rho_im\":" << rho.imag() << "}";
      throw NumericalError("Newton iteration for the complex decay rate diverged; use smaller "
                           "continuation steps",
                           os.str());
    }
    hist.emplace_back(s, rho);
    out.rho = rho;
    out.continuation_steps = k;
  }
  // Final residual with a fresh evaluation.
  CVec p = phi;
  cplx l = lam;
  F(out.rho, c, p, l);
  out.lambda = l;
  out.phi = p;
  out.residual = std::abs(l - 1.0);
  if (out.rho.imag() < 0) {
    out.rho = std::conj(out.rho);
    out.phi = out.phi.conjugate();
    out.lambda = std::conj(out.lambda);
  }
  return out;
}

}  // namespace epiwave
