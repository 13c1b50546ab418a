#pragma once

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "epiwave/kernel.hpp"
#include "epiwave/nonlinearity.hpp"

namespace epiwave {

struct HypothesisCheck {
  std::string name;
  bool passed = true;
  std::string detail;   // measured quantities
  std::string witness;  // offending sample when failed
};

struct HypothesisReport {
  std::vector<HypothesisCheck> checks;
  double eta = 0.0;  // largest positivity pair found: Gamma > eta on |x-y| <= r, tau < r
  double r = 0.0;
  std::vector<std::pair<double, double>> modulus;  // (separation, L1 modulus)

  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
  const HypothesisCheck& at(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return c;
    throw ValidationError("no hypothesis check named " + name);
  }
};

namespace detail {

inline std::string fmt_point(const Point& p, int dim) {
  std::ostringstream os;
  os.precision(10);
  if (dim == 1)
    os << p[0];
  else
    os << "(" << p[0] << "," << p[1] << ")";
  return os.str();
}

// int_0^horizon h(tau) dtau on a fixed composite Simpson grid.
template <class F>
double tau_integral(F&& h, double horizon, int panels = 400) {
  const double d = horizon / panels;
  double s = h(0.0) + h(horizon);
  for (int k = 1; k < panels; ++k) s += (k % 2 ? 4.0 : 2.0) * h(k * d);
  return s * d / 3.0;
}

}  // namespace detail

// Sampled checks of the standing hypotheses on (Gamma, g, f). Deterministic:
// sample points come from a fixed-seed generator.
inline HypothesisReport validate_hypotheses(const TimeKernel& G, const Nonlinearity& g,
                                            const Forcing& f, int samples = 32,
                                            int separations = 16) {
  require(samples >= 1, "samples must be >= 1");
  require(separations >= 1, "separations must be >= 1");
  const int dim = G.dim();
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto rand_point = [&](double lo, double hi) {
    Point p{lo + (hi - lo) * unit(rng), dim == 1 ? 0.0 : lo + (hi - lo) * unit(rng)};
    return p;
  };
  const double A = std::isfinite(G.support_radius()) ? G.support_radius() : 4.0;
  const double H = G.horizon();
  HypothesisReport rep;

  // Kernel nonnegativity.
  {
    HypothesisCheck c{"kernel_nonnegative"};
    for (int s = 0; s < samples && c.passed; ++s) {
      Point x = rand_point(0, 1), y = x;
      auto d = rand_point(-A, A);
      y[0] += d[0];
      y[1] += d[1];
      const double tau = H * unit(rng);
      const double v = G(tau, x, y);
      if (!(v >= 0)) {
        c.passed = false;
        c.witness = "tau=" + std::to_string(tau) + " x=" + detail::fmt_point(x, dim) +
                    " y=" + detail::fmt_point(y, dim);
      }
    }
    rep.checks.push_back(c);
  }

  // Positivity near the diagonal: largest r (halving from A) with eta(r) > 0.
  {
    HypothesisCheck c{"positive_near_diagonal"};
    c.passed = false;
    for (double r = A; r > 1e-4; r *= 0.5) {
      double eta = kInf;
      std::mt19937_64 local(777);
      for (int s = 0; s < 4 * samples; ++s) {
        Point x{unit(local), dim == 1 ? 0.0 : unit(local)};
        Point y = x;
        const double rad = r * unit(local), ang = 2 * std::numbers::pi * unit(local);
        y[0] += dim == 1 ? (unit(local) < 0.5 ? -rad : rad) : rad * std::cos(ang);
        if (dim == 2) y[1] += rad * std::sin(ang);
        eta = std::min(eta, G(r * unit(local), x, y));
      }
      if (eta > 0) {
        rep.eta = eta;
        rep.r = r;
        c.passed = true;
        break;
      }
    }
    std::ostringstream os;
    os << "eta=" << rep.eta << " r=" << rep.r;
    c.detail = os.str();
    rep.checks.push_back(c);
  }

  // Periodicity under lattice shifts.
  {
    HypothesisCheck c{"periodic"};
    for (int s = 0; s < samples && c.passed; ++s) {
      Point x = rand_point(0, 1), y = x;
      auto d = rand_point(-A, A);
      y[0] += d[0];
      y[1] += d[1];
      const double tau = H * unit(rng) * 0.25;
      const int k0 = 1 + int(3 * unit(rng)), k1 = dim == 1 ? 0 : -1;
      Point xs{x[0] + k0, x[1] + k1}, ys{y[0] + k0, y[1] + k1};
      const double a = G(tau, x, y), b = G(tau, xs, ys);
      if (std::abs(a - b) > 1e-9 * (1 + std::abs(a))) {
        c.passed = false;
        c.witness = "x=" + detail::fmt_point(x, dim) + " y=" + detail::fmt_point(y, dim);
      }
    }
    rep.checks.push_back(c);
  }

  // Integrability and the L1 equicontinuity modulus
  // omega(delta) = max_x int int |Gamma(tau,x,y) - Gamma(tau,x+delta,y)| dy dtau.
  {
    HypothesisCheck integ{"integrable"}, equi{"equicontinuous"};
    const int ny = dim == 1 ? 256 : 64;
    const double Ay = std::isfinite(G.support_radius()) ? G.support_radius() + 1.0 : 8.0;
    auto l1 = [&](const Point& x1, const Point& x2, bool diff) {
      // Radial quadrature in d = 2 would need more care; a tensor grid is enough.
      const double hy = 2 * Ay / ny;
      double total = 0.0;
      const int ny2 = dim == 1 ? 1 : ny;
      for (int j1 = 0; j1 < ny2; ++j1)
        for (int j0 = 0; j0 < ny; ++j0) {
          Point y{x1[0] - Ay + (j0 + 0.5) * hy, dim == 1 ? 0.0 : x1[1] - Ay + (j1 + 0.5) * hy};
          double v;
          if (G.is_separable()) {
            const auto& s = G.separable_part();
            const double k1 = s.K(x1, y), k2 = diff ? s.K(x2, y) : 0.0;
            v = std::abs(k1 - k2) / s.mu(y);
          } else {
            v = detail::tau_integral(
                [&](double tau) {
                  return std::abs(G(tau, x1, y) - (diff ? G(tau, x2, y) : 0.0));
                },
                H);
          }
          total += v * (dim == 1 ? hy : hy * hy);
        }
      return total;
    };
    double mass = 0.0;
    std::vector<Point> xs;
    for (int s = 0; s < std::min(samples, 8); ++s) xs.push_back(rand_point(0, 1));
    for (const auto& x : xs) mass = std::max(mass, l1(x, x, false));
    integ.passed = std::isfinite(mass);
    integ.detail = "max row mass " + std::to_string(mass);
    double first = 0.0, last = 0.0;
    for (int k = 0; k < separations; ++k) {
      const double delta = 0.25 * std::pow(0.5, k);
      double w = 0.0;
      for (const auto& x : xs) w = std::max(w, l1(x, Point{x[0] + delta, x[1]}, true));
      rep.modulus.emplace_back(delta, w);
      if (k == 0) first = w;
      last = w;
    }
    equi.passed = std::isfinite(last) && last <= 0.05 * std::max(mass, 1e-300) + 1e-12 &&
                  last <= first + 1e-12;
    equi.detail = "omega(" + std::to_string(rep.modulus.back().first) + ")=" + std::to_string(last);
    if (!equi.passed) equi.witness = equi.detail;
    rep.checks.push_back(integ);
    rep.checks.push_back(equi);
  }

  // g: g(0)=0, increasing, bounded, KPP bounds, g(z)/z decreasing.
  {
    HypothesisCheck zero{"g_zero"}, inc{"g_increasing"}, bnd{"g_bounded"}, kpp{"g_kpp_bounds"},
        conc{"g_ratio_decreasing"};
    zero.passed = g(0.0) == 0.0;
    const int nz = 400;
    const double zmax = 10.0;
    double prev_g = 0.0, prev_ratio = kInf;
    bnd.passed = std::isfinite(g.sup_g);
    if (!bnd.passed) bnd.witness = "sup_g is infinite";
    for (int k = 1; k <= nz; ++k) {
      const double z = zmax * k / nz;
      const double v = g(z);
      if (inc.passed && !(v > prev_g)) {
        inc.passed = false;
        inc.witness = "z=" + std::to_string(z);
      }
      if (bnd.passed && v > g.sup_g) {
        bnd.passed = false;
        bnd.witness = "z=" + std::to_string(z);
      }
      const double tol = 1e-14 * (1 + z * z);
      if (kpp.passed && (v > g.slope0 * z + tol || v < g.slope0 * z - g.curvature_bound * z * z - tol)) {
        kpp.passed = false;
        kpp.witness = "z=" + std::to_string(z);
      }
      const double ratio = v / z;
      if (conc.passed && !(ratio < prev_ratio)) {
        conc.passed = false;
        conc.witness = "z=" + std::to_string(z);
      }
      prev_g = v;
      prev_ratio = ratio;
    }
    // Unbounded growth shows up in the samples even when sup_g claims a bound.
    if (bnd.passed && g(1e6) >= 1e5) {
      bnd.passed = false;
      bnd.witness = "g(1e6) = " + std::to_string(g(1e6));
    }
    for (auto* c : {&zero, &inc, &bnd, &kpp, &conc}) rep.checks.push_back(*c);
  }

  // f: nonnegative, nondecreasing in t, bounded by f_inf, f_inf compactly supported.
  {
    HypothesisCheck nonneg{"f_nonnegative"}, mono{"f_nondecreasing"}, lim{"f_below_limit"},
        supp{"f_limit_compact"};
    const double Rf = f.support + 1.0;
    for (int s = 0; s < samples; ++s) {
      const Point x = rand_point(-Rf, Rf);
      double prev = -kInf;
      for (int k = 0; k <= 64; ++k) {
        const double t = 0.25 * k;
        const double v = f.eval(t, x);
        if (nonneg.passed && v < 0) {
          nonneg.passed = false;
          nonneg.witness = "t=" + std::to_string(t) + " x=" + detail::fmt_point(x, dim);
        }
        if (mono.passed && v < prev - 1e-14) {
          mono.passed = false;
          mono.witness = "t=" + std::to_string(t) + " x=" + detail::fmt_point(x, dim);
        }
        if (lim.passed && v > f.limit(x) + 1e-14) {
          lim.passed = false;
          lim.witness = "t=" + std::to_string(t) + " x=" + detail::fmt_point(x, dim);
        }
        prev = v;
      }
      Point far = x;
      far[0] += (x[0] >= 0 ? 1 : -1) * (f.support + 2.0);
      const Point far2{far[0], dim == 1 ? 0.0 : far[1]};
      if (supp.passed && dim == 1 && std::abs(far2[0]) > f.support && f.limit(far2) != 0.0) {
        supp.passed = false;
        supp.witness = "x=" + detail::fmt_point(far2, dim);
      }
    }
    for (auto* c : {&nonneg, &mono, &lim, &supp}) rep.checks.push_back(*c);
  }
  return rep;
}

}  // namespace epiwave
