#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "epiwave/error.hpp"
#include "epiwave/grid.hpp"

namespace epiwave {

using PointFn = std::function<double(const Point&)>;
using PairFn = std::function<double(const Point&, const Point&)>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// V(x,y) = left(x) * core(x,y) * right(y). On the grid `core` is averaged over
// the y-cell while left/right are taken at the nodes; a symmetric core gives an
// exactly weighted-symmetric discrete operator.
struct Factored {
  PairFn core;
  PointFn left;
  PointFn right;
  bool symmetric_core = false;
};

// A kernel on the whole space, zero for |x - y| >= support.
struct KernelFunction {
  PairFn value;
  std::optional<Factored> factored;
  double support = kInf;

  double operator()(const Point& x, const Point& y) const { return value(x, y); }

  static KernelFunction zero() {
    return {[](const Point&, const Point&) { return 0.0; }, std::nullopt, 0.0};
  }
};

inline double distance(int dim, const Point& x, const Point& y) {
  return dim == 1 ? std::abs(x[0] - y[0]) : std::hypot(x[0] - y[0], x[1] - y[1]);
}

// Radial profiles of unit mass in dimension d.
enum class Shape { Box, Tent, Gauss };

inline double shape_value(Shape s, int dim, double A, double r) {
  switch (s) {
    case Shape::Box:
      if (r >= A) return 0.0;
      return dim == 1 ? 0.5 / A : 1.0 / (std::numbers::pi * A * A);
    case Shape::Tent:
      if (r >= A) return 0.0;
      return (1.0 - r / A) * (dim == 1 ? 1.0 / A : 3.0 / (std::numbers::pi * A * A));
    case Shape::Gauss: {
      // A is the standard deviation here.
      const double q = std::exp(-0.5 * r * r / (A * A));
      return dim == 1 ? q / (A * std::sqrt(2.0 * std::numbers::pi))
                      : q / (2.0 * std::numbers::pi * A * A);
    }
  }
  return 0.0;
}

inline double shape_support(Shape s, double A) { return s == Shape::Gauss ? kInf : A; }

// beta * K0(|x-y|) * b(x) * s(y) with K0 a unit-mass profile.
inline KernelFunction convolution_kernel(int dim, Shape shape, double A, double beta,
                                         PointFn b = nullptr, PointFn s = nullptr) {
  require(A > 0, "kernel radius must be positive");
  require(beta >= 0, "kernel mass must be nonnegative");
  if (!b) b = [](const Point&) { return 1.0; };
  if (!s) s = [](const Point&) { return 1.0; };
  PairFn core = [=](const Point& x, const Point& y) {
    return beta * shape_value(shape, dim, A, distance(dim, x, y));
  };
  KernelFunction k;
  k.value = [=](const Point& x, const Point& y) { return b(x) * core(x, y) * s(y); };
  k.factored = Factored{core, b, s, true};
  k.support = shape_support(shape, A);
  return k;
}

// Gamma(tau,x,y) = exp(-mu(y) tau) K(x,y).
struct SeparableKernel {
  PointFn mu;
  KernelFunction K;
};

// Gamma(tau,x,y) = Lambda(tau, |x-y|); horizon bounds the tau-range where
// Lambda is not negligible.
struct IsotropicKernel {
  std::function<double(double, double)> Lambda;
  double support = kInf;
  double horizon = 40.0;
};

// Gamma sampled at increasing tau nodes; sample(k, x, y) = Gamma(tau[k], x, y).
struct TabulatedKernel {
  std::vector<double> tau;
  std::function<double(std::size_t, const Point&, const Point&)> sample;
  double support = kInf;
};

class TimeKernel {
 public:
  using Variant = std::variant<SeparableKernel, IsotropicKernel, TabulatedKernel>;

  TimeKernel(Variant v, int dim, bool periodic = true)
      : v_(std::move(v)), dim_(dim), periodic_(periodic) {
    if (auto* s = std::get_if<SeparableKernel>(&v_)) {
      require(bool(s->mu) && bool(s->K.value), "separable kernel needs mu and K");
      require(std::isfinite(s->K.support),
              "separable kernel must have a compactly supported spatial part");
      // mu is periodic, so scanning one cell finely is enough.
      const int m = 256;
      double lo = kInf;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < (dim == 1 ? 1 : m); ++j)
          lo = std::min(lo, s->mu(Point{(i + 0.5) / m, dim == 1 ? 0.0 : (j + 0.5) / m}));
      require(lo > 0, "mu must be bounded below by a positive constant");
      mu_min_ = lo;
    } else if (auto* i = std::get_if<IsotropicKernel>(&v_)) {
      require(bool(i->Lambda), "isotropic kernel needs a profile");
      if (std::isfinite(i->support)) {
        // Enforce the declared support so profiles need not vanish by themselves.
        i->Lambda = [L = i->Lambda, A = i->support](double tau, double r) { return r < A ? L(tau, r) : 0.0; };
      }
    } else if (auto* t = std::get_if<TabulatedKernel>(&v_)) {
      require(t->tau.size() >= 2, "tabulated kernel needs at least two tau nodes");
      for (std::size_t k = 1; k < t->tau.size(); ++k)
        require(t->tau[k] > t->tau[k - 1], "tabulated tau nodes must increase");
      require(t->tau.front() == 0.0, "tabulated tau nodes must start at 0");
    }
  }

  static TimeKernel separable(int dim, PointFn mu, KernelFunction K) {
    return TimeKernel(SeparableKernel{std::move(mu), std::move(K)}, dim);
  }

  const Variant& variant() const { return v_; }
  int dim() const { return dim_; }
  bool periodic() const { return periodic_; }
  bool is_separable() const { return std::holds_alternative<SeparableKernel>(v_); }
  const SeparableKernel& separable_part() const {
    const auto* s = std::get_if<SeparableKernel>(&v_);
    require(s != nullptr, "operation needs a separable kernel");
    return *s;
  }
  double mu_min() const { return mu_min_; }

  double support_radius() const {
    return std::visit([](const auto& k) {
      if constexpr (std::is_same_v<std::decay_t<decltype(k)>, SeparableKernel>)
        return k.K.support;
      else
        return k.support;
    }, v_);
  }

  // Range of tau beyond which Gamma is negligible.
  double horizon() const {
    if (auto* s = std::get_if<SeparableKernel>(&v_)) return 40.0 / mu_min_;
    if (auto* i = std::get_if<IsotropicKernel>(&v_)) return i->horizon;
    return std::get<TabulatedKernel>(v_).tau.back();
  }

  double operator()(double tau, const Point& x, const Point& y) const {
    if (auto* s = std::get_if<SeparableKernel>(&v_))
      return std::exp(-s->mu(y) * tau) * s->K(x, y);
    if (auto* i = std::get_if<IsotropicKernel>(&v_))
      return i->Lambda(tau, distance(dim_, x, y));
    const auto& t = std::get<TabulatedKernel>(v_);
    if (tau >= t.tau.back()) return tau == t.tau.back() ? t.sample(t.tau.size() - 1, x, y) : 0.0;
    auto it = std::upper_bound(t.tau.begin(), t.tau.end(), tau);
    const std::size_t k = std::size_t(it - t.tau.begin()) - 1;
    const double s = (tau - t.tau[k]) / (t.tau[k + 1] - t.tau[k]);
    return (1 - s) * t.sample(k, x, y) + s * t.sample(k + 1, x, y);
  }

 private:
  Variant v_;
  int dim_;
  bool periodic_;
  double mu_min_ = 0.0;
};

namespace detail {

inline std::string tail_detail(double mass) {
  std::ostringstream os;
  os.precision(17);
  os << "{\"estimated_tail_mass\":" << mass << "}";
  return os.str();
}

inline double isotropic_integral(const IsotropicKernel& k, double r, double rho_c) {
  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  auto f = [&](double tau) { return k.Lambda(tau, r) * std::exp(-rho_c * tau); };
  const double val = gauss_kronrod<double, 31>::integrate(f, 0.0, kInf, 15, 1e-12, &err);
  if (!std::isfinite(val) || err > 1e-6 * std::abs(val) + 1e-13)
    throw NumericalError("time integral of the kernel has a non-integrable tail",
                         tail_detail(std::isfinite(err) ? err : kInf));
  return val;
}

inline double tabulated_integral(const TabulatedKernel& k, const Point& x, const Point& y,
                                 double rho_c) {
  const std::size_t n = k.tau.size();
  double sum = 0.0, peak = 0.0;
  double prev = k.sample(0, x, y);
  peak = std::abs(prev);
  for (std::size_t j = 1; j < n; ++j) {
    const double cur = k.sample(j, x, y);
    peak = std::max(peak, std::abs(cur));
    const double d = k.tau[j] - k.tau[j - 1];
    sum += 0.5 * d * (prev * std::exp(-rho_c * k.tau[j - 1]) + cur * std::exp(-rho_c * k.tau[j]));
    prev = cur;
  }
  const double last = k.sample(n - 1, x, y);
  if (peak > 0 && std::abs(last) > 1e-6 * peak) {
    const double before = k.sample(n - 2, x, y);
    const double d = k.tau[n - 1] - k.tau[n - 2];
    const double tail = (before > last && last > 0) ? last * d / std::log(before / last) : kInf;
    throw NumericalError("tabulated kernel samples do not cover the decay in tau",
                         tail_detail(tail));
  }
  return sum;
}

}  // namespace detail

// V_{c,rho}(x,y) = int_0^inf Gamma(tau,x,y) exp(-rho_c tau) dtau.
inline KernelFunction time_integrate_kernel(const TimeKernel& G, double rho_c) {
  require(rho_c >= 0, "rho*c must be nonnegative");
  KernelFunction out;
  if (auto* s = std::get_if<SeparableKernel>(&G.variant())) {
    auto mu = s->mu;
    PointFn decay = [mu, rho_c](const Point& y) { return 1.0 / (rho_c + mu(y)); };
    auto K = s->K;
    out.value = [K, decay](const Point& x, const Point& y) { return K(x, y) * decay(y); };
    out.support = K.support;
    if (K.factored) {
      auto f = *K.factored;
      auto right = f.right;
      out.factored = Factored{f.core, f.left,
                              [right, decay](const Point& y) { return right(y) * decay(y); },
                              f.symmetric_core};
    } else {
      out.factored = Factored{K.value, [](const Point&) { return 1.0; }, decay, false};
    }
    return out;
  }
  if (auto* i = std::get_if<IsotropicKernel>(&G.variant())) {
    auto k = *i;
    const int dim = G.dim();
    out.value = [k, dim, rho_c](const Point& x, const Point& y) {
      const double r = distance(dim, x, y);
      if (r >= k.support) return 0.0;
      return detail::isotropic_integral(k, r, rho_c);
    };
    out.support = k.support;
    auto one = [](const Point&) { return 1.0; };
    out.factored = Factored{out.value, one, one, true};
    return out;
  }
  auto t = std::get<TabulatedKernel>(G.variant());
  out.value = [t, rho_c](const Point& x, const Point& y) {
    return detail::tabulated_integral(t, x, y, rho_c);
  };
  out.support = t.support;
  return out;
}

// Source term f(t,x) with limit f_inf(x), zero outside `support`.
struct Forcing {
  std::function<double(double, const Point&)> eval;
  PointFn limit;
  double support = 0.0;

  static Forcing zero() {
    return {[](double, const Point&) { return 0.0; }, [](const Point&) { return 0.0; }, 0.0};
  }
  // amplitude * max(0, 1 - |x|/radius) * (1 - exp(-rate t)); rate = inf gives a
  // time-independent bump.
  static Forcing bump(int dim, double amplitude, double radius, double rate) {
    require(amplitude >= 0 && radius > 0 && rate > 0, "invalid forcing bump parameters");
    auto profile = [=](const Point& x) {
      const double r = dim == 1 ? std::abs(x[0]) : std::hypot(x[0], x[1]);
      return amplitude * std::max(0.0, 1.0 - r / radius);
    };
    Forcing f;
    f.eval = [=](double t, const Point& x) {
      return std::isinf(rate) ? profile(x) : profile(x) * -std::expm1(-rate * t);
    };
    f.limit = profile;
    f.support = radius;
    return f;
  }
};

}  // namespace epiwave
