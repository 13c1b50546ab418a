#pragma once

#include <cmath>
#include <numbers>

#include <epiwave/epiwave.hpp>

namespace testutil {

using namespace epiwave;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline PointFn constant(double v) {
  return [v](const Point&) { return v; };
}

// Homogeneous box kernel of mass beta on |x - y| < 1 with mu = mu0.
inline TimeKernel box_kernel(double beta, double mu0 = 1.0, int dim = 1) {
  return TimeKernel::separable(dim, constant(mu0), convolution_kernel(dim, Shape::Box, 1.0, beta));
}

inline PointFn het_b() { return [](const Point& x) { return 1.0 + 0.3 * std::cos(kTwoPi * x[0]); }; }
inline PointFn het_s() { return [](const Point& y) { return 1.0 + 0.3 * std::sin(kTwoPi * y[0]); }; }
inline PointFn het_mu() { return [](const Point& y) { return 1.0 + 0.2 * std::cos(kTwoPi * y[0]); }; }

// Tent profile of radius 0.75 with sinusoidal b, s, mu.
inline TimeKernel het_kernel(double beta = 2.0) {
  return TimeKernel::separable(1, het_mu(), convolution_kernel(1, Shape::Tent, 0.75, beta, het_b(), het_s()));
}

inline SpatialKernel spatial(const TimeKernel& G, const PeriodicGrid& grid, double rho_c = 0.0) {
  return periodize_kernel(time_integrate_kernel(G, rho_c), grid);
}

// Scalar Newton solve of z = beta (1 - exp(-z)) from a large start.
inline double z_star(double beta) {
  double z = beta;
  for (int k = 0; k < 100; ++k) {
    const double F = z - beta * (1 - std::exp(-z));
    const double dF = 1 - beta * std::exp(-z);
    z -= F / dF;
  }
  return z;
}

// Golden-section minimum of (beta sinh(rho)/rho - 1)/rho on [a, b].
inline std::pair<double, double> speed_oracle(double beta, double a = 0.05, double b = 6.0) {
  auto f = [beta](double r) { return (beta * std::sinh(r) / r - 1.0) / r; };
  const double gr = (std::sqrt(5.0) - 1) / 2;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  for (int k = 0; k < 200; ++k) {
    if (f(x1) < f(x2)) {
      b = x2;
      x2 = x1;
      x1 = b - gr * (b - a);
    } else {
      a = x1;
      x1 = x2;
      x2 = a + gr * (b - a);
    }
  }
  const double r = 0.5 * (a + b);
  return {f(r), r};
}

}  // namespace testutil
