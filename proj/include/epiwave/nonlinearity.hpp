#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>

namespace epiwave {

// Infection response g with the constants the theory needs:
// g'(0) z - C z^2 <= g(z) <= g'(0) z and g <= sup_g.
struct Nonlinearity {
  std::string name;
  std::function<double(double)> eval;
  double slope0 = 1.0;
  double curvature_bound = 0.0;
  double sup_g = std::numeric_limits<double>::infinity();

  double operator()(double z) const { return eval(z); }

  static Nonlinearity exponential() {
    return {"exponential", [](double z) { return -std::expm1(-z); }, 1.0, 0.5, 1.0};
  }
  static Nonlinearity rational() {
    return {"rational", [](double z) { return z / (1.0 + z); }, 1.0, 1.0, 1.0};
  }
  // Linear response: unbounded, so it fails the standing hypotheses.
  static Nonlinearity linear() {
    return {"linear", [](double z) { return z; }, 1.0, 0.0,
            std::numeric_limits<double>::infinity()};
  }
};

}  // namespace epiwave
