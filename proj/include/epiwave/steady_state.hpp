#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "epiwave/error.hpp"
#include "epiwave/nonlinearity.hpp"
#include "epiwave/spatial_kernel.hpp"
#include "epiwave/spectral.hpp"

namespace epiwave {

// (T u)(x_i) = sum_j V_per(x_i, x_j) g(u_j) w_j
inline Vec apply_T(const Vec& u, const SpatialKernel& V, const Nonlinearity& g) {
  const Vec gu = u.unaryExpr([&](double z) { return g(z); });
  return V.periodic() * gu * V.grid().weight();
}

struct SteadyState {
  std::optional<Vec> U;  // empty when only the trivial solution exists
  int iterations = 0;
  double residual = 0.0;
  double seed_scale = 0.0;
  double lambda1 = 0.0;
  bool present() const { return U.has_value(); }
};

enum class Seed { Eigenfunction, UpperBound };

// A constant every iterate of T stays below.
inline double steady_upper_bound(const SpatialKernel& V, const Nonlinearity& g) {
  return g.sup_g * V.row_integrals().maxCoeff();
}

// Monotone iteration U_{n+1} = T(U_n). From eps * phi_p the sequence rises, from
// the constant upper bound it descends; both stop when the increment and the
// residual are below tol.
inline SteadyState solve_steady_state(const SpatialKernel& V, const Nonlinearity& g,
                                      double tol = 1e-8, int max_iter = 100000,
                                      Seed seed = Seed::Eigenfunction) {
  require(tol > 0, "tolerance must be positive");
  SteadyState out;
  const EigenPair ep = principal_eigenpair(V, g);
  out.lambda1 = ep.lambda;
  const Eigen::Index n = Eigen::Index(V.grid().cell_size());

  if (ep.lambda <= 1.0) {
    Vec u = Vec::Ones(n);
    for (int it = 1; it <= max_iter; ++it) {
      u = apply_T(u, V, g);
      if (u.maxCoeff() < 1e-8) {
        out.iterations = it;
        out.residual = u.maxCoeff();
        return out;
      }
    }
    std::ostringstream os;
    os << "{\"lambda1\":" << ep.lambda << ",\"last_sup\":" << u.maxCoeff() << "}";
    throw NumericalError("iteration did not collapse although lambda1 <= 1", os.str());
  }

  Vec u;
  double dir;
  if (seed == Seed::Eigenfunction) {
    const double C = g.curvature_bound;
    const double phinorm = ep.phi.maxCoeff();
    out.seed_scale = C > 0 ? std::min(0.5 * (ep.lambda - 1.0) / (C * ep.lambda * phinorm), 1.0) : 1.0;
    u = out.seed_scale * ep.phi;
    dir = 1.0;
  } else {
    out.seed_scale = steady_upper_bound(V, g);
    u = Vec::Constant(n, out.seed_scale);
    dir = -1.0;
  }
  double inc = kInf;
  for (int it = 1; it <= max_iter; ++it) {
    Vec next = apply_T(u, V, g);
    const Vec d = next - u;
    const double violation = (-dir * d).maxCoeff();
    if (violation > 1e-13 * (1.0 + next.cwiseAbs().maxCoeff())) {
      std::ostringstream os;
      os << "{\"iteration\":" << it << ",\"violation\":" << violation << "}";
      throw NumericalError(dir > 0 ? "iterate not monotone; use a smaller seed scale"
                                   : "descending iterate increased",
                           os.str());
    }
    inc = d.cwiseAbs().maxCoeff();
    u = std::move(next);
    if (inc < tol) {
      const double res = (u - apply_T(u, V, g)).cwiseAbs().maxCoeff();
      if (res < tol) {
        out.U = u;
        out.iterations = it;
        out.residual = res;
        return out;
      }
    }
  }
  std::ostringstream os;
  os << "{\"last_increment\":" << inc << "}";
  throw NumericalError("steady-state iteration exceeded max_iter", os.str());
}

// Iterates T from each seed to tol/10 and returns the largest sup-distance
// between the limits.
inline double uniqueness_probe(const SpatialKernel& V, const Nonlinearity& g,
                               const std::vector<Vec>& seeds, double tol = 1e-8,
                               int max_iter = 100000) {
  require(principal_eigenpair(V, g).lambda > 1.0, "uniqueness probe needs lambda1 > 1");
  std::vector<Vec> limits;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    require((seeds[s].array() > 0).all(), "seeds must be positive");
    Vec u = seeds[s];
    bool ok = false;
    for (int it = 0; it < max_iter; ++it) {
      Vec next = apply_T(u, V, g);
      const double inc = (next - u).cwiseAbs().maxCoeff();
      u = std::move(next);
      if (inc < 0.1 * tol) {
        ok = true;
        break;
      }
    }
    if (!ok) throw NumericalError("uniqueness probe did not converge from seed " + std::to_string(s));
    limits.push_back(u);
  }
  double dist = 0.0;
  for (std::size_t a = 0; a < limits.size(); ++a)
    for (std::size_t b = a + 1; b < limits.size(); ++b)
      dist = std::max(dist, (limits[a] - limits[b]).cwiseAbs().maxCoeff());
  return dist;
}

}  // namespace epiwave
