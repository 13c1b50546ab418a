#include <gtest/gtest.h>

#include "common.hpp"

using namespace epiwave;
using namespace testutil;

namespace {
const auto g = Nonlinearity::exponential();

double box_lambda(double beta, double rho, double c) {
  const double s = rho == 0 ? 1.0 : std::sinh(rho) / rho;
  return beta * s / (1 + rho * c);
}

Vec steady(const TimeKernel& G, const PeriodicGrid& grid) {
  return *solve_steady_state(spatial(G, grid), g, 1e-13, 100000, Seed::UpperBound).U;
}
}  // namespace

TEST(Dispersion, BoxClosedForm) {
  PeriodicGrid grid(1, 64, 4);
  DispersionModel model(box_kernel(2.0), g, grid);
  for (double rho : {0.0, 0.5, 1.0, 2.0})
    for (double c : {0.0, 0.7, 2.0})
      EXPECT_NEAR(model.lambda(rho, c), box_lambda(2.0, rho, c), 2e-4 * box_lambda(2.0, rho, c));
}

TEST(Dispersion, ZeroWeightIsSpectralRadius) {
  PeriodicGrid grid(1, 32, 4);
  const auto G = het_kernel();
  DispersionModel model(G, g, grid);
  const double l1 = principal_eigenpair(spatial(G, grid), g).lambda;
  EXPECT_NEAR(model.lambda(0.0, 0.0), l1, 1e-10);
  EXPECT_NEAR(model.lambda(0.0, 3.0), l1, 1e-10);
}

TEST(Dispersion, DecreasingInSpeedAndAboveRestValue) {
  PeriodicGrid grid(1, 32, 4);
  DispersionModel model(het_kernel(), g, grid);
  const double l1 = model.lambda(0.0, 0.0);
  for (double rho : {0.3, 1.0, 2.5}) {
    double prev = kInf;
    for (double c : {0.0, 0.5, 1.0, 2.0, 4.0}) {
      const double l = model.lambda(rho, c);
      EXPECT_LT(l, prev);
      prev = l;
    }
    EXPECT_GE(model.lambda(rho, 0.0), l1 - 1e-12);
  }
}

TEST(Dispersion, GenericPathAgreesWithSlabPath) {
  // Same kernel via the isotropic (non-separable) route.
  PeriodicGrid grid(1, 32, 4);
  IsotropicKernel iso{[](double tau, double r) { return r < 1 ? std::exp(-tau) : 0.0; }, 1.0, 40.0};
  DispersionModel generic(TimeKernel(iso, 1), g, grid);
  EXPECT_FALSE(generic.exact_slab());
  for (double rho : {0.5, 1.5})
    EXPECT_NEAR(generic.lambda(rho, 0.8), box_lambda(2.0, rho, 0.8), 2e-3);
}

TEST(MinimalSpeedTest, MatchesScalarOracle) {
  PeriodicGrid grid(1, 64, 4);
  DispersionModel model(box_kernel(2.0), g, grid);
  const auto ms = minimal_speed(model);
  const auto [c_ref, rho_ref] = speed_oracle(2.0);
  EXPECT_FALSE(ms.at_rest);
  EXPECT_NEAR(ms.c_star, c_ref, 1e-3);
  EXPECT_NEAR(ms.rho_star, rho_ref, 2e-2);
  for (const auto& [rho, c] : ms.curve) EXPECT_GE(c, ms.c_star - 1e-10);
}

TEST(MinimalSpeedTest, AtRestWhenSubcritical) {
  PeriodicGrid grid(1, 16, 4);
  DispersionModel model(box_kernel(0.8), g, grid);
  const auto ms = minimal_speed(model);
  EXPECT_TRUE(ms.at_rest);
  EXPECT_EQ(ms.c_star, 0.0);
}

TEST(MinimalSpeedTest, IncreasesWithKernelAndIsContinuous) {
  PeriodicGrid grid(1, 32, 4);
  const double c2 = minimal_speed(DispersionModel(het_kernel(2.0), g, grid)).c_star;
  const double c4 = minimal_speed(DispersionModel(het_kernel(4.0), g, grid)).c_star;
  const double c2d = minimal_speed(DispersionModel(het_kernel(2.0 * (1 - 1e-4)), g, grid)).c_star;
  EXPECT_GT(c4, c2);
  EXPECT_LT(c2d, c2);
  EXPECT_LT(c2 - c2d, 1e-3);
}

TEST(MinimalSpeedTest, SpeedAtSolvesUnitEigenvalue) {
  PeriodicGrid grid(1, 32, 4);
  DispersionModel model(het_kernel(), g, grid);
  const double c = speed_at(model, 1.2);
  EXPECT_NEAR(model.lambda(1.2, c), 1.0, 1e-12);
}

TEST(SlabTest, ExponentialIsEigenprofile) {
  PeriodicGrid grid(1, 16, 4);
  DispersionModel model(het_kernel(), g, grid);
  const double rho = 0.7, c = 1.1;
  const auto ev = model.eigen(rho, c);
  const int lo = -60, hi = 60;
  Slab slab(model, c, lo, hi);
  Mat W(hi - lo + 1, 16);
  for (int a = lo; a <= hi; ++a) W.row(a - lo) = ev.phi.transpose() * std::exp(-rho * a * slab.h());
  const Mat out = slab.apply(W, -20, 20, rho);
  for (int a = -20; a <= 20; ++a) {
    const double scale = std::exp(-rho * a * slab.h());
    for (int i = 0; i < 16; ++i) EXPECT_NEAR(out(a + 20, i), ev.lambda * W(a - lo, i), 1e-12 * scale);
  }
}

TEST(Waves, SubAndSuperSolutions) {
  PeriodicGrid grid(1, 32, 4);
  const auto G = box_kernel(2.0);
  DispersionModel model(G, g, grid);
  const double cs = minimal_speed(model).c_star;
  const Vec U = steady(G, grid);
  const auto ss = build_sub_super(model, 2 * cs, U, 30.0);
  EXPECT_LT(ss.rho, ss.rho_prime);
  EXPECT_NEAR(ss.lambda, 1.0, 1e-10);
  EXPECT_LT(ss.lambda_prime, 1.0);
  const auto ck = verify_sub_super(model, ss);
  EXPECT_EQ(ck.super_fraction, 1.0);
  EXPECT_EQ(ck.sub_fraction, 1.0);
  EXPECT_LE(ck.order_worst, 0.0);
  EXPECT_GT(ss.plateau_inf, 0.0);
  EXPECT_LT(ss.plateau_lo, ss.plateau_hi);
}

TEST(Waves, BelowMinimalSpeedRejected) {
  PeriodicGrid grid(1, 32, 4);
  const auto G = box_kernel(2.0);
  DispersionModel model(G, g, grid);
  const double cs = minimal_speed(model).c_star;
  EXPECT_THROW(build_sub_super(model, 0.9 * cs, steady(G, grid), 30.0), NumericalError);
}

TEST(Waves, IterationIsMonotoneAndSandwiched) {
  PeriodicGrid grid(1, 32, 4);
  const auto G = box_kernel(2.0);
  DispersionModel model(G, g, grid);
  const double cs = minimal_speed(model).c_star;
  const Vec U = steady(G, grid);
  const auto ws = construct_wave(model, 2 * cs, U, 40.0, 1e-6);
  EXPECT_TRUE(ws.monotone);
  EXPECT_TRUE(ws.sandwiched);
  EXPECT_LT(ws.residual, 1e-5);
  for (std::size_t k = 1; k < ws.tails.size(); ++k) {
    EXPECT_LE(ws.tails[k].ahead_sup, ws.tails[k - 1].ahead_sup + 1e-15);
    EXPECT_LE(ws.tails[k].behind_dist, ws.tails[k - 1].behind_dist + 1e-15);
  }
  // Profile is decreasing along zeta for a homogeneous medium.
  for (int r = 1; r < ws.u.rows(); ++r) EXPECT_LE(ws.u(r, 0), ws.u(r - 1, 0) + 1e-9);
}

TEST(ComplexRootTest, RealAtMinimalSpeed) {
  PeriodicGrid grid(1, 32, 4);
  DispersionModel model(box_kernel(2.0), g, grid);
  const auto ms = minimal_speed(model);
  const auto root = complex_decay_root(model, ms.c_star, ms.rho_star, ms.c_star);
  EXPECT_NEAR(root.rho.imag(), 0.0, 1e-6);
  EXPECT_LT(root.residual, 1e-10);
}

TEST(ComplexRootTest, BelowMinimalSpeed) {
  PeriodicGrid grid(1, 32, 4);
  DispersionModel model(het_kernel(), g, grid);
  const auto ms = minimal_speed(model);
  const double c = 0.95 * ms.c_star;
  const auto root = complex_decay_root(model, c, ms.rho_star, ms.c_star);
  EXPECT_GT(root.rho.imag(), 1e-3);
  EXPECT_LT(root.residual, 1e-10);
  // The conjugate rate is also a root.
  const CMat Ac = model.matrix<cplx>(std::conj(root.rho), c);
  const auto ce = complex_eigen(Ac, root.phi.conjugate(), std::conj(root.lambda));
  EXPECT_LT(std::abs(ce.lambda - 1.0), 1e-10);
}

TEST(Oscillating, PositivePartIsSubsolution) {
  PeriodicGrid grid(1, 32, 4);
  DispersionModel model(box_kernel(2.0), g, grid);
  const auto ms = minimal_speed(model);
  const double c = 0.98 * ms.c_star;
  const auto root = complex_decay_root(model, c, ms.rho_star, ms.c_star);
  const auto os = oscillating_subsolution(model, c, root);
  EXPECT_LE(os.edge_minus, 0.0);
  EXPECT_LE(os.edge_plus, 0.0);
  EXPECT_GE(os.min_slack_positive, -1e-12);
  EXPECT_GE(os.min_slack_band, -1e-12 * os.values.maxCoeff());
  EXPECT_GT(os.values.maxCoeff(), 0.0);
  for (int r = 0; r < os.values.rows(); ++r)
    if (std::abs((os.lo + r) * os.h) > os.band) EXPECT_EQ(os.values.row(r).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Dispersion, TwoDimensionalDirections) {
  PeriodicGrid grid(2, 12, 3);
  const auto G = box_kernel(2.0, 1.0, 2);
  DispersionModel e1(G, g, grid, 0.0), e2(G, g, grid, std::numbers::pi / 2), diag(G, g, grid, std::numbers::pi / 4);
  EXPECT_FALSE(e1.exact_slab());
  const double l1 = principal_eigenpair(spatial(G, grid), g).lambda;
  EXPECT_NEAR(e1.lambda(0.0, 0.0), l1, 1e-10);
  EXPECT_NEAR(e1.lambda(0.8, 0.5), e2.lambda(0.8, 0.5), 1e-10);
  // Radial kernel: every direction sees the same relation up to quadrature.
  EXPECT_NEAR(e1.lambda(0.8, 0.5), diag.lambda(0.8, 0.5), 2e-2);
  EXPECT_GT(e1.lambda(0.8, 0.0), l1);
}
