#include <gtest/gtest.h>

#include <random>

#include "common.hpp"

using namespace epiwave;
using namespace testutil;

namespace {
const auto g = Nonlinearity::exponential();
}

TEST(Dynamics, ZeroForcingStaysZero) {
  PeriodicGrid grid(1, 16, 6);
  const auto field = solve_initial_value(box_kernel(2.0), Forcing::zero(), g, grid, 0.05, 5.0);
  for (const auto& s : field.snapshots) EXPECT_EQ(s.cwiseAbs().maxCoeff(), 0.0);
  const auto lt = long_time_limit(field);
  EXPECT_TRUE(lt.converged);
  EXPECT_EQ(lt.u_inf.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Dynamics, TimeMonotoneForBump) {
  PeriodicGrid grid(1, 16, 10);
  const auto field = solve_initial_value(box_kernel(2.0), Forcing::bump(1, 0.5, 1.0, 1.0), g, grid, 0.05, 10.0, 0.05);
  EXPECT_GE(field.min_increment, 0.0);
  for (std::size_t k = 1; k < field.snapshots.size(); ++k)
    EXPECT_GE((field.snapshots[k] - field.snapshots[k - 1]).minCoeff(), 0.0);
}

TEST(Dynamics, FirstOrderInDt) {
  PeriodicGrid grid(1, 16, 10);
  const auto G = box_kernel(2.0);
  const auto f = Forcing::bump(1, 0.5, 1.0, 1.0);
  const Vec u1 = solve_initial_value(G, f, g, grid, 0.1, 4.0).final();
  const Vec u2 = solve_initial_value(G, f, g, grid, 0.05, 4.0).final();
  const Vec u3 = solve_initial_value(G, f, g, grid, 0.025, 4.0).final();
  const double d1 = (u1 - u2).cwiseAbs().maxCoeff(), d2 = (u2 - u3).cwiseAbs().maxCoeff();
  EXPECT_GT(d1 / d2, 1.6);
  EXPECT_LT(d1 / d2, 2.5);
}

TEST(Dynamics, RejectsLargeStep) {
  PeriodicGrid grid(1, 16, 4);
  EXPECT_THROW(solve_initial_value(box_kernel(2.0, 25.0), Forcing::zero(), g, grid, 0.05, 1.0), ValidationError);
}

TEST(Dynamics, OrderPreservingStep) {
  PeriodicGrid grid(1, 16, 6);
  const auto G = box_kernel(2.0);
  const auto f = Forcing::bump(1, 0.5, 1.0, 1.0);
  SeparableMarcher a(G, f, g, grid, 0.05), b(G, f, g, grid, 0.05);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    for (Eigen::Index k = 0; k < a.u.size(); ++k) {
      b.u(k) = U(rng);
      a.u(k) = b.u(k) + U(rng);
      b.w(k) = U(rng);
      a.w(k) = b.w(k) + U(rng);
    }
    a.t = b.t = 1.0;
    a.step();
    b.step();
    EXPECT_GE((a.u - b.u).minCoeff(), 0.0);
    EXPECT_GE((a.w - b.w).minCoeff(), 0.0);
  }
}

TEST(Dynamics, MonotoneInForcing) {
  PeriodicGrid grid(1, 16, 8);
  const auto G = box_kernel(0.8);
  const Vec small = solve_initial_value(G, Forcing::bump(1, 0.3, 1.0, 1.0), g, grid, 0.05, 6.0).final();
  const Vec large = solve_initial_value(G, Forcing::bump(1, 0.6, 1.5, 1.0), g, grid, 0.05, 6.0).final();
  EXPECT_GE((large - small).minCoeff(), 0.0);
}

TEST(Dynamics, BoundedBySupGTimesMass) {
  PeriodicGrid grid(1, 16, 12);
  const auto f = Forcing::bump(1, 0.5, 1.0, 1.0);
  const auto field = solve_initial_value(box_kernel(2.0), f, g, grid, 0.05, 30.0);
  const double bound = g.sup_g * 2.0 + 0.5;
  for (const auto& s : field.snapshots) EXPECT_LE(s.maxCoeff(), bound);
}

TEST(LongTime, ShortHorizonNotConverged) {
  PeriodicGrid grid(1, 16, 20);
  const auto field = solve_initial_value(box_kernel(2.0), Forcing::bump(1, 0.5, 1.0, 1.0), g, grid, 0.05, 5.0);
  EXPECT_FALSE(long_time_limit(field, 1e-4).converged);
}

TEST(LongTime, PropagationReachesSteadyValue) {
  PeriodicGrid grid(1, 16, 24);
  const auto G = box_kernel(2.0);
  const auto f = Forcing::bump(1, 0.5, 1.0, 1.0);
  const auto field = solve_initial_value(G, f, g, grid, 0.05, 50.0);
  const auto lt = long_time_limit(field, 1e-4);
  EXPECT_TRUE(lt.converged);
  const auto V = spatial(G, grid);
  const auto cl = classify_outcome(lt.u_inf, grid, std::nullopt, 6.0, 1e-2, V.reach());
  EXPECT_EQ(cl.outcome, Outcome::Propagates);
  EXPECT_NEAR(cl.tail_sup, z_star(2.0), 1e-2);
}

TEST(Residual, ZeroSolution) {
  PeriodicGrid grid(1, 16, 4);
  const auto V = spatial(box_kernel(2.0), grid);
  const Vec z = Vec::Zero(Eigen::Index(grid.window_size()));
  EXPECT_EQ(limiting_equation_residual(z, V, g, z), 0.0);
}

TEST(Residual, ConvergedRunAndPerturbation) {
  PeriodicGrid grid(1, 16, 24);
  const auto G = box_kernel(2.0);
  const auto f = Forcing::bump(1, 0.5, 1.0, 1.0);
  const double dt = 0.05;
  const auto field = solve_initial_value(G, f, g, grid, dt, 50.0);
  const auto V = spatial(G, grid);
  const Vec finf = sample_on_window(grid, f.limit);
  const Vec u = long_time_limit(field).u_inf;
  const double r = limiting_equation_residual(u, V, g, finf);
  EXPECT_LE(r, 5 * (dt + grid.spacing()));
  // Perturbing by 0.1: the map u -> int V g(u) has slope at most
  // 2 g'(z) <= 2 exp(-z_min) on the tail, so the residual grows.
  const double rp = limiting_equation_residual((u.array() + 0.1).matrix(), V, g, finf);
  EXPECT_GE(rp, 0.1 * (1 - 2 * std::exp(-z_star(2.0))) - r);
}

TEST(Residual, RejectsSmallWindow) {
  PeriodicGrid grid(1, 16, 1);
  const auto V = spatial(box_kernel(2.0), grid);
  const Vec z = Vec::Zero(Eigen::Index(grid.window_size()));
  EXPECT_THROW(limiting_equation_residual(z, V, g, z), ValidationError);
}

TEST(Classify, FadeOutAndZeroForcing) {
  PeriodicGrid grid(1, 16, 20);
  const auto G = box_kernel(0.5);
  const auto f = Forcing::bump(1, 0.5, 1.0, 1.0);
  const auto V = spatial(G, grid);
  const auto lt = long_time_limit(solve_initial_value(G, f, g, grid, 0.05, 30.0));
  EXPECT_EQ(classify_outcome(lt.u_inf, grid, std::nullopt, 8.0, 1e-3, V.reach()).outcome, Outcome::FadesOut);
  const auto lt0 = long_time_limit(solve_initial_value(box_kernel(2.0), Forcing::zero(), g, grid, 0.05, 5.0));
  EXPECT_EQ(classify_outcome(lt0.u_inf, grid, std::nullopt, 8.0, 1e-3, V.reach()).outcome, Outcome::FadesOut);
}

TEST(Dynamics, HistoryPathMatchesSeparable) {
  // The same kernel written as an isotropic time kernel goes through the
  // full-history convolution.
  PeriodicGrid grid(1, 8, 5);
  IsotropicKernel iso{[](double tau, double r) { return r < 1 ? std::exp(-tau) : 0.0; }, 1.0, 12.0};
  TimeKernel Giso(iso, 1);
  const auto f = Forcing::bump(1, 0.5, 1.0, 1.0);
  const Vec a = solve_initial_value(Giso, f, g, grid, 0.05, 3.0).final();
  const Vec b = solve_initial_value(box_kernel(2.0), f, g, grid, 0.05, 3.0).final();
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-6);
}
