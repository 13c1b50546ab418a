#include <random>

#include <gtest/gtest.h>

#include "common.hpp"

using namespace epiwave;
using namespace testutil;

namespace {

// Independent oracle: plain midpoint Nystrom matrix of the lattice-summed
// heterogeneous kernel (no sub-cell averaging), largest real eigenvalue.
double dense_oracle(int n) {
  const double h = 1.0 / n;
  Mat A = Mat::Zero(n, n);
  auto b = het_b(), s = het_s(), mu = het_mu();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int m = -2; m <= 2; ++m) {
        const Point x{(i + 0.5) * h, 0}, y{(j + 0.5) * h + m, 0};
        const double r = std::abs(x[0] - y[0]);
        const double K0 = r < 0.75 ? (1 - r / 0.75) / 0.75 : 0.0;
        A(i, j) += 2.0 * K0 * b(x) * s(y) / mu(y) * h;
      }
  Eigen::EigenSolver<Mat> es(A, false);
  return es.eigenvalues().real().maxCoeff();
}

}  // namespace

TEST(Assemble, ZeroKernelGivesZeroMatrix) {
  PeriodicGrid grid(1, 16, 2);
  const auto A = assemble_periodic(periodize_kernel(KernelFunction::zero(), grid), Nonlinearity::exponential());
  EXPECT_EQ(A.entries.cwiseAbs().maxCoeff(), 0.0);
  const auto ep = principal_eigenpair(A);
  EXPECT_EQ(ep.lambda, 0.0);
}

TEST(Assemble, RowSumsAndScaling) {
  PeriodicGrid grid(1, 64, 4);
  const auto V = spatial(box_kernel(2.0), grid);
  const auto A = assemble_periodic(V, Nonlinearity::exponential());
  EXPECT_NEAR(A.entries.rowwise().sum().minCoeff(), 2.0, 1e-12);
  const auto A3 = assemble_periodic(V.scaled(3.0), Nonlinearity::exponential());
  EXPECT_LE((A3.entries - 3.0 * A.entries).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Eigenpair, HomogeneousBox) {
  PeriodicGrid grid(1, 128, 4);
  const auto ep = principal_eigenpair(spatial(box_kernel(2.0), grid), Nonlinearity::exponential());
  EXPECT_NEAR(ep.lambda, 2.0, 1e-10);
  EXPECT_NEAR(ep.phi.minCoeff(), 1.0, 1e-12);
  EXPECT_LE(ep.residual, 1e-10);
}

TEST(Eigenpair, IsotropicEqualsTotalMass) {
  // Lambda(tau, r) = exp(-2 tau) (1 - r) on r < 1: total mass = 1/2 * 1 = 0.5.
  IsotropicKernel iso{[](double tau, double r) { return r < 1 ? 3.0 * std::exp(-2 * tau) * (1 - r) : 0.0; }, 1.0, 30.0};
  TimeKernel G(iso, 1);
  PeriodicGrid grid(1, 32, 3);
  const auto ep = principal_eigenpair(spatial(G, grid), Nonlinearity::exponential());
  // mass = 3 * (1/2) * 2 * (1/2) = 1.5
  EXPECT_NEAR(ep.lambda, 1.5, 1e-6);
}

TEST(Eigenpair, HeterogeneousMatchesRefinedDenseSolve) {
  PeriodicGrid grid(1, 64, 4);
  const auto ep = principal_eigenpair(spatial(het_kernel(), grid), Nonlinearity::exponential());
  EXPECT_NEAR(ep.lambda, dense_oracle(256), 1e-4);
  EXPECT_GT(ep.phi.minCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(ep.phi.maxCoeff(), 1.0);
}

TEST(Eigenpair, GridRefinementSecondOrder) {
  auto lam = [](int n) {
    PeriodicGrid grid(1, n, 4);
    return principal_eigenpair(spatial(het_kernel(), grid), Nonlinearity::exponential()).lambda;
  };
  const double l32 = lam(32), l64 = lam(64), l128 = lam(128);
  // Differences shrink like h^2.
  EXPECT_LT(std::abs(l128 - l64), 0.4 * std::abs(l64 - l32));
  EXPECT_LT(std::abs(l64 - l32), 1e-4);
}

TEST(Eigenpair, WeightedSymmetry) {
  PeriodicGrid grid(1, 64, 4);
  const auto A = assemble_periodic(spatial(het_kernel(), grid), Nonlinearity::exponential());
  ASSERT_TRUE(A.weight.has_value());
  const Mat D = (A.weight->array() * A.node_weight).matrix().asDiagonal() * A.entries;
  EXPECT_LE((D - D.transpose()).cwiseAbs().maxCoeff(), 1e-12 * A.entries.cwiseAbs().maxCoeff());
}

TEST(Bounds, Homogeneous) {
  PeriodicGrid grid(1, 32, 4);
  const auto b = eigenvalue_bounds(spatial(box_kernel(2.0), grid), Nonlinearity::exponential());
  EXPECT_NEAR(b.lower, 2.0, 1e-12);
  EXPECT_NEAR(b.upper, 2.0, 1e-12);
  const auto z = eigenvalue_bounds(periodize_kernel(KernelFunction::zero(), grid), Nonlinearity::exponential());
  EXPECT_EQ(z.lower, 0.0);
  EXPECT_EQ(z.upper, 0.0);
}

TEST(Bounds, HeterogeneousStrict) {
  PeriodicGrid grid(1, 64, 4);
  const auto V = spatial(het_kernel(), grid);
  const auto b = eigenvalue_bounds(V, Nonlinearity::exponential());
  const double lam = principal_eigenpair(V, Nonlinearity::exponential()).lambda;
  EXPECT_LT(b.lower, lam);
  EXPECT_LT(lam, b.upper);
}

TEST(BallSweep, IncreasingBelowLambda1) {
  PeriodicGrid grid(1, 32, 20);
  const auto V = spatial(box_kernel(2.0), grid);
  const auto sw = ball_eigenvalue_sweep(V, {2, 4, 8}, Nonlinearity::exponential());
  ASSERT_EQ(sw.size(), 3u);
  for (std::size_t k = 0; k < sw.size(); ++k) {
    EXPECT_LT(sw[k].lambda, 2.0);
    if (k) EXPECT_GT(sw[k].lambda, sw[k - 1].lambda);
  }
}

TEST(BallSweep, ApproachesLambda1) {
  PeriodicGrid grid(1, 16, 20);
  const auto V = spatial(box_kernel(2.0), grid);
  std::vector<double> radii;
  for (double R = 2; R <= 20; R += 2) radii.push_back(R);
  const auto sw = ball_eigenvalue_sweep(V, radii, Nonlinearity::exponential());
  EXPECT_GT(sw.back().lambda, 2.0 - 0.05);
}

TEST(BallSweep, ZeroKernel) {
  PeriodicGrid grid(1, 16, 4);
  const auto sw = ball_eigenvalue_sweep(periodize_kernel(KernelFunction::zero(), grid), {1, 2},
                                        Nonlinearity::exponential());
  for (const auto& s : sw) EXPECT_EQ(s.lambda, 0.0);
}

TEST(BallSweep, RayleighRitzDomination) {
  PeriodicGrid grid(1, 32, 8);
  const auto V = spatial(het_kernel(), grid);
  const auto A = assemble_ball(V, Nonlinearity::exponential(), 4.0);
  const double lam = principal_eigenpair(A).lambda;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 100; ++t) {
    Vec psi(A.entries.rows());
    for (Eigen::Index k = 0; k < psi.size(); ++k) psi(k) = nd(rng);
    EXPECT_LE(weighted_rayleigh(A, psi), lam + 1e-8);
  }
}

TEST(SubEigenfunction, PointwiseInequality) {
  PeriodicGrid grid(1, 32, 20);
  const auto V = spatial(box_kernel(2.0), grid);
  const auto g = Nonlinearity::exponential();
  const auto se = sub_eigenfunction(V, g, 0.5);
  EXPECT_GE(se.min_slack, 0.0);
  EXPECT_GT(se.lambda_R, 2.0 - 0.25);
  // Independent check: dense window product.
  const auto& values = se.values;
  for (std::size_t a = 0; a < grid.window_size(); a += 3) {
    double acc = 0.0;
    for (std::size_t b = 0; b < grid.window_size(); ++b)
      if (values(Eigen::Index(b)) != 0.0) acc += V.window_value(a, b) * grid.weight() * values(Eigen::Index(b));
    EXPECT_GE(acc + 1e-12, (2.0 - 0.5) * values(Eigen::Index(a)));
    if (grid.window_norm(a) > se.R) EXPECT_EQ(values(Eigen::Index(a)), 0.0);
  }
}

TEST(SubEigenfunction, RejectsLargeEps) {
  PeriodicGrid grid(1, 16, 8);
  EXPECT_THROW(sub_eigenfunction(spatial(box_kernel(2.0), grid), Nonlinearity::exponential(), 2.5),
               ValidationError);
}

TEST(Monotonicity, KernelOrderGivesEigenOrder) {
  PeriodicGrid grid(1, 32, 4);
  const auto g = Nonlinearity::exponential();
  const double l1 = principal_eigenpair(spatial(het_kernel(1.5), grid), g).lambda;
  const double l2 = principal_eigenpair(spatial(het_kernel(2.0), grid), g).lambda;
  EXPECT_LE(l1, l2);
}

TEST(Eigenpair, TwoDimensional) {
  PeriodicGrid grid(2, 8, 2);
  const auto ep = principal_eigenpair(spatial(box_kernel(2.0, 1.0, 2), grid), Nonlinearity::exponential());
  const auto b = eigenvalue_bounds(spatial(box_kernel(2.0, 1.0, 2), grid), Nonlinearity::exponential());
  EXPECT_GE(ep.lambda, b.lower - 1e-10);
  EXPECT_LE(ep.lambda, b.upper + 1e-10);
  EXPECT_NEAR(ep.lambda, 2.0, 0.05);
}
