#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "mjrobust/error.hpp"
#include "mjrobust/grid.hpp"
#include "mjrobust/markov.hpp"
#include "mjrobust/quadrature.hpp"

using namespace mjrobust;

namespace {

Matrix two_by_two(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

// closed form of \int_0^c g(t, l) dt for the three-branch kernel
double example2_marginal(double c, double l) {
  return (2.0 / c) * (l * std::log(c / l) + (c - l) * std::log(c / (c - l)));
}

}  // namespace

TEST(FiniteChain, RejectsRowSumOff) {
  EXPECT_THROW(FiniteChain(Vector::Constant(2, 0.5), two_by_two(0.6, 0.3, 0.5, 0.5)),
               InvalidInput);
  EXPECT_THROW(FiniteChain(Vector::Constant(2, 0.6), two_by_two(0.5, 0.5, 0.5, 0.5)),
               InvalidInput);
  EXPECT_THROW(FiniteChain(Vector::Constant(2, 0.5), two_by_two(1.1, -0.1, 0.5, 0.5)),
               InvalidInput);
}

TEST(FiniteChain, DensityEvolvesByTranspose) {
  FiniteChain f(Vector::Constant(2, 0.5), two_by_two(2.0 / 3, 1.0 / 3, 1.0 / 3, 2.0 / 3));
  ChainModel c = f;
  auto nu = initial_density(c);
  nu.values << 1.0, 0.0;
  nu = evolve_density(c, nu);
  EXPECT_NEAR(nu.values[0], 2.0 / 3, 1e-15);
  EXPECT_NEAR(nu.values[1], 1.0 / 3, 1e-15);
}

TEST(KernelChain, Example2RowsIntegrateToOne) {
  const auto k = KernelChain::example2(0.4);
  for (int i = 0; i < 100; ++i) {
    const double t = (i + 0.5) * 0.004;
    const double s = integrate([&](double x) { return k.g(t, x); }, 0.0, 0.4, k.breaks(t));
    EXPECT_NEAR(s, 1.0, 1e-8) << "t = " << t;
  }
}

TEST(KernelChain, Example2BranchValues) {
  const auto k = KernelChain::example2(0.4);
  EXPECT_NEAR(k.g(0.2, 0.1), 5.0 * 0.1 / 0.2, 1e-14);
  EXPECT_NEAR(k.g(0.2, 0.3), 5.0 * (2.0 - 1.5) / (2.0 - 1.0), 1e-14);
  EXPECT_NEAR(k.g(0.2, 0.2), 5.0, 1e-14);
  EXPECT_NEAR(k.nu0(0.13), 2.5, 1e-15);
}

TEST(KernelChain, MarginalMatchesClosedForm) {
  const auto k = KernelChain::example2(0.4);
  for (double l : {0.01, 0.1, 0.2, 0.33, 0.39}) {
    EXPECT_NEAR(kernel_marginal(k, l), example2_marginal(0.4, l), 1e-8) << l;
  }
}

TEST(KernelChain, DensityStepMatchesClosedForm) {
  ChainModel c = KernelChain::example2(0.4);
  auto nu = initial_density(c, 400);
  EXPECT_NEAR(total_mass(nu), 1.0, 1e-12);
  nu = evolve_density(c, nu);
  EXPECT_NEAR(total_mass(nu), 1.0, 1e-10);
  // nu_1(l) = 2.5 * marginal(l); compare cell averages away from the log singularities
  for (int i : {40, 100, 200, 300, 360}) {
    const double l = nu.mesh_point(i);
    EXPECT_NEAR(nu.values[i], 2.5 * example2_marginal(0.4, l), 2e-3) << l;
  }
}

TEST(KernelChain, MassConservedOverManySteps) {
  ChainModel c = KernelChain::example2(0.4);
  auto nu = initial_density(c, 200);
  for (int k = 0; k < 30; ++k) {
    nu = evolve_density(c, nu);
    EXPECT_NEAR(total_mass(nu), 1.0, 1e-9);
    EXPECT_GE(nu.values.minCoeff(), 0.0);
  }
}

TEST(KernelChain, UniformIsStationary) {
  ChainModel c = KernelChain::uniform(-1.0, 3.0);
  auto nu = evolve_density(c, initial_density(c, 50));
  for (int i = 0; i < 50; ++i) EXPECT_NEAR(nu.values[i], 0.25, 1e-12);
}

TEST(KernelChain, TabulatedRejectsBadShape) {
  EXPECT_THROW(KernelChain::tabulated(0.0, 1.0, Matrix::Ones(3, 3), Vector::Ones(2)),
               InvalidInput);
}

TEST(KernelChain, TabulatedConstantKernel) {
  const auto k = KernelChain::tabulated(0.0, 2.0, Matrix::Constant(5, 5, 0.5), Vector::Constant(5, 0.5));
  EXPECT_NEAR(k.g(0.3, 1.7), 0.5, 1e-15);
}

TEST(Positivity, FiniteAndKernel) {
  EXPECT_TRUE(check_positivity(ChainModel(FiniteChain(Vector::Constant(2, 0.5),
                                                      two_by_two(0.5, 0.5, 0.5, 0.5))))
                  .ok());
  // mode 1 never reached and pi_1 = 0
  Vector pi(2);
  pi << 1.0, 0.0;
  const auto r = check_positivity(ChainModel(FiniteChain(pi, two_by_two(1.0, 0.0, 1.0, 0.0))));
  EXPECT_FALSE(r.nu0_positive);
  EXPECT_FALSE(r.kernel_marginal_positive);
  const auto k = check_positivity(ChainModel(KernelChain::example2(0.4)), 200);
  EXPECT_TRUE(k.ok());
  EXPECT_TRUE(k.mesh_certified);
  EXPECT_EQ(k.mesh_points, 200);
}

TEST(Sampling, FiniteFrequencies) {
  ChainModel c = FiniteChain(Vector::Constant(2, 0.5), two_by_two(0.9, 0.1, 0.2, 0.8));
  RngStream rng(42, "finite");
  int ones = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) ones += sample_next(c, 0.0, rng) == 1.0;
  EXPECT_NEAR(ones / double(n), 0.1, 0.01);
}

// Kolmogorov-Smirnov against F(s) = s^2 / (c t) for s < t and
// 1 - (c - s)^2 / (c (c - t)) for s > t.
TEST(Sampling, KernelInverseCdf) {
  const double c = 0.4, t = 0.15;
  ChainModel chain = KernelChain::example2(c);
  RngStream rng(9, "kernel");
  std::vector<double> xs;
  for (int i = 0; i < 4000; ++i) xs.push_back(sample_next(chain, t, rng));
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double s = xs[i];
    ASSERT_GE(s, 0.0);
    ASSERT_LE(s, c);
    const double f = s < t ? s * s / (c * t) : 1.0 - (c - s) * (c - s) / (c * (c - t));
    d = std::max({d, std::abs(f - i / double(xs.size())), std::abs(f - (i + 1) / double(xs.size()))});
  }
  EXPECT_LT(d, 1.63 / std::sqrt(4000.0));  // 1% level
}

TEST(Sampling, Reproducible) {
  ChainModel chain = KernelChain::example2(0.4);
  RngStream a(3, "x", 1), b(3, "x", 1), other(3, "x", 2);
  const double x = sample_initial(chain, a), y = sample_initial(chain, b);
  EXPECT_EQ(x, y);
  EXPECT_NE(x, sample_initial(chain, other));
}

TEST(SubintervalMasses, SumToOne) {
  const auto k = KernelChain::example2(0.4);
  const Grid g = uniform_grid(0.0, 0.4, 7);
  for (double l : {0.0, 0.05, 0.2, 0.4}) {
    const Vector q = subinterval_masses(k, g, l);
    EXPECT_NEAR(q.sum(), 1.0, 1e-9);
    EXPECT_GE(q.minCoeff(), 0.0);
  }
}

TEST(SameChain, Fingerprints) {
  EXPECT_TRUE(same_chain(ChainModel(KernelChain::example2(0.4)), ChainModel(KernelChain::example2(0.4))));
  EXPECT_FALSE(same_chain(ChainModel(KernelChain::example2(0.4)), ChainModel(KernelChain::example2(0.5))));
}
