#include <cmath>
#include <random>

#include <boost/numeric/odeint.hpp>
#include <gtest/gtest.h>

#include "mjrobust/error.hpp"
#include "mjrobust/ncs.hpp"

using namespace mjrobust;

namespace {

// x' = A x + B u with u held piecewise constant, integrated adaptively.
Vector ode_step(const Matrix& a, const Matrix& b, const Vector& x0, const Vector& u_prev,
                const Vector& u_cur, double tau, double period) {
  namespace ode = boost::numeric::odeint;
  using State = std::vector<double>;
  State x(x0.data(), x0.data() + x0.size());
  const auto run = [&](const Vector& u, double t0, double t1) {
    if (t1 <= t0) return;
    auto rhs = [&](const State& s, State& ds, double) {
      const Eigen::Map<const Vector> xs(s.data(), static_cast<Eigen::Index>(s.size()));
      const Vector d = a * xs + b * u;
      for (std::size_t i = 0; i < s.size(); ++i) ds[i] = d[static_cast<Eigen::Index>(i)];
    };
    ode::integrate_adaptive(ode::make_controlled<ode::runge_kutta_dopri5<State>>(1e-13, 1e-13),
                            rhs, x, t0, t1, 1e-4);
  };
  run(u_prev, 0.0, tau);
  run(u_cur, tau, period);
  return Eigen::Map<Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
}

}  // namespace

TEST(Ncs, ExamplePlantScalars) {
  const auto p = example_plant();
  const auto [w1, w2] = w_matrices(p, 0.1);
  const double e = std::exp(0.2 * 0.1) - 1.0;
  EXPECT_NEAR(w1(0, 0), std::exp(0.2 * 0.9) * 0.8 * e / 0.2, 1e-14);
  EXPECT_NEAR(w2(0, 0), 0.8 * (std::exp(0.2 * 0.9) - 1.0) / 0.2, 1e-14);
  const Matrix a = ncs_a(p, 0.1);
  EXPECT_EQ(a(0, 0), 0.0);
  EXPECT_EQ(a(0, 1), 1.0);
  EXPECT_NEAR(a(1, 1), std::exp(0.2) - 1.2 * w2(0, 0), 1e-14);
}

TEST(Ncs, DelayOutsidePeriodThrows) {
  EXPECT_THROW(w_matrices(example_plant(), 1.0), InvalidInput);
  EXPECT_THROW(w_matrices(example_plant(), -0.1), InvalidInput);
}

TEST(Ncs, PlantValidation) {
  auto p = example_plant();
  p.k = Matrix::Zero(2, 1);
  EXPECT_THROW(p.validate(), InvalidInput);
  p = example_plant();
  p.period = 0.0;
  EXPECT_THROW(p.validate(), InvalidInput);
}

TEST(Ncs, OneStepMatchesOdeOracle) {
  std::mt19937_64 g(17);
  std::normal_distribution<double> nd(0.0, 0.5);
  PlantSpec p;
  p.ac.resize(2, 2);
  p.ac << 0.1, 1.0, -0.5, -0.2;
  p.bc.resize(2, 1);
  p.bc << 0.0, 1.0;
  p.k.resize(1, 2);
  p.k << -0.8, -0.6;
  p.period = 0.5;
  for (int trial = 0; trial < 20; ++trial) {
    const double tau = std::uniform_real_distribution<double>(0.0, 0.49)(g);
    Matrix delta(1, 2);
    delta << nd(g), nd(g);
    Vector xprev(2), xnow(2);
    xprev << nd(g), nd(g);
    xnow << nd(g), nd(g);
    const Matrix gain = p.k + delta;
    const Vector expect = ode_step(p.ac, p.bc, xnow, gain * xprev, gain * xnow, tau, p.period);
    Vector xd(4);
    xd << xprev, xnow;
    const Matrix acl = ncs_a(p, tau) + ncs_b(p, tau) * structured_delta(p, delta);
    const Vector got = acl * xd;
    EXPECT_LT((got.head(2) - xnow).norm(), 1e-15);
    EXPECT_LT((got.tail(2) - expect).norm(), 1e-8) << "tau " << tau;
  }
}

TEST(Ncs, DiscretizedModelShapes) {
  const auto m = discretize(example_plant(), example1_delays());
  EXPECT_TRUE(m.is_finite());
  EXPECT_EQ(m.n(), 2);
  EXPECT_EQ(m.inputs(), 2);
  EXPECT_EQ(m.outputs(), 2);
  EXPECT_LT((m.C(0) - Matrix::Identity(2, 2)).norm(), 1e-15);
  const auto k = discretize(example_plant(), example2_delays());
  EXPECT_FALSE(k.is_finite());
  EXPECT_LT((k.A(0.25) - ncs_a(example_plant(), 0.25)).norm(), 1e-15);
}

TEST(Ncs, InitialStateHasNoControl) {
  Vector x0(1);
  x0 << -2.0;
  const Vector xd = initial_state(example_plant(), x0);
  EXPECT_EQ(xd[0], -2.0);
  EXPECT_NEAR(xd[1], -2.0 * std::exp(0.2), 1e-14);
}

TEST(Ncs, ClosedLoopSimulationUsesDelayChain) {
  RngStream rng(5);
  Vector x0(1);
  x0 << -2.0;
  const auto tr = simulate_closed_loop(example_plant(), Matrix::Zero(1, 1), example2_delays(), x0, 40, rng);
  ASSERT_EQ(tr.xc.size(), 41u);
  for (double d : tr.delays) {
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 0.4);
  }
  EXPECT_LT(tr.xc.back().norm(), 1e-3);
}
