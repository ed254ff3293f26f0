#include <cmath>

#include <gtest/gtest.h>

#include "mjrobust/error.hpp"
#include "mjrobust/mjls.hpp"

using namespace mjrobust;

namespace {

Matrix s(double v) { return Matrix::Constant(1, 1, v); }

FiniteChain chain2(double p00, double p11) {
  Matrix p(2, 2);
  p << p00, 1 - p00, 1 - p11, p11;
  return FiniteChain(Vector::Constant(2, 0.5), p);
}

MjlsModel scalar_model(const FiniteChain& ch, std::vector<double> a, std::vector<double> b,
                       std::vector<double> c) {
  std::vector<Matrix> A, B, C;
  for (std::size_t i = 0; i < a.size(); ++i) {
    A.push_back(s(a[i]));
    B.push_back(s(b[i]));
    C.push_back(s(c[i]));
  }
  return MjlsModel(ch, ModeFamily(A), ModeFamily(B), ModeFamily(C));
}

}  // namespace

TEST(Model, ShapeChecks) {
  const auto ch = chain2(0.5, 0.5);
  EXPECT_THROW(MjlsModel(ch, ModeFamily({s(1), s(1)}), ModeFamily({Matrix::Zero(2, 1), Matrix::Zero(2, 1)}),
                         ModeFamily({s(1), s(1)})),
               InvalidInput);
  EXPECT_THROW(MjlsModel::autonomous(ch, ModeFamily({s(1)})), InvalidInput);
}

TEST(Model, RejectsCtDNonzero) {
  const auto ch = chain2(0.5, 0.5);
  EXPECT_THROW(MjlsModel(ch, ModeFamily({s(0.1), s(0.1)}), ModeFamily({s(1), s(1)}),
                         ModeFamily({s(1), s(1)}), MatrixField(ModeFamily({s(0.5), s(0.5)}))),
               InvalidInput);
  // C^T D = 0 with C = [1 0]^T-ish stacking
  Matrix c(2, 1), d(2, 1);
  c << 1, 0;
  d << 0, 1;
  EXPECT_NO_THROW(MjlsModel(ch, ModeFamily({s(0.1), s(0.1)}), ModeFamily({s(1), s(1)}),
                            ModeFamily({c, c}), MatrixField(ModeFamily({d, d}))));
}

TEST(SpectralRadius, SingleModeIsSquare) {
  FiniteChain one(Vector::Ones(1), Matrix::Ones(1, 1));
  EXPECT_NEAR(spectral_radius_LA(MjlsModel::autonomous(one, ModeFamily({s(0.7)}))), 0.49, 1e-14);
}

TEST(SpectralRadius, TwoModeScalarClosedForm) {
  const auto ch = chain2(0.9, 0.6);
  const double a0 = 0.5, a1 = 1.2;
  // L(P)(j) = sum_i p_ij a_i^2 P_i; matrix M(j, i) = p_ij a_i^2
  Matrix m(2, 2);
  m << 0.9 * a0 * a0, 0.4 * a1 * a1, 0.1 * a0 * a0, 0.6 * a1 * a1;
  const double tr = m.trace(), det = m.determinant();
  const double rho = 0.5 * (tr + std::sqrt(tr * tr - 4 * det));
  EXPECT_NEAR(spectral_radius_LA(MjlsModel::autonomous(ch, ModeFamily({s(a0), s(a1)}))), rho, 1e-12);
}

TEST(SpectralRadius, MatchesSecondMomentRecursion) {
  const auto ch = chain2(2.0 / 3, 2.0 / 3);
  Matrix a0(2, 2), a1(2, 2);
  a0 << 0.3, 0.5, -0.2, 0.4;
  a1 << 0.9, 0.0, 0.3, -0.6;
  const auto model = MjlsModel::autonomous(ch, ModeFamily({a0, a1}));
  // iterate Q_j(k+1) = sum_i p_ij A_i Q_i A_i^T, growth rate -> radius
  std::vector<Matrix> q = {Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  double ratio = 0.0;
  for (int k = 0; k < 400; ++k) {
    std::vector<Matrix> next(2, Matrix::Zero(2, 2));
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 2; ++i) next[j] += ch.p(i, j) * (i ? a1 : a0) * q[i] * (i ? a1 : a0).transpose();
    const double before = q[0].trace() + q[1].trace();
    const double after = next[0].trace() + next[1].trace();
    ratio = after / before;
    q = next;
    for (auto& m : q) m /= after;
  }
  EXPECT_NEAR(spectral_radius_LA(model), ratio, 1e-9);
}

TEST(ApplyE, FiniteWeights) {
  const auto ch = chain2(0.75, 0.5);
  const auto e = apply_E(ch, ModeFamily({s(1.0), s(3.0)}));
  EXPECT_NEAR(e[0](0, 0), 0.75 + 0.25 * 3, 1e-15);
  EXPECT_NEAR(e[1](0, 0), 0.5 + 0.5 * 3, 1e-15);
}

TEST(OperatorSuite, ScalarFormulas) {
  const auto ch = chain2(0.75, 0.5);
  const auto model = scalar_model(ch, {0.5, -0.2}, {1.0, 2.0}, {0.3, 0.4});
  const auto op = operator_suite(model, ModeFamily({s(1.0), s(3.0)}), 20.0);
  const double e0 = 1.5;
  EXPECT_NEAR(op.ta[0](0, 0), 0.25 * e0, 1e-14);
  EXPECT_NEAR(op.psi1[0](0, 0), 0.25 * e0 + 0.09, 1e-14);
  EXPECT_NEAR(op.psi2[0](0, 0), 0.5 * e0, 1e-14);
  EXPECT_NEAR(op.psi3[0](0, 0), 20.0 - e0, 1e-14);
  EXPECT_NEAR(op.f[0](0, 0), -0.5 * e0 / (20.0 - e0), 1e-14);
}

TEST(OperatorSuite, IndefinitePsi3Throws) {
  const auto ch = chain2(0.5, 0.5);
  const auto model = scalar_model(ch, {0.5, 0.5}, {1.0, 3.0}, {1.0, 1.0});
  // Psi3 = gamma - B^2 E(P): 2 - 1 > 0 but 2 - 9 < 0
  EXPECT_THROW(operator_suite(model, ModeFamily({s(1.0), s(1.0)}), 2.0), GainUndefined);
}

TEST(Simulate, ZeroDynamicsVanishAfterOneStep) {
  const auto ch = chain2(0.5, 0.5);
  const auto model = MjlsModel::autonomous(ch, ModeFamily({Matrix::Zero(2, 2), Matrix::Zero(2, 2)}));
  RngStream rng(1);
  const auto tr = simulate(model, Vector::Ones(2), std::nullopt, {}, 10, rng);
  ASSERT_EQ(tr.x.size(), 11u);
  for (int k = 1; k <= 10; ++k) EXPECT_EQ(tr.x[k].norm(), 0.0);
}

TEST(Simulate, DivergenceIsFlagged) {
  FiniteChain one(Vector::Ones(1), Matrix::Ones(1, 1));
  const auto model = MjlsModel::autonomous(one, ModeFamily({s(1e200)}));
  RngStream rng(1);
  const auto tr = simulate(model, Vector::Ones(1), std::nullopt, {}, 10, rng);
  EXPECT_TRUE(tr.diverged);
  EXPECT_EQ(tr.diverged_at, 2);
}

TEST(Emss, DeterministicDecayRate) {
  FiniteChain one(Vector::Ones(1), Matrix::Ones(1, 1));
  const auto model = MjlsModel::autonomous(one, ModeFamily({s(0.8)}));
  RngStream rng(2);
  const auto r = estimate_emss(model, 20, 30, rng);
  EXPECT_NEAR(r.decay_slope, std::log(0.64), 1e-10);
  EXPECT_TRUE(r.consistent_with_emss);
}

// exact E x(k)^2 from the second-moment recursion, fitted the same way
TEST(Emss, SlopeMatchesExactSecondMoment) {
  // mild mode spread: the sample mean of x^2 is heavy-tailed otherwise
  const auto ch = chain2(0.7, 0.6);
  const double a[2] = {0.6, 0.85};
  const auto model = MjlsModel::autonomous(ch, ModeFamily({s(a[0]), s(a[1])}));
  const int horizon = 40;
  Vector q = ch.pi();  // E[x^2 1{mode = i}], x0 = 1
  std::vector<double> logm;
  for (int k = 0; k <= horizon; ++k) {
    logm.push_back(std::log(q.sum()));
    Vector next = Vector::Zero(2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) next[j] += ch.p(i, j) * a[i] * a[i] * q[i];
    q = next;
  }
  double sk = 0, sy = 0, skk = 0, sky = 0;
  for (int k = 0; k <= horizon; ++k) {
    sk += k;
    sy += logm[k];
    skk += k * k;
    sky += k * logm[k];
  }
  const double n = horizon + 1;
  const double slope = (n * sky - sk * sy) / (n * skk - sk * sk);
  RngStream rng(3);
  const auto r = estimate_emss(model, 20000, horizon, rng, Vector::Ones(1));
  EXPECT_NEAR(r.decay_slope, slope, 0.03);
  EXPECT_LT(r.ci_low, r.ci_high);
  EXPECT_TRUE(r.consistent_with_emss);
  EXPECT_LT(spectral_radius_LA(model), 1.0);
}

TEST(Emss, UnstableIsNotConsistent) {
  FiniteChain one(Vector::Ones(1), Matrix::Ones(1, 1));
  RngStream rng(4);
  const auto r = estimate_emss(MjlsModel::autonomous(one, ModeFamily({s(1.1)})), 10, 20, rng);
  EXPECT_FALSE(r.consistent_with_emss);
  EXPECT_GT(r.decay_slope, 0.0);
}

TEST(Interconnection, BlockStructure) {
  const auto ch = chain2(0.5, 0.5);
  const auto s1 = scalar_model(ch, {0.1, 0.2}, {1.0, 2.0}, {3.0, 4.0});
  const auto s2 = scalar_model(ch, {0.5, 0.6}, {0.7, 0.8}, {0.9, 1.1});
  const auto m = build_interconnection(s1, s2);
  ASSERT_EQ(m.n(), 2);
  Matrix expect(2, 2);
  expect << 0.2, 2.0 * 1.1, 0.8 * 4.0, 0.6;
  EXPECT_LT((m.A(1) - expect).norm(), 1e-15);
}

TEST(UncertainLoop, AddsBDeltaC) {
  const auto ch = chain2(0.5, 0.5);
  const auto m = scalar_model(ch, {0.1, 0.2}, {1.0, 2.0}, {3.0, 4.0});
  const auto cl = close_uncertain_loop(m, MatrixField::constant(s(0.5), 2));
  EXPECT_NEAR(cl.A(0)(0, 0), 0.1 + 1.5, 1e-15);
  EXPECT_NEAR(cl.A(1)(0, 0), 0.2 + 4.0, 1e-15);
}

TEST(Performance, ScalarGeometricSum) {
  FiniteChain one(Vector::Ones(1), Matrix::Ones(1, 1));
  const MjlsModel m(one, ModeFamily({s(0.5)}), ModeFamily({s(0.0)}), ModeFamily({s(2.0)}));
  RngStream rng(5);
  const auto p = eval_performance(m, 1.0, Vector::Ones(1), std::nullopt, {}, 10, 3, rng);
  double expect = 0.0;
  for (int k = 0; k < 10; ++k) expect += 4.0 * std::pow(0.25, k);
  EXPECT_NEAR(p.mean, expect, 1e-12);
}
