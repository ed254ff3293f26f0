#include <cmath>

#include <gtest/gtest.h>

#include "mjrobust/sdp.hpp"

using namespace mjrobust;
using namespace mjrobust::sdp;

// max y s.t. [[1, y], [y, 1]] - ... : here C - y A >= 0 with C = I and
// A = -[[0, 1], [1, 0]] gives 1 - |y| >= 0, optimum 1.
TEST(Sdp, OffDiagonalBound) {
  Problem p;
  p.m = 1;
  p.b = Vector::Ones(1);
  Block b;
  b.dim = 2;
  b.c = {{0, 0, 1.0}, {1, 1, 1.0}};
  b.a = {{0, {{0, 1, -1.0}}}};
  p.blocks.push_back(b);
  const auto r = solve(p);
  ASSERT_EQ(r.status, Status::kOptimal) << r.message;
  EXPECT_NEAR(r.y[0], 1.0, 1e-6);
  EXPECT_NEAR(r.pobj, r.dobj, 1e-6);
}

// Linear program as diagonal blocks: max y1 + y2, y1 <= 2, y2 <= 3, y1 + y2 <= 4.
TEST(Sdp, DiagonalLp) {
  Problem p;
  p.m = 2;
  p.b = Vector::Ones(2);
  auto scalar = [](double c, std::vector<std::pair<int, double>> a) {
    Block b;
    b.dim = 1;
    b.c = {{0, 0, c}};
    for (auto [k, v] : a) b.a.push_back({k, {{0, 0, v}}});
    return b;
  };
  p.blocks = {scalar(2, {{0, 1}}), scalar(3, {{1, 1}}), scalar(4, {{0, 1}, {1, 1}})};
  const auto r = solve(p);
  ASSERT_EQ(r.status, Status::kOptimal) << r.message;
  EXPECT_NEAR(r.y.sum(), 4.0, 1e-6);
  EXPECT_LE(r.y[0], 2.0 + 1e-6);
}

// max t s.t. M - t I >= 0: the minimal eigenvalue.
TEST(Sdp, MinimumEigenvalue) {
  Matrix m(3, 3);
  m << 4, 1, 0, 1, 3, 1, 0, 1, 2;
  Problem p;
  p.m = 1;
  p.b = Vector::Ones(1);
  Block b;
  b.dim = 3;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j)
      if (m(i, j) != 0.0) b.c.push_back({i, j, m(i, j)});
  b.a = {{0, {{0, 0, 1.0}, {1, 1, 1.0}, {2, 2, 1.0}}}};
  p.blocks.push_back(b);
  const auto r = solve(p);
  ASSERT_EQ(r.status, Status::kOptimal);
  EXPECT_NEAR(r.y[0], min_eig(m), 1e-6);
}

TEST(Sdp, StopCallbackEndsEarly) {
  Problem p;
  p.m = 1;
  p.b = Vector::Ones(1);
  Block b;
  b.dim = 1;
  b.c = {{0, 0, 1.0}};
  b.a = {{0, {{0, 0, 1.0}}}};
  p.blocks.push_back(b);
  Options o;
  o.stop = [](const Vector&, const IterRecord& rec) { return rec.iter >= 2; };
  const auto r = solve(p, o);
  EXPECT_EQ(r.status, Status::kStopped);
  EXPECT_EQ(r.iterations, 2);
}

TEST(Sdp, DenseExpansionIsSymmetric) {
  const Matrix d = to_dense(2, {{0, 1, 3.0}, {1, 1, 2.0}});
  EXPECT_EQ(d(1, 0), 3.0);
  EXPECT_EQ(d(0, 1), 3.0);
  EXPECT_EQ(d(0, 0), 0.0);
}
