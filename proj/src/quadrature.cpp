#include "mjrobust/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace mjrobust {

namespace {

constexpr int kMaxDepth = 48;

double simpson_recurse(const std::function<double(double)>& f, double a,
                       double b, double fa, double fm, double fb, double whole,
                       double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double simpson(const std::function<double(double)>& f, double a, double b,
               double tol) {
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  // Always split once: a coarse estimate that happens to agree with itself
  // must not end the recursion.
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, kMaxDepth) +
         simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, kMaxDepth);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double lo, double hi,
                 std::span<const double> breaks, double tol) {
  if (hi == lo) return 0.0;
  if (hi < lo) return -integrate(f, hi, lo, breaks, tol);
  std::vector<double> knots{lo};
  for (double b : breaks) {
    if (b > lo && b < hi) knots.push_back(b);
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  knots.push_back(hi);
  const double piece_tol = tol / static_cast<double>(knots.size() - 1);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    total += simpson(f, knots[i], knots[i + 1], piece_tol);
  }
  return total;
}

}  // namespace mjrobust
