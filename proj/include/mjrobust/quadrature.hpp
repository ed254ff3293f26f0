#pragma once

#include <functional>
#include <span>

namespace mjrobust {

inline constexpr double kQuadratureTol = 1e-10;

/// Adaptive Simpson integration of f over [lo, hi] to absolute tolerance
/// `tol`. The interval is first split at every point of `breaks` lying
/// strictly inside (lo, hi), so integrands that are only piecewise smooth
/// converge quickly.
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 std::span<const double> breaks = {},
                 double tol = kQuadratureTol);

}  // namespace mjrobust
