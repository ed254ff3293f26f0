#include "mjrobust/gridding.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mjrobust/error.hpp"

namespace mjrobust {

Grid::Grid(std::vector<double> points, std::vector<double> samples)
    : points_(std::move(points)), samples_(std::move(samples)) {
  if (points_.size() < 2) throw InvalidInput("Grid: need at least one cell");
  if (samples_.size() + 1 != points_.size()) {
    throw InvalidInput("Grid: need one sample point per cell");
  }
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    if (!(points_[i + 1] > points_[i])) {
      throw InvalidInput("Grid: points must increase strictly");
    }
    const double s = samples_[i];
    if (!(s >= points_[i] && s <= points_[i + 1])) {
      std::ostringstream os;
      os << "Grid: sample " << s << " lies outside cell " << i;
      throw InvalidInput(os.str());
    }
  }
}

int Grid::cell_of(double ell) const {
  if (!(ell >= a() && ell <= b())) {
    std::ostringstream os;
    os << "Grid: state " << ell << " outside [" << a() << ", " << b() << "]";
    throw InvalidInput(os.str());
  }
  const auto it = std::upper_bound(points_.begin(), points_.end(), ell);
  const int i = static_cast<int>(it - points_.begin()) - 1;
  return std::min(i, cells() - 1);
}

Grid uniform_grid(double a, double b, int n, SampleRule rule,
                  std::span<const double> custom) {
  if (n < 1) throw InvalidInput("uniform_grid: need at least one cell");
  if (!(b > a)) throw InvalidInput("uniform_grid: need a < b");
  std::vector<double> pts(n + 1);
  const double w = (b - a) / n;
  for (int i = 0; i <= n; ++i) pts[i] = a + i * w;
  pts[n] = b;
  std::vector<double> samples(n);
  switch (rule) {
    case SampleRule::kMidpoint:
      for (int i = 0; i < n; ++i) samples[i] = 0.5 * (pts[i] + pts[i + 1]);
      break;
    case SampleRule::kLeft:
      for (int i = 0; i < n; ++i) samples[i] = pts[i];
      break;
    case SampleRule::kCustom:
      if (static_cast<int>(custom.size()) != n) {
        throw InvalidInput("uniform_grid: need one custom sample per cell");
      }
      samples.assign(custom.begin(), custom.end());
      break;
  }
  return Grid(std::move(pts), std::move(samples));
}

Vector sqrt_masses(const KernelChain& chain, const Grid& grid, double ell) {
  return subinterval_masses(chain, grid, ell).cwiseMax(0.0).cwiseSqrt();
}

Matrix build_Q(const KernelChain& chain, const Grid& grid, double ell, int n) {
  const Vector s = sqrt_masses(chain, grid, ell);
  Matrix q = Matrix::Zero(n, n * grid.cells());
  for (int j = 0; j < grid.cells(); ++j) {
    q.block(0, j * n, n, n).diagonal().setConstant(s[j]);
  }
  return q;
}

SigmaBounds estimate_sigmas(const MjlsModel& model, const Grid& grid,
                            int mesh, double safety) {
  if (mesh < 2) throw InvalidInput("estimate_sigmas: need at least two points per cell");
  if (!(safety >= 1.0)) throw InvalidInput("estimate_sigmas: safety factor must be >= 1");
  const auto& chain = model.kernel_chain();
  const double tol = 1e-12 * std::max(1.0, chain.b() - chain.a());
  if (std::abs(grid.a() - chain.a()) > tol || std::abs(grid.b() - chain.b()) > tol) {
    throw InvalidInput("estimate_sigmas: grid does not cover the chain's interval");
  }
  const int cells = grid.cells();
  SigmaBounds sb;
  sb.a = sb.b = sb.c = sb.q = Vector::Zero(cells);
  sb.mesh_per_cell = mesh;
  sb.safety = safety;
  for (int i = 0; i < cells; ++i) {
    const double h = grid.sample(i);
    const Matrix a0 = model.A(h), b0 = model.B(h), c0 = model.C(h);
    const Vector q0 = sqrt_masses(chain, grid, h);
    const double lo = grid.lo(i);
    const double w = grid.width(i);
    const bool last = i == cells - 1;
    const double span = last ? w : w * (1.0 - 1e-9);
    double da = 0.0, db = 0.0, dc = 0.0, dq = 0.0;
    for (int k = 0; k < mesh; ++k) {
      const double ell = last && k == mesh - 1 ? grid.b() : lo + span * k / (mesh - 1);
      da = std::max(da, spectral_norm(model.A(ell) - a0));
      if (b0.size() > 0) db = std::max(db, spectral_norm(model.B(ell) - b0));
      if (c0.size() > 0) dc = std::max(dc, spectral_norm(model.C(ell) - c0));
      dq = std::max(dq, (sqrt_masses(chain, grid, ell) - q0).norm());
    }
    sb.a[i] = std::max(1e-12, safety * da);
    sb.b[i] = std::max(1e-12, safety * db);
    sb.c[i] = std::max(1e-12, safety * dc);
    sb.q[i] = std::max(1e-12, safety * dq);
  }
  return sb;
}

Grid lift_grid(int modes) {
  return uniform_grid(0.0, static_cast<double>(modes), modes);
}

MjlsModel lift_finite(const MjlsModel& model) {
  const auto& fc = model.finite_chain();
  const int nm = fc.size();
  std::vector<double> h(nm + 1);
  for (int i = 0; i <= nm; ++i) h[i] = i;
  const auto lift = [&](const MatrixField& f) {
    return MatrixField(ModeFamily(f.family().pieces(), h));
  };
  return MjlsModel(KernelChain::piecewise_constant(fc), lift(model.a_field()),
                   lift(model.b_field()), lift(model.c_field()),
                   lift(model.d_field()));
}

}  // namespace mjrobust
