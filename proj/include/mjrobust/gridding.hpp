#pragma once

#include "mjrobust/grid.hpp"
#include "mjrobust/mjls.hpp"

namespace mjrobust {

/// Per-cell bounds on how far the data move inside a cell, measured from the
/// cell's sample point: sigma_A[i] >= sup ||A(l) - A(hbar_i)||_2 and likewise
/// for B, C, and sigma_Q[i] >= sup ||sqrt q(l) - sqrt q(hbar_i)||_2.
struct SigmaBounds {
  Vector a, b, c, q;
  int mesh_per_cell = 0;
  double safety = 1.0;
};

/// Q(l) = [sqrt(q_1(l)) I_n, ..., sqrt(q_N(l)) I_n], an n x nN matrix.
Matrix build_Q(const KernelChain& chain, const Grid& grid, double ell, int n);
/// sqrt of the subinterval masses at l.
Vector sqrt_masses(const KernelChain& chain, const Grid& grid, double ell);

/// Sup estimates on `mesh` points per cell (the last cell includes b),
/// multiplied by `safety` and floored at 1e-12. Mesh-based, not rigorous.
SigmaBounds estimate_sigmas(const MjlsModel& model, const Grid& grid,
                            int mesh = 64, double safety = 1.05);

/// The finite model as a kernel model on [0, N]: unit cells, piecewise
/// constant kernel p_ij and data constant on each cell.
MjlsModel lift_finite(const MjlsModel& model);

/// The unit-cell grid of a lifted N-mode model with samples at i + 1/2.
Grid lift_grid(int modes);

}  // namespace mjrobust
