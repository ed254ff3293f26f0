#pragma once

#include <utility>
#include <vector>

#include "mjrobust/mjls.hpp"

namespace mjrobust {

/// Continuous plant dx/dt = A_c x + B_c u under sampled feedback
/// u(k) = (K + Delta) x(kL) that reaches the plant after a random delay.
struct PlantSpec {
  Matrix ac;  // n_c x n_c
  Matrix bc;  // n_c x m
  Matrix k;   // m x n_c
  double period = 1.0;

  int nc() const { return static_cast<int>(ac.rows()); }
  int m() const { return static_cast<int>(bc.cols()); }
  /// Throws InvalidInput on non-conformable data or period <= 0.
  void validate() const;
};

/// Delay process: a finite chain with one delay value per mode, or a kernel
/// chain whose state is the delay itself.
struct DelayModel {
  ChainModel chain;
  std::vector<double> values;

  static DelayModel finite(FiniteChain chain, std::vector<double> delays);
  static DelayModel kernel(KernelChain chain);
  /// Delay at a chain state.
  double delay(double state) const;
};

/// A_c = 0.2, B_c = 0.8, K = -1.2, L = 1.
PlantSpec example_plant();
/// Delays {0.1, 0.3}, pi = (1/2, 1/2), P = [[2/3, 1/3], [1/3, 2/3]].
DelayModel example1_delays();
/// The three-branch kernel on [0, 0.4] with uniform initial density.
DelayModel example2_delays();

/// W1 = e^{A_c (L - tau)} \int_0^tau e^{A_c s} ds B_c and
/// W2 = \int_0^{L - tau} e^{A_c s} ds B_c. Throws InvalidInput unless
/// 0 <= tau < L.
std::pair<Matrix, Matrix> w_matrices(const PlantSpec& plant, double tau);

/// A_d(tau) = [[0, I], [W1 K, e^{A_c L} + W2 K]].
Matrix ncs_a(const PlantSpec& plant, double tau);
/// B_d(tau) = [[0, 0], [W1, W2]].
Matrix ncs_b(const PlantSpec& plant, double tau);

/// The uncertain MJLS on x_d(k) = [x_c((k-1)L); x_c(kL)] with C_d = I and
/// D = 0. The perturbation enters as B_d diag(Delta, Delta) C_d.
MjlsModel discretize(const PlantSpec& plant, const DelayModel& delays);

/// diag(Delta, Delta) for an m x n_c controller perturbation.
Matrix structured_delta(const PlantSpec& plant, const Matrix& delta);

/// Autonomous closed loop of the discretized model under gain K + Delta.
MjlsModel closed_loop_model(const PlantSpec& plant, const DelayModel& delays,
                            const Matrix& delta);

/// x_d(1) = [x0; e^{A_c L} x0] (no control acts on [0, L)).
Vector initial_state(const PlantSpec& plant, const Vector& x0);

struct ClosedLoopTrajectory {
  std::vector<Vector> xc;      // x_c(kL), k = 0..K
  std::vector<double> delays;  // tau(k), k = 1..K-1
  bool diverged = false;
  int diverged_at = -1;
};

/// Samples x_c(kL) for k = 0..steps of the perturbed closed loop. tau(1) is
/// drawn from the initial distribution.
ClosedLoopTrajectory simulate_closed_loop(const PlantSpec& plant,
                                          const Matrix& delta,
                                          const DelayModel& delays,
                                          const Vector& x0, int steps,
                                          RngStream& rng);

}  // namespace mjrobust
