#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mjrobust/field.hpp"
#include "mjrobust/markov.hpp"

namespace mjrobust {

/// x(k+1) = A(th(k)) x(k) + B(th(k)) v(k),  z(k) = C(th(k)) x(k) + D(th(k)) v(k)
/// with th(k) a finite or kernel Markov chain. B is n x r_in, C is r_out x n
/// and D is r_out x r_in; the uncertainty Delta in A + B Delta C is
/// r_in x r_out. An autonomous model has r_in = r_out = 0.
class MjlsModel {
 public:
  /// Families over a finite chain must be ModeFamily pieces, one per mode.
  /// Over a kernel chain they are evaluators or partition families covering
  /// [a, b]. D defaults to zero. Throws InvalidInput on shape or support
  /// mismatch, or when C^T D != 0 (to 1e-10) somewhere it is checked.
  MjlsModel(ChainModel chain, MatrixField a, MatrixField b, MatrixField c,
            std::optional<MatrixField> d = std::nullopt);

  /// x(k+1) = A(th(k)) x(k) only.
  static MjlsModel autonomous(ChainModel chain, MatrixField a);

  const ChainModel& chain() const { return chain_; }
  bool is_finite() const { return mjrobust::is_finite(chain_); }
  const FiniteChain& finite_chain() const;
  const KernelChain& kernel_chain() const;
  /// Number of modes of a finite chain.
  int modes() const { return finite_chain().size(); }

  int n() const { return static_cast<int>(a_.rows()); }
  int inputs() const { return static_cast<int>(b_.cols()); }
  int outputs() const { return static_cast<int>(c_.rows()); }
  bool d_is_zero() const { return d_zero_; }

  Matrix A(double s) const { return a_(s); }
  Matrix B(double s) const { return b_(s); }
  Matrix C(double s) const { return c_(s); }
  Matrix D(double s) const { return d_(s); }
  const MatrixField& a_field() const { return a_; }
  const MatrixField& b_field() const { return b_; }
  const MatrixField& c_field() const { return c_; }
  const MatrixField& d_field() const { return d_; }

  /// States at which piecewise quantities are checked: the modes of a finite
  /// chain, or `per_cell` points per partition cell / a uniform mesh of
  /// [a, b] for kernel chains.
  std::vector<double> check_points(int mesh = 101) const;

 private:
  ChainModel chain_;
  MatrixField a_, b_, c_, d_;
  bool d_zero_ = true;
};

/// E(P)(i) = sum_j p_ij P(j) for a finite chain.
ModeFamily apply_E(const FiniteChain& chain, const ModeFamily& p);
/// E(P)(l) = sum_j q_j(l) P_j for P piecewise constant on a partition of the
/// chain's interval, evaluated at each of `points`.
std::vector<Matrix> apply_E(const KernelChain& chain, const ModeFamily& p,
                            std::span<const double> points);

/// The operator family of the bounded real lemma, evaluated pointwise.
struct OperatorSuite {
  std::vector<Matrix> ta;    // A^T E(P) A
  std::vector<Matrix> tb;    // B^T E(P) B
  std::vector<Matrix> psi1;  // T_A(P) + C^T C
  std::vector<Matrix> psi2;  // A^T E(P) B
  std::vector<Matrix> psi3;  // gamma I - T_B(P) - D^T D
  std::vector<Matrix> f;     // -Psi3^{-1} Psi2^T
};

/// Per mode of a finite model. Throws GainUndefined unless Psi3 is uniformly
/// definite of one sign (margin xi) before F is formed.
OperatorSuite operator_suite(const MjlsModel& model, const ModeFamily& p,
                             double gamma, double xi = kDefaultMargin);
/// Kernel model with P piecewise constant on a partition, at `points`.
OperatorSuite operator_suite(const MjlsModel& model, const ModeFamily& p,
                             double gamma, std::span<const double> points,
                             double xi = kDefaultMargin);

using InputSource = std::function<Vector(int k, RngStream& rng)>;

struct Trajectory {
  std::vector<Vector> x;       // x(0..K)
  std::vector<double> modes;   // th(0..K); mode index for finite chains
  std::vector<Vector> z;       // z(0..K-1)
  std::vector<Vector> v;       // v(0..K-1)
  int horizon = 0;
  bool diverged = false;
  int diverged_at = -1;
};

/// Runs the recursion for K steps. `theta0` defaults to a draw from the
/// initial distribution; an empty `input` means v = 0. A non-finite state
/// stops the run and sets `diverged`.
Trajectory simulate(const MjlsModel& model, const Vector& x0,
                    std::optional<double> theta0, const InputSource& input,
                    int horizon, RngStream& rng);

struct EmssReport {
  double decay_slope = 0.0;  // slope of log E||x(k)||^2 per step
  double ci_low = 0.0;       // 95% bootstrap percentile interval
  double ci_high = 0.0;
  bool trivially_stable = false;  // E||x(k)||^2 reached exactly zero
  bool degenerate = false;        // all trajectories zero from the start
  bool diverged = false;
  bool consistent_with_emss = false;  // ci_high < 0 (evidence, not proof)
  std::vector<double> mean_square;    // sample mean of ||x(k)||^2
  int trials = 0;
  int horizon = 0;
};

/// Fits log(mean ||x(k)||^2) = c + slope * k by least squares over
/// independent trajectories of the autonomous system (v = 0), with a
/// bootstrap confidence interval over trajectories. The initial mode is drawn
/// from the chain's initial distribution. `x0` defaults to the normalized
/// all-ones vector.
EmssReport estimate_emss(const MjlsModel& model, int trials, int horizon,
                         RngStream& rng,
                         std::optional<Vector> x0 = std::nullopt,
                         int bootstrap = 200);

/// Same fit on externally generated squared-norm series (rows: trajectories,
/// columns: k = 0..K).
EmssReport fit_emss(const Matrix& squared_norms, RngStream& rng,
                    int bootstrap = 200);

/// Spectral radius of L(P)(j) = sum_i p_ij A_i P_i A_i^T on a finite model,
/// via the N n^2 lift with blocks p_ij (A_i kron A_i). Values below one
/// certify EMSS.
double spectral_radius_LA(const MjlsModel& model);

/// Feedback v2 = z1, v1 = z2 of two models on the same chain; sys1 must have
/// D = 0. Returns the autonomous model with
/// A_hat = [[A1 + B1 D2 C1, B1 C2], [B2 C1, A2]].
MjlsModel build_interconnection(const MjlsModel& sys1, const MjlsModel& sys2);

/// Autonomous model x(k+1) = (A + B Delta C) x(k).
MjlsModel close_uncertain_loop(const MjlsModel& model,
                               const MatrixField& delta);

struct PerformanceEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int trials = 0;
};

/// Monte Carlo estimate of sum_k ||z(k)||^2 - gamma * sum_k ||v(k)||^2 over
/// `horizon` steps.
PerformanceEstimate eval_performance(const MjlsModel& model, double gamma,
                                     const Vector& x0,
                                     std::optional<double> theta0,
                                     const InputSource& input, int horizon,
                                     int trials, RngStream& rng);

}  // namespace mjrobust
