#pragma once

#include <Eigen/Dense>

#include <vector>

namespace mjrobust {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Default margin used to realize strict inequalities "M >> 0" as
/// min_eig(M) >= xi.
inline constexpr double kDefaultMargin = 1e-8;

/// A real symmetric matrix. Construction symmetrizes (M + M^T)/2 and warns
/// when the input asymmetry exceeds 1e-9 (relative to the largest entry).
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);

  static SymMatrix identity(int n);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }

 private:
  Matrix m_;
};

/// Matrix-valued function over a chain's state space, stored as one piece per
/// mode (finite chain) or per subinterval of a partition of [a, b]. Cells of a
/// partition are half-open [h_{i-1}, h_i) except the last, which is closed.
class ModeFamily {
 public:
  ModeFamily() = default;
  /// One piece per mode of a finite chain.
  explicit ModeFamily(std::vector<Matrix> pieces);
  /// One piece per cell of the partition h_0 < ... < h_N.
  ModeFamily(std::vector<Matrix> pieces, std::vector<double> breakpoints);

  /// N copies of `m` over N modes.
  static ModeFamily constant(const Matrix& m, int modes);

  int size() const { return static_cast<int>(pieces_.size()); }
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  bool on_partition() const { return !breakpoints_.empty(); }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<Matrix>& pieces() const { return pieces_; }
  const Matrix& operator[](int i) const { return pieces_.at(i); }

  /// Piece index holding `state`: the mode index itself for finite support,
  /// the containing cell for a partition.
  int piece_index(double state) const;
  const Matrix& at(double state) const { return pieces_[piece_index(state)]; }

  /// max_i ||piece_i||_2, the H-infinity norm of a piecewise-constant family.
  double norm_max() const;
  bool same_support(const ModeFamily& other) const;

 private:
  std::vector<Matrix> pieces_;
  std::vector<double> breakpoints_;
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
};

/// Smallest eigenvalue of a symmetric matrix (lower triangle is read).
/// Throws InvalidInput on non-finite entries.
double min_eig(const Matrix& m);
inline double min_eig(const SymMatrix& m) { return min_eig(m.matrix()); }

/// Largest singular value.
double spectral_norm(const Matrix& m);

/// True iff every piece satisfies min_eig(piece) >= xi.
bool is_uniformly_positive(const ModeFamily& family, double xi);

enum class SchurDirection { kLower, kUpper };

/// kLower: P1 - P2 P3^{-1} P2^T (pivot P3).
/// kUpper: P3 - P2^T P1^{-1} P2 (pivot P1).
/// Throws PivotNotPositive when the pivot is not positive definite.
SymMatrix schur_reduce(const SymMatrix& p1, const Matrix& p2,
                       const SymMatrix& p3, SchurDirection direction);

/// [[P1, P2], [P2^T, P3]].
Matrix assemble_2x2(const Matrix& p1, const Matrix& p2, const Matrix& p3);

struct SchurReport {
  bool i_holds = false;    // the full block family is uniformly positive
  bool ii_holds = false;   // P3 and P1 - P2 P3^{-1} P2^T uniformly positive
  bool iii_holds = false;  // P1 and P3 - P2^T P1^{-1} P2 uniformly positive
  bool all_agree() const { return i_holds == ii_holds && ii_holds == iii_holds; }
};

/// Evaluates the three equivalent block-positivity conditions piecewise with
/// the shared margin xi.
SchurReport check_schur_equivalence(const ModeFamily& p1, const ModeFamily& p2,
                                    const ModeFamily& p3,
                                    double xi = kDefaultMargin);

/// Matrix exponential (scaling and squaring with Pade approximation).
Matrix expm(const Matrix& a);

/// \int_0^T e^{A s} ds * B via the exponential of the augmented block matrix
/// [[A, B], [0, 0]] * T.
Matrix exp_integral(const Matrix& a, const Matrix& b, double t);

}  // namespace mjrobust
