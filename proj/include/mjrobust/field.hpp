#pragma once

#include <functional>
#include <optional>

#include "mjrobust/matfun.hpp"

namespace mjrobust {

/// A matrix-valued function of the chain state: either a piecewise-constant
/// ModeFamily or a continuous evaluator l -> M(l). Finite chains use the mode
/// index as the state.
class MatrixField {
 public:
  using Evaluator = std::function<Matrix(double)>;

  MatrixField() = default;
  MatrixField(ModeFamily family);  // NOLINT(runtime/explicit)
  MatrixField(Eigen::Index rows, Eigen::Index cols, Evaluator eval);

  /// Same matrix at every state of a finite chain with `modes` modes.
  static MatrixField constant(const Matrix& m, int modes);
  /// Same matrix at every state (evaluator form, for kernel chains).
  static MatrixField constant(const Matrix& m);

  Matrix operator()(double state) const;
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  bool is_piecewise() const { return family_.has_value(); }
  const ModeFamily& family() const { return *family_; }

 private:
  std::optional<ModeFamily> family_;
  Evaluator eval_;
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
};

}  // namespace mjrobust
