#include "mjrobust/field.hpp"

#include "mjrobust/error.hpp"

namespace mjrobust {

MatrixField::MatrixField(ModeFamily family)
    : family_(std::move(family)),
      rows_(family_->rows()),
      cols_(family_->cols()) {}

MatrixField::MatrixField(Eigen::Index rows, Eigen::Index cols, Evaluator eval)
    : eval_(std::move(eval)), rows_(rows), cols_(cols) {
  if (!eval_) throw InvalidInput("MatrixField: empty evaluator");
}

MatrixField MatrixField::constant(const Matrix& m, int modes) {
  return MatrixField(ModeFamily::constant(m, modes));
}

MatrixField MatrixField::constant(const Matrix& m) {
  return MatrixField(m.rows(), m.cols(), [m](double) { return m; });
}

Matrix MatrixField::operator()(double state) const {
  if (family_) return family_->at(state);
  Matrix out = eval_(state);
  if (out.rows() != rows_ || out.cols() != cols_) {
    throw InvalidInput("MatrixField: evaluator returned the wrong shape");
  }
  if (!out.allFinite()) {
    throw InvalidInput("MatrixField: evaluator returned non-finite entries");
  }
  return out;
}

}  // namespace mjrobust
