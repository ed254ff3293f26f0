#include "mjrobust/matfun.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <utility>

#include "mjrobust/error.hpp"

namespace mjrobust {

namespace {

WarningHandler& warning_handler() {
  static WarningHandler handler = [](std::string_view msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return handler;
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw InvalidInput(std::string(what) + ": non-finite entries");
  }
}

}  // namespace

void set_warning_handler(WarningHandler handler) {
  warning_handler() = std::move(handler);
}

void warn(std::string_view message) {
  if (warning_handler()) warning_handler()(message);
}

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw InvalidInput("SymMatrix: matrix is not square");
  }
  require_finite(m, "SymMatrix");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-9 * scale) {
    std::ostringstream os;
    os << "symmetrizing matrix with asymmetry " << asym;
    warn(os.str());
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(int n) {
  return SymMatrix(Matrix::Identity(n, n));
}

ModeFamily::ModeFamily(std::vector<Matrix> pieces)
    : pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw InvalidInput("ModeFamily: no pieces");
  rows_ = pieces_.front().rows();
  cols_ = pieces_.front().cols();
  for (const auto& p : pieces_) {
    if (p.rows() != rows_ || p.cols() != cols_) {
      throw InvalidInput("ModeFamily: pieces differ in shape");
    }
    require_finite(p, "ModeFamily");
  }
}

ModeFamily::ModeFamily(std::vector<Matrix> pieces,
                       std::vector<double> breakpoints)
    : ModeFamily(std::move(pieces)) {
  breakpoints_ = std::move(breakpoints);
  if (breakpoints_.size() != pieces_.size() + 1) {
    throw InvalidInput("ModeFamily: need one more breakpoint than pieces");
  }
  for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
    if (!(breakpoints_[i] > breakpoints_[i - 1])) {
      throw InvalidInput("ModeFamily: breakpoints must increase strictly");
    }
  }
}

ModeFamily ModeFamily::constant(const Matrix& m, int modes) {
  return ModeFamily(std::vector<Matrix>(modes, m));
}

int ModeFamily::piece_index(double state) const {
  if (!on_partition()) {
    const auto i = static_cast<int>(std::lround(state));
    if (i < 0 || i >= size()) {
      throw InvalidInput("ModeFamily: mode index out of range");
    }
    return i;
  }
  if (state < breakpoints_.front() || state > breakpoints_.back()) {
    throw InvalidInput("ModeFamily: state outside the partition");
  }
  const auto it =
      std::upper_bound(breakpoints_.begin(), breakpoints_.end(), state);
  const auto cell = static_cast<int>(it - breakpoints_.begin()) - 1;
  return std::min(cell, size() - 1);
}

double ModeFamily::norm_max() const {
  double best = 0.0;
  for (const auto& p : pieces_) best = std::max(best, spectral_norm(p));
  return best;
}

bool ModeFamily::same_support(const ModeFamily& other) const {
  return size() == other.size() && breakpoints_ == other.breakpoints_;
}

double min_eig(const Matrix& m) {
  if (m.rows() != m.cols()) throw InvalidInput("min_eig: not square");
  require_finite(m, "min_eig");
  if (m.rows() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

bool is_uniformly_positive(const ModeFamily& family, double xi) {
  if (family.rows() != family.cols()) {
    throw InvalidInput("is_uniformly_positive: pieces are not square");
  }
  for (const auto& p : family.pieces()) {
    if (min_eig(SymMatrix(p)) < xi) return false;
  }
  return true;
}

namespace {

// Cholesky of a symmetric pivot; nullopt unless positive definite.
std::optional<Eigen::LLT<Matrix>> pivot_factor(const Matrix& pivot) {
  Eigen::LLT<Matrix> llt(pivot);
  if (llt.info() != Eigen::Success) return std::nullopt;
  if (min_eig(pivot) <= 0.0) return std::nullopt;
  return llt;
}

}  // namespace

SymMatrix schur_reduce(const SymMatrix& p1, const Matrix& p2,
                       const SymMatrix& p3, SchurDirection direction) {
  if (p2.rows() != p1.dim() || p2.cols() != p3.dim()) {
    throw InvalidInput("schur_reduce: blocks are not conformable");
  }
  if (direction == SchurDirection::kLower) {
    auto f = pivot_factor(p3.matrix());
    if (!f) throw PivotNotPositive("schur_reduce: P3 is not positive definite");
    return SymMatrix(p1.matrix() - p2 * f->solve(p2.transpose()));
  }
  auto f = pivot_factor(p1.matrix());
  if (!f) throw PivotNotPositive("schur_reduce: P1 is not positive definite");
  return SymMatrix(p3.matrix() - p2.transpose() * f->solve(p2));
}

Matrix assemble_2x2(const Matrix& p1, const Matrix& p2, const Matrix& p3) {
  const auto n = p1.rows();
  const auto m = p3.rows();
  Matrix out(n + m, n + m);
  out.topLeftCorner(n, n) = p1;
  out.topRightCorner(n, m) = p2;
  out.bottomLeftCorner(m, n) = p2.transpose();
  out.bottomRightCorner(m, m) = p3;
  return out;
}

SchurReport check_schur_equivalence(const ModeFamily& p1, const ModeFamily& p2,
                                    const ModeFamily& p3, double xi) {
  if (!p1.same_support(p2) || !p1.same_support(p3)) {
    throw InvalidInput("check_schur_equivalence: families differ in support");
  }
  if (p2.rows() != p1.rows() || p2.cols() != p3.rows() ||
      p1.rows() != p1.cols() || p3.rows() != p3.cols()) {
    throw InvalidInput("check_schur_equivalence: blocks are not conformable");
  }
  SchurReport report{true, true, true};
  for (int k = 0; k < p1.size(); ++k) {
    const SymMatrix a(p1[k]);
    const SymMatrix c(p3[k]);
    const Matrix& b = p2[k];
    if (min_eig(assemble_2x2(a.matrix(), b, c.matrix())) < xi) {
      report.i_holds = false;
    }
    if (min_eig(c) < xi) {
      report.ii_holds = false;
    } else if (min_eig(schur_reduce(a, b, c, SchurDirection::kLower)) < xi) {
      report.ii_holds = false;
    }
    if (min_eig(a) < xi) {
      report.iii_holds = false;
    } else if (min_eig(schur_reduce(a, b, c, SchurDirection::kUpper)) < xi) {
      report.iii_holds = false;
    }
  }
  return report;
}

Matrix expm(const Matrix& a) {
  if (a.rows() != a.cols()) throw InvalidInput("expm: not square");
  require_finite(a, "expm");
  return a.exp();
}

Matrix exp_integral(const Matrix& a, const Matrix& b, double t) {
  if (a.rows() != a.cols() || b.rows() != a.rows()) {
    throw InvalidInput("exp_integral: A must be square and B conformable");
  }
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw InvalidInput("exp_integral: T must be finite and non-negative");
  }
  const auto n = a.rows();
  const auto m = b.cols();
  Matrix aug = Matrix::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = a * t;
  aug.topRightCorner(n, m) = b * t;
  return expm(aug).topRightCorner(n, m);
}

}  // namespace mjrobust
