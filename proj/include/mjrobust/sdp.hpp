#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mjrobust/matfun.hpp"

namespace mjrobust::sdp {

/// Entry of a symmetric matrix; only row <= col is stored.
struct Entry {
  int row;
  int col;
  double value;
};

/// One PSD block of S = C - sum_k y_k A_k.
struct Block {
  int dim = 0;
  std::vector<Entry> c;
  std::vector<std::pair<int, std::vector<Entry>>> a;  // (variable, A_k)
};

/// max b^T y  s.t.  C_j - sum_k y_k A_kj >= 0 for every block j,
/// paired with  min <C, X>  s.t.  <A_k, X> = b_k, X >= 0.
struct Problem {
  int m = 0;
  Vector b;
  std::vector<Block> blocks;
};

struct IterRecord {
  int iter = 0;
  double pobj = 0.0;
  double dobj = 0.0;
  double pinf = 0.0;
  double dinf = 0.0;
  double relgap = 0.0;
  double step_p = 0.0;
  double step_d = 0.0;
};

enum class Status { kOptimal, kStopped, kMaxIterations, kNumericalFailure };

const char* to_string(Status s);

struct Options {
  double tol = 1e-8;
  int max_iterations = 100;
  /// Called after each iteration with the current dual point; returning true
  /// ends the solve with kStopped.
  std::function<bool(const Vector& y, const IterRecord&)> stop;
};

struct Result {
  Status status = Status::kNumericalFailure;
  Vector y;
  std::vector<Matrix> x;
  std::vector<Matrix> z;
  double pobj = 0.0;
  double dobj = 0.0;
  int iterations = 0;
  std::vector<IterRecord> trace;
  std::string message;
};

/// Infeasible-start primal-dual path following with the HKM direction and a
/// Mehrotra predictor-corrector.
Result solve(const Problem& problem, const Options& options = {});

/// Dense symmetric matrix of a stored block entry list.
Matrix to_dense(int dim, const std::vector<Entry>& entries);

}  // namespace mjrobust::sdp
