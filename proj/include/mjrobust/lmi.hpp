#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mjrobust/gridding.hpp"
#include "mjrobust/mjls.hpp"
#include "mjrobust/sdp.hpp"

namespace mjrobust {

enum class VarKind { kSymmetric, kGeneral, kScalar };
enum class LmiSource { kFiniteBrl, kGriddingPi1, kCustom };

const char* to_string(LmiSource s);
LmiSource lmi_source_from_string(const std::string& s);

/// Decision variables and affine symmetric constraint blocks F_b(y) >= 0.
/// Blocks are laid out in block rows; terms are placed on or above the block
/// diagonal and mirrored.
class LmiSystem {
 public:
  struct Group {
    std::string name;
    VarKind kind;
    int n;       // matrix size (1 for scalars)
    int offset;  // first scalar unknown
    int count;   // number of scalar unknowns
  };
  struct Block {
    std::string label;
    std::vector<int> row_sizes;
    std::vector<int> offsets;
    int dim = 0;
    std::vector<sdp::Entry> constant;
    std::vector<std::pair<int, std::vector<sdp::Entry>>> terms;
  };
  using Map = std::function<Matrix(const Matrix&)>;

  explicit LmiSystem(LmiSource source = LmiSource::kCustom) : source_(source) {}

  int add_group(std::string name, VarKind kind, int n = 1);
  int add_block(std::string label, std::vector<int> row_sizes);

  /// Adds `m` at block row bi, block column bj (bi <= bj), shifted by
  /// (row_off, col_off) inside that sub-block. Diagonal placements must be
  /// symmetric.
  void place_constant(int block, int bi, int bj, const Matrix& m,
                      int row_off = 0, int col_off = 0);
  /// Adds map(V) for the variable V of `group`, linear in V.
  void place(int block, int bi, int bj, int group, const Map& map,
             int row_off = 0, int col_off = 0);

  int num_unknowns() const { return unknowns_; }
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  const Block& block(int b) const { return blocks_.at(b); }
  const std::vector<Group>& groups() const { return groups_; }
  int find_group(const std::string& name) const;

  /// Basis element k of a group (as a matrix of the group's shape).
  Matrix basis(int group, int k) const;
  Matrix group_value(int group, const Vector& values) const;
  void pack(int group, const Matrix& value, Vector& values) const;

  Matrix evaluate(int block, const Vector& values) const;
  /// min over blocks of min_eig(F_b(values)).
  double min_margin(const Vector& values) const;
  std::vector<double> block_margins(const Vector& values) const;

  LmiSource source() const { return source_; }
  double gamma = 0.0;
  /// sum_i trace(P_i) <= trace_cap over p_groups when set.
  std::optional<double> trace_cap;
  /// |y_k| <= bound for every unknown when set.
  std::optional<double> variable_bound;
  std::vector<int> p_groups, x_groups, alpha_groups, beta_groups, rho_groups;

 private:
  void add_entries(Block& blk, int bi, int bj, int row_off, int col_off,
                   const Matrix& m, std::vector<sdp::Entry>& out) const;

  LmiSource source_;
  std::vector<Group> groups_;
  std::vector<Block> blocks_;
  int unknowns_ = 0;
};

/// Solved variables of an LMI system together with what they certify.
struct Certificate {
  LmiSource source = LmiSource::kCustom;
  double gamma = 0.0;
  double margin = 0.0;  // replayed min over blocks of min_eig
  std::vector<Matrix> p;
  std::vector<Matrix> x;
  Vector alpha, beta, rho;
  std::vector<double> x_sym_min_eig;  // min_eig(X_i + X_i^T), > 0 means X_i nonsingular
  Vector values;  // flat unknowns in system order
  std::optional<Grid> grid;
  std::optional<SigmaBounds> sigmas;
  std::string solver_status;
  int solver_iterations = 0;
  double solver_t = 0.0;
};

enum class FeasibilityStatus { kCertified, kInfeasible, kUnbounded, kSolverFailure };
const char* to_string(FeasibilityStatus s);

struct SolveOptions {
  double min_margin = 1e-6;
  double t_cap = 1e6;
  double tol = 1e-8;
  int max_iterations = 100;
  /// Stop as soon as the replayed margin reaches min_margin.
  bool early_stop = true;
  /// Override the system's caps when set.
  std::optional<double> trace_cap;
  std::optional<double> variable_bound;
};

struct FeasibilityResult {
  FeasibilityStatus status = FeasibilityStatus::kSolverFailure;
  double margin = 0.0;  // replayed, -inf when unavailable
  double solver_t = 0.0;
  std::vector<double> block_margins;
  std::optional<Certificate> certificate;
  std::string message;
  std::vector<sdp::IterRecord> trace;
  int iterations = 0;
};

/// Maximizes t subject to F_b(y) >= t I for every block. A certificate is
/// returned iff the replayed margin is at least min_margin.
FeasibilityResult solve_feasibility(const LmiSystem& sys,
                                    const SolveOptions& options = {});

/// Flat unknown vector of a certificate for this system's layout.
Vector pack_certificate(const LmiSystem& sys, const Certificate& cert);

/// Finite bounded real lemma: for each mode i the block
/// [[Ps, 0, Ps A_i, Ps B_i], [0, I, C_i, 0], [., ., P_i, 0], [., ., ., g I]]
/// with Ps = sum_j p_ij P_j, over block rows (n, r_out, n, r_in).
LmiSystem assemble_finite_brl(const MjlsModel& model, double gamma);

/// The gridding LMI: one 14-block-row matrix per cell, built from the data at
/// the cell's sample point, in X_i, P_i, alpha_i, beta_i, rho_i.
LmiSystem assemble_gridding(const MjlsModel& model, const Grid& grid,
                            const SigmaBounds& sigmas, double gamma);

/// Evaluates the reduced cell conditions Pi2_i - Pi3_i (nonlinear in the
/// scalars and X_i) at the values of a certificate.
class ReducedGridding {
 public:
  ReducedGridding(const MjlsModel& model, Grid grid, SigmaBounds sigmas,
                  double gamma);

  /// Throws InvalidInput unless alpha_i, beta_i, rho_i > 0.
  Matrix block(int cell, const Certificate& cert) const;
  double min_margin(const Certificate& cert) const;
  int cells() const { return grid_.cells(); }

 private:
  std::vector<Matrix> a_, b_, c_;
  std::vector<Vector> sq_;
  Grid grid_;
  SigmaBounds sigmas_;
  double gamma_;
  int n_, r_in_, r_out_;
};

ReducedGridding assemble_gridding_reduced(const MjlsModel& model,
                                          const Grid& grid,
                                          const SigmaBounds& sigmas,
                                          double gamma);

struct BisectionStep {
  double gamma;
  bool feasible;
  double margin;
};

struct BisectionResult {
  bool found = false;
  double gamma_lo = 0.0;  // largest gamma seen infeasible (0 if none)
  double gamma_hi = 0.0;  // smallest gamma seen feasible
  std::optional<Certificate> certificate;  // at gamma_hi
  std::vector<BisectionStep> steps;
  std::string message;
};

/// Minimal feasible gamma of a monotone oracle, to absolute width `tol`.
/// The bracket is widened geometrically (x10) until it holds a sign change
/// within [1e-12, 1e12]. Wide brackets are split geometrically first.
BisectionResult bisect_gamma(
    const std::function<FeasibilityResult(double)>& oracle, double tol,
    double lo = 1e-6, double hi = 1e6);

struct HinfResult {
  double gamma_star = 0.0;
  double norm = 0.0;   // sqrt(gamma_star)
  double bound = 0.0;  // 1 / sqrt(gamma_star)
  double spectral_radius = 0.0;
  BisectionResult bisection;
};

/// Bisection over the finite bounded real lemma (D is ignored). Throws
/// PreconditionError unless the nominal model is EMSS.
HinfResult hinf_norm_finite(const MjlsModel& model, double tol = 1e-4,
                            const SolveOptions& options = {},
                            double lo = 1e-6, double hi = 1e6);

struct FiniteMethod {};
struct GriddingMethod {
  Grid grid;
  SigmaBounds sigmas;
};
using CertMethod = std::variant<FiniteMethod, GriddingMethod>;

struct RobustCertificate {
  bool certified = false;
  double gamma = 0.0;
  double bound = 0.0;  // 1 / sqrt(gamma): admissible ||Delta||
  FeasibilityStatus status = FeasibilityStatus::kInfeasible;
  std::optional<Certificate> certificate;
  std::string message;
};

/// Feasibility at gamma certifies EMSS of A + B Delta C for every Delta with
/// piecewise spectral norm <= 1/sqrt(gamma). Failure is not a disproof.
RobustCertificate certify_robust_stability(const MjlsModel& model,
                                           double gamma,
                                           const CertMethod& method,
                                           const SolveOptions& options = {});

/// Rebuilds the LMI system a certificate came from (finite bounded real
/// lemma, or the gridding LMI on its stored grid and sigmas) and returns the
/// smallest eigenvalue over its blocks at the stored values.
double replay_margin(const Certificate& cert, const MjlsModel& model);

struct VerificationReport {
  double min_margin = 0.0;
  double worst_state = 0.0;
  int samples = 0;
  bool passed = false;
};

/// Samples the bounded-real matrix with E(P)^{-1} in the corner, at every
/// mode (finite) or at `samples_per_cell` interior points of every cell.
/// Throws VerificationFailure when E(P) is singular somewhere.
VerificationReport verify_certificate(const Certificate& cert,
                                      const MjlsModel& model,
                                      int samples_per_cell = 16);

/// Substitutes the P_i of a certificate found on lift_finite(model) into the
/// finite bounded real lemma blocks; returns their smallest eigenvalue.
double prop10_margin(const Certificate& lifted, const MjlsModel& finite_model,
                     double gamma);
bool cross_check_prop10(const Certificate& lifted,
                        const MjlsModel& finite_model, double gamma);

}  // namespace mjrobust
