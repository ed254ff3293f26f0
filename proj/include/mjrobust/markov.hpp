#pragma once

#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "mjrobust/matfun.hpp"
#include "mjrobust/rng.hpp"

namespace mjrobust {

class Grid;

/// Markov chain on the modes {0, ..., N-1}.
class FiniteChain {
 public:
  /// `pi` is the initial distribution, `transition(i, j)` = P(next = j | i).
  /// Throws InvalidInput unless both are stochastic to within 1e-12.
  FiniteChain(Vector pi, Matrix transition);

  int size() const { return static_cast<int>(pi_.size()); }
  const Vector& pi() const { return pi_; }
  const Matrix& transition() const { return p_; }
  double p(int i, int j) const { return p_(i, j); }

 private:
  Vector pi_;
  Matrix p_;
};

/// Markov chain on [a, b] with an initial density nu0 and a transition
/// kernel density g(t, s) with respect to Lebesgue measure.
class KernelChain {
 public:
  using Density = std::function<double(double)>;
  using Kernel = std::function<double(double, double)>;
  /// Points where g(x, .) or g(., x) fails to be smooth (e.g. the diagonal).
  using Breaks = std::function<std::vector<double>(double)>;

  /// Validates normalization of nu0 and of g(t, .) on a 101-point mesh of t
  /// (to 1e-8 by quadrature) and non-negativity on that mesh.
  KernelChain(double a, double b, Density nu0, Kernel g, Breaks breaks,
              std::string tag, std::string fingerprint);

  /// g = 1/(b-a), nu0 = 1/(b-a).
  static KernelChain uniform(double a, double b);
  /// The three-branch delay kernel on [0, c] with uniform nu0 = 1/c:
  /// g(t, s) = (2/c) s/t for s < t, 2/c on the diagonal and
  /// (2/c)(c - s)/(c - t) for s > t. With c = 0.4 this is 5s/t, 5 and
  /// 5(2 - 5s)/(2 - 5t).
  static KernelChain example2(double c = 0.4);
  /// Piecewise-constant kernel on [0, N] with unit cells: g(t, s) = p_ij for
  /// t in cell i, s in cell j; nu0 = pi_i on cell i.
  static KernelChain piecewise_constant(const FiniteChain& chain);
  /// Kernel tabulated on a uniform (M+1) x (M+1) grid of [a, b]^2 with
  /// bilinear interpolation; nu0 tabulated on the M+1 grid points with
  /// linear interpolation.
  static KernelChain tabulated(double a, double b, Matrix kernel_values,
                               Vector nu0_values);

  double a() const { return a_; }
  double b() const { return b_; }
  double nu0(double x) const { return nu0_(x); }
  double g(double t, double s) const { return g_(t, s); }
  std::vector<double> breaks(double x) const {
    return breaks_ ? breaks_(x) : std::vector<double>{};
  }
  const std::string& tag() const { return tag_; }
  /// Identifies the kernel family and parameters; equal fingerprints mean the
  /// same chain.
  const std::string& fingerprint() const { return fingerprint_; }

  /// Cell-to-cell transition matrix of the density propagation on `cells`
  /// uniform cells (row j: mass sent from cell j). Computed once per mesh
  /// size and cached; rows sum to one.
  const Matrix& cell_transfer(int cells) const;

 private:
  struct Cache;
  double a_ = 0.0;
  double b_ = 1.0;
  Density nu0_;
  Kernel g_;
  Breaks breaks_;
  std::string tag_;
  std::string fingerprint_;
  std::shared_ptr<Cache> cache_;
};

using ChainModel = std::variant<FiniteChain, KernelChain>;

inline bool is_finite(const ChainModel& c) {
  return std::holds_alternative<FiniteChain>(c);
}
/// Equal chains have equal fingerprints (finite chains compare by value).
bool same_chain(const ChainModel& x, const ChainModel& y);
std::string chain_fingerprint(const ChainModel& c);

inline constexpr int kDefaultDensityMesh = 1000;

/// Distribution of the chain at step `step`: the probability vector for a
/// finite chain, or the cell averages of the density on `values.size()`
/// uniform cells of [a, b] for a kernel chain.
struct DensityState {
  Vector values;
  int step = 0;
  bool on_mesh = false;
  double a = 0.0;
  double b = 0.0;

  double cell_width() const { return (b - a) / static_cast<double>(values.size()); }
  double mesh_point(int i) const { return a + (i + 0.5) * cell_width(); }
};

DensityState initial_density(const ChainModel& chain,
                             int mesh = kDefaultDensityMesh);
/// Sum of probabilities (finite) or integral of the density (kernel).
double total_mass(const DensityState& nu);

/// One step of nu_{k+1}(l) = \int nu_k(t) g(t, l) dt; nu * P for a finite
/// chain.
DensityState evolve_density(const ChainModel& chain, const DensityState& nu);

struct PositivityReport {
  bool nu0_positive = false;
  bool kernel_marginal_positive = false;
  /// True for kernel chains: positivity was checked on a mesh only.
  bool mesh_certified = false;
  int mesh_points = 0;

  bool ok() const { return nu0_positive && kernel_marginal_positive; }
};

/// Finite: pi > 0 and every column of P has a positive entry. Kernel: nu0 and
/// l -> \int g(t, l) dt strictly positive at `mesh` cell midpoints of [a, b].
PositivityReport check_positivity(const ChainModel& chain,
                                  int mesh = kDefaultDensityMesh);

/// \int_a^b g(t, l) dt.
double kernel_marginal(const KernelChain& chain, double ell);

/// Draw from the initial distribution (mode index for finite chains).
double sample_initial(const ChainModel& chain, RngStream& rng);
/// Draw from G(current, .). Kernel chains use inverse-CDF sampling with
/// adaptive quadrature and bisection. Throws SamplingError on a degenerate
/// row or kernel slice.
double sample_next(const ChainModel& chain, double current, RngStream& rng);

/// q_i(l) = \int_{cell i} g(l, t) dt for every cell of `grid`.
Vector subinterval_masses(const KernelChain& chain, const Grid& grid,
                          double ell);

}  // namespace mjrobust
