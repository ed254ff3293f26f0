#include "mjrobust/markov.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include "mjrobust/error.hpp"
#include "mjrobust/grid.hpp"
#include "mjrobust/quadrature.hpp"

namespace mjrobust {

namespace {

// 6-point Gauss-Legendre rule on [0, 1].
constexpr std::array<double, 6> kGlNodes = {
    0.033765242898423986, 0.16939530676686776, 0.38069040695840156,
    0.61930959304159844,  0.83060469323313224, 0.96623475710157601};
constexpr std::array<double, 6> kGlWeights = {
    0.085662246189585173, 0.18038078652406930, 0.23395696728634552,
    0.23395696728634552,  0.18038078652406930, 0.085662246189585173};

// Gauss-Legendre over [lo, hi], split at any break inside.
double gl_integrate(const std::function<double(double)>& f, double lo,
                    double hi, const std::vector<double>& breaks) {
  const bool split = std::any_of(breaks.begin(), breaks.end(),
                                 [&](double x) { return x > lo && x < hi; });
  if (!split) {
    double total = 0.0;
    for (std::size_t q = 0; q < kGlNodes.size(); ++q) {
      total += kGlWeights[q] * f(lo + (hi - lo) * kGlNodes[q]);
    }
    return (hi - lo) * total;
  }
  std::vector<double> knots{lo};
  for (double x : breaks) {
    if (x > lo && x < hi) knots.push_back(x);
  }
  std::sort(knots.begin(), knots.end());
  knots.push_back(hi);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const double w = knots[k + 1] - knots[k];
    for (std::size_t q = 0; q < kGlNodes.size(); ++q) {
      total += w * kGlWeights[q] * f(knots[k] + w * kGlNodes[q]);
    }
  }
  return total;
}

std::string format_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

// Inverse CDF by bisection on cumulative adaptive quadrature.
double inverse_cdf(const std::function<double(double)>& density, double a,
                   double b, const std::vector<double>& breaks, double u) {
  const double total = integrate(density, a, b, breaks);
  if (!std::isfinite(total) || total <= 0.0) {
    throw SamplingError("degenerate density: total mass " +
                        format_double(total));
  }
  const double target = u * total;
  double lo = a;
  double hi = b;
  double cdf_lo = 0.0;
  const double width_tol = 1e-13 * (b - a);
  while (hi - lo > width_tol) {
    const double mid = 0.5 * (lo + hi);
    const double cdf_mid = cdf_lo + integrate(density, lo, mid, breaks);
    if (cdf_mid < target) {
      lo = mid;
      cdf_lo = cdf_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

FiniteChain::FiniteChain(Vector pi, Matrix transition)
    : pi_(std::move(pi)), p_(std::move(transition)) {
  const auto n = pi_.size();
  if (n == 0) throw InvalidInput("FiniteChain: empty initial distribution");
  if (p_.rows() != n || p_.cols() != n) {
    throw InvalidInput("FiniteChain: transition matrix must be N x N");
  }
  if (!pi_.allFinite() || !p_.allFinite()) {
    throw InvalidInput("FiniteChain: non-finite entries");
  }
  if ((pi_.array() < 0.0).any()) {
    throw InvalidInput("FiniteChain: pi has a negative entry");
  }
  if (std::abs(pi_.sum() - 1.0) > 1e-12) {
    throw InvalidInput("FiniteChain: pi sums to " + format_double(pi_.sum()) +
                       ", not 1");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if ((p_.row(i).array() < 0.0).any()) {
      throw InvalidInput("FiniteChain: row " + std::to_string(i) +
                         " of P has a negative entry");
    }
    const double s = p_.row(i).sum();
    if (std::abs(s - 1.0) > 1e-12) {
      throw InvalidInput("FiniteChain: row " + std::to_string(i) +
                         " of P sums to " + format_double(s) + ", not 1");
    }
  }
}

struct KernelChain::Cache {
  std::mutex mutex;
  std::map<int, Matrix> transfer;
};

KernelChain::KernelChain(double a, double b, Density nu0, Kernel g,
                         Breaks breaks, std::string tag,
                         std::string fingerprint)
    : a_(a),
      b_(b),
      nu0_(std::move(nu0)),
      g_(std::move(g)),
      breaks_(std::move(breaks)),
      tag_(std::move(tag)),
      fingerprint_(std::move(fingerprint)),
      cache_(std::make_shared<Cache>()) {
  if (!(a_ < b_) || !std::isfinite(a_) || !std::isfinite(b_)) {
    throw InvalidInput("KernelChain: need finite a < b");
  }
  if (!nu0_ || !g_) throw InvalidInput("KernelChain: missing density");
  const double nu_mass = integrate(nu0_, a_, b_, this->breaks(a_));
  if (std::abs(nu_mass - 1.0) > 1e-8) {
    throw InvalidInput("KernelChain: nu0 integrates to " +
                       format_double(nu_mass) + ", not 1");
  }
  constexpr int kCheck = 101;
  for (int k = 0; k < kCheck; ++k) {
    const double t = a_ + (b_ - a_) * k / (kCheck - 1);
    if (nu0_(t) < 0.0) {
      throw InvalidInput("KernelChain: nu0 is negative at " + format_double(t));
    }
    const auto row = [&](double s) { return g_(t, s); };
    const double mass = integrate(row, a_, b_, this->breaks(t));
    if (std::abs(mass - 1.0) > 1e-8) {
      throw InvalidInput("KernelChain: g(" + format_double(t) +
                         ", .) integrates to " + format_double(mass) +
                         ", not 1");
    }
    for (int j = 0; j < kCheck; ++j) {
      const double s = a_ + (b_ - a_) * j / (kCheck - 1);
      if (g_(t, s) < 0.0) {
        throw InvalidInput("KernelChain: kernel is negative at (" +
                           format_double(t) + ", " + format_double(s) + ")");
      }
    }
  }
}

KernelChain KernelChain::uniform(double a, double b) {
  const double d = 1.0 / (b - a);
  return KernelChain(
      a, b, [d](double) { return d; }, [d](double, double) { return d; },
      nullptr, "uniform",
      "uniform[" + format_double(a) + "," + format_double(b) + "]");
}

KernelChain KernelChain::example2(double c) {
  if (!(c > 0.0)) throw InvalidInput("example2 kernel: need c > 0");
  const double k = 2.0 / c;
  auto g = [c, k](double t, double s) {
    if (s < t) return k * s / t;
    if (s == t) return k;
    return k * (c - s) / (c - t);
  };
  return KernelChain(
      0.0, c, [c](double) { return 1.0 / c; }, g,
      [](double x) { return std::vector<double>{x}; }, "example2",
      "example2[" + format_double(c) + "]");
}

KernelChain KernelChain::piecewise_constant(const FiniteChain& chain) {
  const int n = chain.size();
  const Vector pi = chain.pi();
  const Matrix p = chain.transition();
  const auto cell = [n](double x) {
    return std::clamp(static_cast<int>(std::floor(x)), 0, n - 1);
  };
  std::vector<double> knots;
  for (int i = 1; i < n; ++i) knots.push_back(i);
  std::ostringstream fp;
  fp.precision(17);
  fp << "piecewise-constant[" << n << ";";
  for (int i = 0; i < n; ++i) fp << pi(i) << ",";
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) fp << p(i, j) << ",";
  }
  fp << "]";
  return KernelChain(
      0.0, n, [pi, cell](double x) { return pi(cell(x)); },
      [p, cell](double t, double s) { return p(cell(t), cell(s)); },
      [knots](double) { return knots; }, "piecewise-constant", fp.str());
}

KernelChain KernelChain::tabulated(double a, double b, Matrix kernel_values,
                                   Vector nu0_values) {
  const auto m = kernel_values.rows() - 1;
  if (m < 1 || kernel_values.cols() != m + 1 || nu0_values.size() != m + 1) {
    throw InvalidInput(
        "tabulated kernel: need an (M+1)x(M+1) table and M+1 nu0 values");
  }
  if (!(a < b)) throw InvalidInput("tabulated kernel: need a < b");
  const double h = (b - a) / static_cast<double>(m);
  const auto locate = [a, h, m](double x, Eigen::Index& i, double& frac) {
    double u = (x - a) / h;
    u = std::clamp(u, 0.0, static_cast<double>(m));
    i = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(u)), m - 1);
    frac = u - static_cast<double>(i);
  };
  auto nu0 = [nu0_values, locate](double x) {
    Eigen::Index i;
    double f;
    locate(x, i, f);
    return (1.0 - f) * nu0_values(i) + f * nu0_values(i + 1);
  };
  auto g = [kernel_values, locate](double t, double s) {
    Eigen::Index i, j;
    double ft, fs;
    locate(t, i, ft);
    locate(s, j, fs);
    return (1.0 - ft) * ((1.0 - fs) * kernel_values(i, j) +
                         fs * kernel_values(i, j + 1)) +
           ft * ((1.0 - fs) * kernel_values(i + 1, j) +
                 fs * kernel_values(i + 1, j + 1));
  };
  std::vector<double> knots;
  for (Eigen::Index i = 1; i < m; ++i) knots.push_back(a + h * i);
  std::ostringstream fp;
  fp.precision(17);
  fp << "tabulated[" << a << "," << b << ";" << m << ";";
  for (Eigen::Index i = 0; i < kernel_values.size(); ++i) {
    fp << kernel_values.data()[i] << ",";
  }
  for (Eigen::Index i = 0; i < nu0_values.size(); ++i) fp << nu0_values(i) << ",";
  fp << "]";
  return KernelChain(
      a, b, nu0, g, [knots](double) { return knots; }, "tabulated", fp.str());
}

const Matrix& KernelChain::cell_transfer(int cells) const {
  if (cells < 1) throw InvalidInput("cell_transfer: need at least one cell");
  std::lock_guard<std::mutex> lock(cache_->mutex);
  auto it = cache_->transfer.find(cells);
  if (it != cache_->transfer.end()) return it->second;

  const double h = (b_ - a_) / cells;
  Matrix t = Matrix::Zero(cells, cells);
  for (int j = 0; j < cells; ++j) {
    const double lo = a_ + j * h;
    for (std::size_t q = 0; q < kGlNodes.size(); ++q) {
      const double src = lo + h * kGlNodes[q];
      const auto row = [&](double s) { return g_(src, s); };
      const auto br = breaks(src);
      for (int m = 0; m < cells; ++m) {
        t(j, m) += kGlWeights[q] *
                   gl_integrate(row, a_ + m * h, a_ + (m + 1) * h, br);
      }
    }
    const double s = t.row(j).sum();
    if (s > 0.0) t.row(j) /= s;
  }
  return cache_->transfer.emplace(cells, std::move(t)).first->second;
}

bool same_chain(const ChainModel& x, const ChainModel& y) {
  return chain_fingerprint(x) == chain_fingerprint(y);
}

std::string chain_fingerprint(const ChainModel& c) {
  if (const auto* k = std::get_if<KernelChain>(&c)) return k->fingerprint();
  const auto& f = std::get<FiniteChain>(c);
  std::ostringstream os;
  os.precision(17);
  os << "finite[" << f.size() << ";";
  for (int i = 0; i < f.size(); ++i) os << f.pi()(i) << ",";
  for (int i = 0; i < f.size(); ++i) {
    for (int j = 0; j < f.size(); ++j) os << f.p(i, j) << ",";
  }
  os << "]";
  return os.str();
}

DensityState initial_density(const ChainModel& chain, int mesh) {
  DensityState out;
  if (const auto* f = std::get_if<FiniteChain>(&chain)) {
    out.values = f->pi();
    return out;
  }
  const auto& k = std::get<KernelChain>(chain);
  if (mesh < 1) throw InvalidInput("initial_density: mesh must be positive");
  out.on_mesh = true;
  out.a = k.a();
  out.b = k.b();
  out.values.resize(mesh);
  const double h = (k.b() - k.a()) / mesh;
  const auto nu0 = [&k](double x) { return k.nu0(x); };
  for (int i = 0; i < mesh; ++i) {
    const double lo = k.a() + i * h;
    out.values(i) = gl_integrate(nu0, lo, lo + h, k.breaks(lo)) / h;
  }
  return out;
}

double total_mass(const DensityState& nu) {
  return nu.on_mesh ? nu.values.sum() * nu.cell_width() : nu.values.sum();
}

DensityState evolve_density(const ChainModel& chain, const DensityState& nu) {
  DensityState out = nu;
  out.step = nu.step + 1;
  if (const auto* f = std::get_if<FiniteChain>(&chain)) {
    if (nu.on_mesh || nu.values.size() != f->size()) {
      throw InvalidInput("evolve_density: density does not match the chain");
    }
    out.values = f->transition().transpose() * nu.values;
    return out;
  }
  const auto& k = std::get<KernelChain>(chain);
  if (!nu.on_mesh || nu.a != k.a() || nu.b != k.b() || nu.values.size() == 0) {
    throw InvalidInput("evolve_density: density mesh does not match the chain");
  }
  const Matrix& t = k.cell_transfer(static_cast<int>(nu.values.size()));
  out.values = t.transpose() * nu.values;
  return out;
}

double kernel_marginal(const KernelChain& chain, double ell) {
  const auto col = [&](double t) { return chain.g(t, ell); };
  return integrate(col, chain.a(), chain.b(), chain.breaks(ell));
}

PositivityReport check_positivity(const ChainModel& chain, int mesh) {
  PositivityReport r;
  if (const auto* f = std::get_if<FiniteChain>(&chain)) {
    r.nu0_positive = (f->pi().array() > 0.0).all();
    r.kernel_marginal_positive = true;
    for (int j = 0; j < f->size(); ++j) {
      if (!(f->transition().col(j).array() > 0.0).any()) {
        r.kernel_marginal_positive = false;
      }
    }
    r.mesh_points = f->size();
    return r;
  }
  const auto& k = std::get<KernelChain>(chain);
  r.mesh_certified = true;
  r.mesh_points = mesh;
  r.nu0_positive = true;
  r.kernel_marginal_positive = true;
  const double h = (k.b() - k.a()) / mesh;
  for (int i = 0; i < mesh; ++i) {
    const double x = k.a() + (i + 0.5) * h;
    if (!(k.nu0(x) > 0.0)) r.nu0_positive = false;
    if (!(kernel_marginal(k, x) > 0.0)) r.kernel_marginal_positive = false;
  }
  return r;
}

double sample_initial(const ChainModel& chain, RngStream& rng) {
  const double u = rng.uniform();
  if (const auto* f = std::get_if<FiniteChain>(&chain)) {
    double acc = 0.0;
    for (int i = 0; i < f->size(); ++i) {
      acc += f->pi()(i);
      if (u < acc) return i;
    }
    for (int i = f->size() - 1; i >= 0; --i) {
      if (f->pi()(i) > 0.0) return i;
    }
    throw SamplingError("degenerate initial distribution");
  }
  const auto& k = std::get<KernelChain>(chain);
  const auto nu0 = [&k](double x) { return k.nu0(x); };
  return inverse_cdf(nu0, k.a(), k.b(), k.breaks(k.a()), u);
}

double sample_next(const ChainModel& chain, double current, RngStream& rng) {
  const double u = rng.uniform();
  if (const auto* f = std::get_if<FiniteChain>(&chain)) {
    const auto i = static_cast<int>(std::lround(current));
    if (i < 0 || i >= f->size()) {
      throw InvalidInput("sample_next: mode out of range");
    }
    const auto row = f->transition().row(i);
    const double total = row.sum();
    if (!(total > 0.0)) throw SamplingError("sample_next: degenerate row");
    double acc = 0.0;
    for (int j = 0; j < f->size(); ++j) {
      acc += row(j) / total;
      if (u < acc) return j;
    }
    for (int j = f->size() - 1; j >= 0; --j) {
      if (row(j) > 0.0) return j;
    }
    throw SamplingError("sample_next: degenerate row");
  }
  const auto& k = std::get<KernelChain>(chain);
  if (current < k.a() || current > k.b()) {
    throw InvalidInput("sample_next: state outside [a, b]");
  }
  const auto row = [&](double s) { return k.g(current, s); };
  return inverse_cdf(row, k.a(), k.b(), k.breaks(current), u);
}

Vector subinterval_masses(const KernelChain& chain, const Grid& grid,
                          double ell) {
  if (ell < chain.a() || ell > chain.b()) {
    throw InvalidInput("subinterval_masses: l outside [a, b]");
  }
  if (std::abs(grid.a() - chain.a()) > 1e-12 ||
      std::abs(grid.b() - chain.b()) > 1e-12) {
    throw InvalidInput("subinterval_masses: grid does not cover [a, b]");
  }
  const auto row = [&](double t) { return chain.g(ell, t); };
  const auto br = chain.breaks(ell);
  Vector q(grid.cells());
  for (int i = 0; i < grid.cells(); ++i) {
    q(i) = integrate(row, grid.lo(i), grid.hi(i), br);
  }
  return q;
}

}  // namespace mjrobust
