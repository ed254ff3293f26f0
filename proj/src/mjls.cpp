#include "mjrobust/mjls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include "mjrobust/error.hpp"
#include "mjrobust/grid.hpp"

namespace mjrobust {

namespace {

constexpr double kCrossTol = 1e-10;
constexpr int kDenseLiftLimit = 400;

void check_support(const MatrixField& f, const ChainModel& chain,
                   const char* name) {
  if (const auto* fc = std::get_if<FiniteChain>(&chain)) {
    if (!f.is_piecewise() || f.family().on_partition() ||
        f.family().size() != fc->size()) {
      std::ostringstream os;
      os << name << ": a finite chain with " << fc->size()
         << " modes needs one matrix per mode";
      throw InvalidInput(os.str());
    }
    return;
  }
  const auto& kc = std::get<KernelChain>(chain);
  if (!f.is_piecewise()) return;
  const auto& fam = f.family();
  if (!fam.on_partition()) {
    throw InvalidInput(std::string(name) +
                       ": piecewise family over a kernel chain needs a partition");
  }
  const double tol = 1e-12 * std::max(1.0, kc.b() - kc.a());
  if (std::abs(fam.breakpoints().front() - kc.a()) > tol ||
      std::abs(fam.breakpoints().back() - kc.b()) > tol) {
    throw InvalidInput(std::string(name) +
                       ": partition does not cover the chain's interval");
  }
}

// All fields piecewise on one support: combine piece by piece. Otherwise an
// evaluator that combines pointwise.
MatrixField combine(const std::vector<MatrixField>& fields, Eigen::Index rows,
                    Eigen::Index cols,
                    std::function<Matrix(const std::vector<Matrix>&)> op) {
  bool piecewise = std::all_of(fields.begin(), fields.end(),
                               [](const MatrixField& f) { return f.is_piecewise(); });
  if (piecewise) {
    for (const auto& f : fields) {
      if (!f.family().same_support(fields.front().family())) piecewise = false;
    }
  }
  if (piecewise) {
    const auto& ref = fields.front().family();
    std::vector<Matrix> pieces;
    pieces.reserve(ref.size());
    std::vector<Matrix> args(fields.size());
    for (int i = 0; i < ref.size(); ++i) {
      for (std::size_t k = 0; k < fields.size(); ++k) args[k] = fields[k].family()[i];
      pieces.push_back(op(args));
    }
    if (ref.on_partition()) return ModeFamily(std::move(pieces), ref.breakpoints());
    return ModeFamily(std::move(pieces));
  }
  return MatrixField(rows, cols, [fields, op](double s) {
    std::vector<Matrix> args;
    args.reserve(fields.size());
    for (const auto& f : fields) args.push_back(f(s));
    return op(args);
  });
}

MatrixField zero_field(const ChainModel& chain, Eigen::Index r, Eigen::Index c) {
  if (const auto* fc = std::get_if<FiniteChain>(&chain)) {
    return MatrixField::constant(Matrix::Zero(r, c), fc->size());
  }
  return MatrixField::constant(Matrix::Zero(r, c));
}

Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

MjlsModel::MjlsModel(ChainModel chain, MatrixField a, MatrixField b,
                     MatrixField c, std::optional<MatrixField> d)
    : chain_(std::move(chain)),
      a_(std::move(a)),
      b_(std::move(b)),
      c_(std::move(c)) {
  const auto n = a_.rows();
  if (n == 0 || a_.cols() != n) throw InvalidInput("MjlsModel: A must be square and non-empty");
  if (b_.rows() != n) throw InvalidInput("MjlsModel: B must have n rows");
  if (c_.cols() != n) throw InvalidInput("MjlsModel: C must have n columns");
  if (d) {
    d_ = std::move(*d);
    if (d_.rows() != c_.rows() || d_.cols() != b_.cols()) {
      throw InvalidInput("MjlsModel: D must be r_out x r_in");
    }
  } else {
    d_ = zero_field(chain_, c_.rows(), b_.cols());
  }
  check_support(a_, chain_, "A");
  check_support(b_, chain_, "B");
  check_support(c_, chain_, "C");
  check_support(d_, chain_, "D");

  d_zero_ = true;
  for (double s : check_points()) {
    const Matrix dm = d_(s);
    const Matrix cm = c_(s);
    a_(s);
    b_(s);
    if (dm.size() > 0 && dm.cwiseAbs().maxCoeff() > 0.0) d_zero_ = false;
    if (dm.size() > 0 && cm.size() > 0) {
      const double cross = (cm.transpose() * dm).cwiseAbs().maxCoeff();
      if (cross > kCrossTol) {
        std::ostringstream os;
        os << "MjlsModel: C^T D = " << cross << " != 0 at state " << s;
        throw InvalidInput(os.str());
      }
    }
  }
}

MjlsModel MjlsModel::autonomous(ChainModel chain, MatrixField a) {
  const auto n = a.rows();
  auto b = zero_field(chain, n, 0);
  auto c = zero_field(chain, 0, n);
  return MjlsModel(std::move(chain), std::move(a), std::move(b), std::move(c));
}

const FiniteChain& MjlsModel::finite_chain() const {
  if (!is_finite()) throw PreconditionError("model is not on a finite chain");
  return std::get<FiniteChain>(chain_);
}

const KernelChain& MjlsModel::kernel_chain() const {
  if (is_finite()) throw PreconditionError("model is not on a kernel chain");
  return std::get<KernelChain>(chain_);
}

std::vector<double> MjlsModel::check_points(int mesh) const {
  std::vector<double> pts;
  if (is_finite()) {
    pts.resize(modes());
    std::iota(pts.begin(), pts.end(), 0.0);
    return pts;
  }
  const auto& kc = kernel_chain();
  for (int i = 0; i < mesh; ++i) {
    pts.push_back(kc.a() + (kc.b() - kc.a()) * i / std::max(1, mesh - 1));
  }
  for (const auto* f : {&a_, &b_, &c_, &d_}) {
    if (!f->is_piecewise()) continue;
    const auto& h = f->family().breakpoints();
    for (std::size_t i = 0; i + 1 < h.size(); ++i) pts.push_back(0.5 * (h[i] + h[i + 1]));
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

ModeFamily apply_E(const FiniteChain& chain, const ModeFamily& p) {
  if (p.on_partition() || p.size() != chain.size()) {
    throw InvalidInput("apply_E: family does not match the chain's modes");
  }
  std::vector<Matrix> out;
  out.reserve(chain.size());
  for (int i = 0; i < chain.size(); ++i) {
    Matrix acc = Matrix::Zero(p.rows(), p.cols());
    for (int j = 0; j < chain.size(); ++j) {
      if (chain.p(i, j) != 0.0) acc += chain.p(i, j) * p[j];
    }
    out.push_back(std::move(acc));
  }
  return ModeFamily(std::move(out));
}

std::vector<Matrix> apply_E(const KernelChain& chain, const ModeFamily& p,
                            std::span<const double> points) {
  if (!p.on_partition()) {
    throw InvalidInput("apply_E: kernel chains need P on a partition");
  }
  const auto& h = p.breakpoints();
  std::vector<double> mids;
  for (std::size_t i = 0; i + 1 < h.size(); ++i) mids.push_back(0.5 * (h[i] + h[i + 1]));
  const Grid grid(h, mids);
  std::vector<Matrix> out;
  out.reserve(points.size());
  for (double ell : points) {
    const Vector q = subinterval_masses(chain, grid, ell);
    Matrix acc = Matrix::Zero(p.rows(), p.cols());
    for (int j = 0; j < p.size(); ++j) acc += q[j] * p[j];
    out.push_back(std::move(acc));
  }
  return out;
}

namespace {

OperatorSuite suite_from(const MjlsModel& model, const std::vector<Matrix>& ep,
                         std::span<const double> states, double gamma,
                         double xi) {
  OperatorSuite s;
  const int r_in = model.inputs();
  for (std::size_t k = 0; k < states.size(); ++k) {
    const double st = states[k];
    const Matrix a = model.A(st), b = model.B(st), c = model.C(st), d = model.D(st);
    s.ta.push_back(sym(a.transpose() * ep[k] * a));
    s.tb.push_back(sym(b.transpose() * ep[k] * b));
    s.psi1.push_back(s.ta.back() + c.transpose() * c);
    s.psi2.push_back(a.transpose() * ep[k] * b);
    s.psi3.push_back(sym(gamma * Matrix::Identity(r_in, r_in) - s.tb.back() -
                         d.transpose() * d));
  }
  if (r_in == 0) {
    for (std::size_t k = 0; k < states.size(); ++k) s.f.emplace_back(0, model.n());
    return s;
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& m : s.psi3) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues().minCoeff());
    hi = std::max(hi, es.eigenvalues().maxCoeff());
  }
  if (!(lo >= xi) && !(hi <= -xi)) {
    std::ostringstream os;
    os << "Psi3 is not uniformly definite (eigenvalues in [" << lo << ", " << hi
       << "], margin " << xi << ")";
    throw GainUndefined(os.str());
  }
  for (std::size_t k = 0; k < states.size(); ++k) {
    s.f.push_back(-s.psi3[k].ldlt().solve(s.psi2[k].transpose()));
  }
  return s;
}

}  // namespace

OperatorSuite operator_suite(const MjlsModel& model, const ModeFamily& p,
                             double gamma, double xi) {
  const auto ep = apply_E(model.finite_chain(), p);
  std::vector<double> states(model.modes());
  std::iota(states.begin(), states.end(), 0.0);
  return suite_from(model, ep.pieces(), states, gamma, xi);
}

OperatorSuite operator_suite(const MjlsModel& model, const ModeFamily& p,
                             double gamma, std::span<const double> points,
                             double xi) {
  const auto ep = apply_E(model.kernel_chain(), p, points);
  return suite_from(model, ep, points, gamma, xi);
}

Trajectory simulate(const MjlsModel& model, const Vector& x0,
                    std::optional<double> theta0, const InputSource& input,
                    int horizon, RngStream& rng) {
  if (x0.size() != model.n()) throw InvalidInput("simulate: x0 has the wrong size");
  if (horizon < 0) throw InvalidInput("simulate: negative horizon");
  Trajectory tr;
  tr.horizon = horizon;
  tr.x.reserve(horizon + 1);
  tr.modes.reserve(horizon + 1);
  tr.x.push_back(x0);
  double th = theta0 ? *theta0 : sample_initial(model.chain(), rng);
  tr.modes.push_back(th);
  const Vector zero_v = Vector::Zero(model.inputs());
  for (int k = 0; k < horizon; ++k) {
    const Vector v = input ? input(k, rng) : zero_v;
    if (v.size() != model.inputs()) throw InvalidInput("simulate: input has the wrong size");
    const Vector& x = tr.x.back();
    tr.z.push_back(model.C(th) * x + model.D(th) * v);
    tr.v.push_back(v);
    Vector next = model.A(th) * x + model.B(th) * v;
    if (!next.allFinite()) {
      tr.diverged = true;
      tr.diverged_at = k + 1;
      break;
    }
    tr.x.push_back(std::move(next));
    th = sample_next(model.chain(), th, rng);
    tr.modes.push_back(th);
  }
  return tr;
}

EmssReport fit_emss(const Matrix& sq, RngStream& rng, int bootstrap) {
  EmssReport rep;
  rep.trials = static_cast<int>(sq.rows());
  rep.horizon = static_cast<int>(sq.cols()) - 1;
  if (sq.rows() == 0 || sq.cols() < 2) throw InvalidInput("fit_emss: need trials and at least two steps");
  if (!sq.allFinite()) {
    rep.diverged = true;
    rep.decay_slope = rep.ci_low = rep.ci_high = std::numeric_limits<double>::infinity();
    return rep;
  }
  const Vector mean = sq.colwise().mean();
  rep.mean_square.assign(mean.data(), mean.data() + mean.size());
  if (mean[0] == 0.0 && mean.maxCoeff() == 0.0) {
    rep.degenerate = true;
    warn("estimate_emss: every trajectory is zero from the start");
    return rep;
  }
  for (Eigen::Index k = 1; k < mean.size(); ++k) {
    if (mean[k] == 0.0) {
      rep.trivially_stable = true;
      rep.consistent_with_emss = true;
      rep.decay_slope = rep.ci_low = rep.ci_high = -std::numeric_limits<double>::infinity();
      return rep;
    }
  }
  const auto slope_of = [](const Vector& m) {
    const auto kk = m.size();
    const double kbar = 0.5 * static_cast<double>(kk - 1);
    double ybar = 0.0;
    for (Eigen::Index k = 0; k < kk; ++k) ybar += std::log(m[k]);
    ybar /= static_cast<double>(kk);
    double num = 0.0, den = 0.0;
    for (Eigen::Index k = 0; k < kk; ++k) {
      const double dk = static_cast<double>(k) - kbar;
      num += dk * (std::log(m[k]) - ybar);
      den += dk * dk;
    }
    return num / den;
  };
  rep.decay_slope = slope_of(mean);

  std::vector<double> boot;
  boot.reserve(bootstrap);
  std::uniform_int_distribution<Eigen::Index> pick(0, sq.rows() - 1);
  Vector m(sq.cols());
  for (int b = 0; b < bootstrap; ++b) {
    m.setZero();
    for (Eigen::Index t = 0; t < sq.rows(); ++t) m += sq.row(pick(rng.engine())).transpose();
    m /= static_cast<double>(sq.rows());
    if ((m.array() > 0.0).all()) boot.push_back(slope_of(m));
  }
  if (boot.empty()) {
    rep.ci_low = rep.ci_high = rep.decay_slope;
  } else {
    std::sort(boot.begin(), boot.end());
    const auto q = [&](double p) {
      const double pos = p * static_cast<double>(boot.size() - 1);
      const auto i = static_cast<std::size_t>(std::floor(pos));
      const auto j = std::min(i + 1, boot.size() - 1);
      return boot[i] + (pos - static_cast<double>(i)) * (boot[j] - boot[i]);
    };
    rep.ci_low = q(0.025);
    rep.ci_high = q(0.975);
  }
  rep.consistent_with_emss = rep.ci_high < 0.0;
  return rep;
}

EmssReport estimate_emss(const MjlsModel& model, int trials, int horizon,
                         RngStream& rng, std::optional<Vector> x0,
                         int bootstrap) {
  if (trials < 1 || horizon < 1) throw InvalidInput("estimate_emss: need trials >= 1 and horizon >= 1");
  const Vector start =
      x0 ? *x0 : Vector(Vector::Ones(model.n()) / std::sqrt(static_cast<double>(model.n())));
  Matrix sq(trials, horizon + 1);
  for (int t = 0; t < trials; ++t) {
    auto sub = rng.substream("emss", static_cast<std::uint64_t>(t));
    const auto tr = simulate(model, start, std::nullopt, {}, horizon, sub);
    for (int k = 0; k <= horizon; ++k) {
      sq(t, k) = k < static_cast<int>(tr.x.size())
                     ? tr.x[k].squaredNorm()
                     : std::numeric_limits<double>::infinity();
    }
  }
  auto boot_rng = rng.substream("emss-bootstrap", 0);
  return fit_emss(sq, boot_rng, bootstrap);
}

double spectral_radius_LA(const MjlsModel& model) {
  const auto& chain = model.finite_chain();
  const int nm = chain.size();
  const int n = model.n();
  const int n2 = n * n;
  std::vector<Matrix> a(nm);
  for (int i = 0; i < nm; ++i) a[i] = model.A(i);

  if (nm * n2 <= kDenseLiftLimit) {
    Matrix lift = Matrix::Zero(nm * n2, nm * n2);
    for (int i = 0; i < nm; ++i) {
      const Matrix k = Eigen::kroneckerProduct(a[i], a[i]);
      for (int j = 0; j < nm; ++j) {
        if (chain.p(i, j) != 0.0) lift.block(i * n2, j * n2, n2, n2) = chain.p(i, j) * k;
      }
    }
    Eigen::EigenSolver<Matrix> es(lift, false);
    if (es.info() != Eigen::Success) throw VerificationFailure("spectral_radius_LA: eigensolver failed");
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }

  // L(P)(j) = sum_i p_ij A_i P_i A_i^T maps PSD to PSD, so power iteration
  // from the all-ones state converges to the Perron root.
  std::vector<Matrix> p(nm, Matrix::Ones(n, n));
  const auto norm = [](const std::vector<Matrix>& v) {
    double s = 0.0;
    for (const auto& m : v) s += m.squaredNorm();
    return std::sqrt(s);
  };
  double prev = 0.0, rho = 0.0;
  for (int it = 0; it < 20000; ++it) {
    std::vector<Matrix> next(nm, Matrix::Zero(n, n));
    for (int i = 0; i < nm; ++i) {
      const Matrix t = a[i] * p[i] * a[i].transpose();
      for (int j = 0; j < nm; ++j) {
        if (chain.p(i, j) != 0.0) next[j] += chain.p(i, j) * t;
      }
    }
    const double nn = norm(next);
    const double np = norm(p);
    if (nn == 0.0) return 0.0;
    rho = nn / np;
    for (auto& m : next) m /= nn;
    p = std::move(next);
    if (it > 10 && std::abs(rho - prev) <= 1e-12 * std::max(1.0, rho)) break;
    prev = rho;
  }
  return rho;
}

MjlsModel build_interconnection(const MjlsModel& s1, const MjlsModel& s2) {
  if (!same_chain(s1.chain(), s2.chain())) {
    throw InvalidInput("build_interconnection: systems are on different chains");
  }
  if (!s1.d_is_zero()) throw InvalidInput("build_interconnection: sys1 must have D = 0");
  if (s2.inputs() != s1.outputs() || s2.outputs() != s1.inputs()) {
    throw InvalidInput("build_interconnection: sys2 must map z1 to v1");
  }
  const auto n1 = s1.n(), n2 = s2.n();
  const auto op = [n1, n2](const std::vector<Matrix>& m) {
    const Matrix &a1 = m[0], &b1 = m[1], &c1 = m[2], &a2 = m[3], &b2 = m[4],
                 &c2 = m[5], &d2 = m[6];
    Matrix out(n1 + n2, n1 + n2);
    out.topLeftCorner(n1, n1) = a1 + b1 * d2 * c1;
    out.topRightCorner(n1, n2) = b1 * c2;
    out.bottomLeftCorner(n2, n1) = b2 * c1;
    out.bottomRightCorner(n2, n2) = a2;
    return out;
  };
  auto a = combine({s1.a_field(), s1.b_field(), s1.c_field(), s2.a_field(),
                    s2.b_field(), s2.c_field(), s2.d_field()},
                   n1 + n2, n1 + n2, op);
  return MjlsModel::autonomous(s1.chain(), std::move(a));
}

MjlsModel close_uncertain_loop(const MjlsModel& model, const MatrixField& delta) {
  if (delta.rows() != model.inputs() || delta.cols() != model.outputs()) {
    throw InvalidInput("close_uncertain_loop: Delta must be r_in x r_out");
  }
  const auto n = model.n();
  auto a = combine({model.a_field(), model.b_field(), model.c_field(), delta}, n, n,
                   [](const std::vector<Matrix>& m) { return Matrix(m[0] + m[1] * m[3] * m[2]); });
  return MjlsModel::autonomous(model.chain(), std::move(a));
}

PerformanceEstimate eval_performance(const MjlsModel& model, double gamma,
                                     const Vector& x0,
                                     std::optional<double> theta0,
                                     const InputSource& input, int horizon,
                                     int trials, RngStream& rng) {
  if (trials < 1) throw InvalidInput("eval_performance: need at least one trial");
  if (model.is_finite()) {
    const auto closed = MjlsModel::autonomous(model.chain(), model.a_field());
    if (spectral_radius_LA(closed) >= 1.0) {
      warn("eval_performance: model is not internally mean-square stable");
    }
  }
  std::vector<double> vals;
  vals.reserve(trials);
  for (int t = 0; t < trials; ++t) {
    auto sub = rng.substream("performance", static_cast<std::uint64_t>(t));
    const auto tr = simulate(model, x0, theta0, input, horizon, sub);
    double j = 0.0;
    for (std::size_t k = 0; k < tr.z.size(); ++k) {
      j += tr.z[k].squaredNorm() - gamma * tr.v[k].squaredNorm();
    }
    if (tr.diverged) j = std::numeric_limits<double>::infinity();
    vals.push_back(j);
  }
  PerformanceEstimate est;
  est.trials = trials;
  est.mean = std::accumulate(vals.begin(), vals.end(), 0.0) / trials;
  double var = 0.0;
  for (double v : vals) var += (v - est.mean) * (v - est.mean);
  est.std_error = trials > 1 ? std::sqrt(var / (trials - 1) / trials) : 0.0;
  return est;
}

}  // namespace mjrobust
