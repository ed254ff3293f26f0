#include "mjrobust/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "mjrobust/error.hpp"

namespace mjrobust::sdp {

namespace {

struct Full {
  int r, c;
  double v;
};

struct Term {
  int var;
  std::vector<Full> full;  // both triangles
};

struct Prepared {
  int dim;
  Matrix c;
  std::vector<Term> terms;
};

std::vector<Full> expand(const std::vector<Entry>& entries) {
  std::vector<Full> out;
  out.reserve(2 * entries.size());
  for (const auto& e : entries) {
    out.push_back({e.row, e.col, e.value});
    if (e.row != e.col) out.push_back({e.col, e.row, e.value});
  }
  return out;
}

std::vector<Prepared> prepare(const Problem& p) {
  if (p.b.size() != p.m) throw InvalidInput("sdp: b has the wrong size");
  std::vector<Prepared> out;
  out.reserve(p.blocks.size());
  for (const auto& blk : p.blocks) {
    if (blk.dim < 1) throw InvalidInput("sdp: empty block");
    const auto check = [&](const Entry& e) {
      if (e.row < 0 || e.col < e.row || e.col >= blk.dim) {
        throw InvalidInput("sdp: entry outside the upper triangle of its block");
      }
      if (!std::isfinite(e.value)) throw InvalidInput("sdp: non-finite data");
    };
    for (const auto& e : blk.c) check(e);
    Prepared pr;
    pr.dim = blk.dim;
    pr.c = to_dense(blk.dim, blk.c);
    std::map<int, std::vector<Entry>> merged;
    for (const auto& [k, entries] : blk.a) {
      if (k < 0 || k >= p.m) throw InvalidInput("sdp: variable index out of range");
      for (const auto& e : entries) check(e);
      auto& dst = merged[k];
      dst.insert(dst.end(), entries.begin(), entries.end());
    }
    for (auto& [k, entries] : merged) {
      // coalesce duplicates
      std::map<std::pair<int, int>, double> acc;
      for (const auto& e : entries) acc[{e.row, e.col}] += e.value;
      std::vector<Entry> clean;
      for (const auto& [rc, v] : acc) {
        if (v != 0.0) clean.push_back({rc.first, rc.second, v});
      }
      if (!clean.empty()) pr.terms.push_back({k, expand(clean)});
    }
    out.push_back(std::move(pr));
  }
  return out;
}

// <A_k, G> for every k (G need not be symmetric).
void apply_A(const std::vector<Prepared>& blocks, const std::vector<Matrix>& g,
             Vector& out) {
  out.setZero();
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    for (const auto& t : blocks[j].terms) {
      double s = 0.0;
      for (const auto& f : t.full) s += f.v * g[j](f.r, f.c);
      out[t.var] += s;
    }
  }
}

Matrix apply_At(const Prepared& blk, const Vector& y) {
  Matrix s = Matrix::Zero(blk.dim, blk.dim);
  for (const auto& t : blk.terms) {
    const double yk = y[t.var];
    if (yk == 0.0) continue;
    for (const auto& f : t.full) s(f.r, f.c) += yk * f.v;
  }
  return s;
}

Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Largest step a in (0, inf] with X + a dX >= 0, given the Cholesky factor
// of X.
double max_step(const Eigen::LLT<Matrix>& llt, const Matrix& dx) {
  Matrix w = llt.matrixL().solve(dx);
  w = llt.matrixL().solve(w.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(w), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

}  // namespace

const char* to_string(Status s) {
  switch (s) {
    case Status::kOptimal: return "optimal";
    case Status::kStopped: return "stopped";
    case Status::kMaxIterations: return "max-iterations";
    case Status::kNumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

Matrix to_dense(int dim, const std::vector<Entry>& entries) {
  Matrix m = Matrix::Zero(dim, dim);
  for (const auto& e : entries) {
    m(e.row, e.col) += e.value;
    if (e.row != e.col) m(e.col, e.row) += e.value;
  }
  return m;
}

Result solve(const Problem& problem, const Options& opt) {
  const auto blocks = prepare(problem);
  const int m = problem.m;
  const Vector& b = problem.b;
  const std::size_t nb = blocks.size();
  double ntot = 0.0;
  for (const auto& blk : blocks) ntot += blk.dim;

  // starting point
  std::vector<Matrix> x(nb), z(nb);
  double cnorm = 0.0;
  for (std::size_t j = 0; j < nb; ++j) {
    const int d = blocks[j].dim;
    const double sd = std::sqrt(static_cast<double>(d));
    double amax = 0.0, ratio = 0.0;
    for (const auto& t : blocks[j].terms) {
      double fn = 0.0;
      for (const auto& f : t.full) fn += f.v * f.v;
      fn = std::sqrt(fn);
      amax = std::max(amax, fn);
      ratio = std::max(ratio, (1.0 + std::abs(b[t.var])) / (1.0 + fn));
    }
    const double cn = blocks[j].c.norm();
    cnorm += cn * cn;
    const double xi = std::max({10.0, sd, d * ratio});
    const double eta = std::max({10.0, sd, (1.0 + std::max(amax, cn)) / sd});
    x[j] = xi * Matrix::Identity(d, d);
    z[j] = eta * Matrix::Identity(d, d);
  }
  cnorm = std::sqrt(cnorm);
  Vector y = Vector::Zero(m);

  Result res;
  Vector ax(m), tmp(m);
  std::vector<Matrix> rd(nb), zinv(nb), g(nb);
  std::vector<Eigen::LLT<Matrix>> xllt(nb), zllt(nb);
  int stalls = 0;

  for (int iter = 0; iter <= opt.max_iterations; ++iter) {
    bool ok = true;
    double pobj = 0.0, gap = 0.0, rdn = 0.0;
    for (std::size_t j = 0; j < nb && ok; ++j) {
      xllt[j].compute(x[j]);
      zllt[j].compute(z[j]);
      if (xllt[j].info() != Eigen::Success || zllt[j].info() != Eigen::Success) {
        ok = false;
        break;
      }
      zinv[j] = zllt[j].solve(Matrix::Identity(blocks[j].dim, blocks[j].dim));
      zinv[j] = sym(zinv[j]);
      rd[j] = blocks[j].c - z[j] - apply_At(blocks[j], y);
      rdn += rd[j].squaredNorm();
      pobj += (blocks[j].c.cwiseProduct(x[j])).sum();
      gap += (x[j].cwiseProduct(z[j])).sum();
    }
    if (!ok) {
      res.status = Status::kNumericalFailure;
      res.message = "iterate lost positive definiteness";
      break;
    }
    apply_A(blocks, x, ax);
    const Vector rp = b - ax;
    const double dobj = b.dot(y);
    IterRecord rec;
    rec.iter = iter;
    rec.pobj = pobj;
    rec.dobj = dobj;
    rec.pinf = rp.norm() / (1.0 + b.norm());
    rec.dinf = std::sqrt(rdn) / (1.0 + cnorm);
    rec.relgap = std::max(gap, std::abs(pobj - dobj)) /
                 (1.0 + std::abs(pobj) + std::abs(dobj));
    res.x = x;
    res.z = z;
    res.y = y;
    res.pobj = pobj;
    res.dobj = dobj;
    res.iterations = iter;

    if (opt.stop && opt.stop(y, rec)) {
      res.trace.push_back(rec);
      res.status = Status::kStopped;
      return res;
    }
    if (rec.relgap <= opt.tol && rec.pinf <= opt.tol && rec.dinf <= opt.tol) {
      res.trace.push_back(rec);
      res.status = Status::kOptimal;
      return res;
    }
    if (iter == opt.max_iterations) {
      res.trace.push_back(rec);
      res.status = Status::kMaxIterations;
      res.message = "iteration limit reached";
      return res;
    }
    const double mu = gap / ntot;

    // Schur complement M_ij = tr(A_i X A_j Z^{-1})
    Matrix mm = Matrix::Zero(m, m);
    for (std::size_t j = 0; j < nb; ++j) {
      const auto& terms = blocks[j].terms;
      const Matrix& xj = x[j];
      const Matrix& zi = zinv[j];
      for (std::size_t p = 0; p < terms.size(); ++p) {
        for (std::size_t q = p; q < terms.size(); ++q) {
          double s = 0.0;
          for (const auto& e1 : terms[p].full) {
            for (const auto& e2 : terms[q].full) {
              s += e1.v * e2.v * xj(e1.c, e2.r) * zi(e2.c, e1.r);
            }
          }
          mm(terms[p].var, terms[q].var) += s;
          if (q != p) mm(terms[q].var, terms[p].var) += s;
        }
      }
    }
    Eigen::LLT<Matrix> mllt(mm);
    if (mllt.info() != Eigen::Success) {
      const double reg = 1e-14 * std::max(1.0, mm.diagonal().cwiseAbs().maxCoeff());
      mm.diagonal().array() += reg;
      mllt.compute(mm);
      if (mllt.info() != Eigen::Success) {
        res.trace.push_back(rec);
        res.status = Status::kNumericalFailure;
        res.message = "Schur complement is not positive definite";
        return res;
      }
    }

    // A(X Rd Z^{-1})
    for (std::size_t j = 0; j < nb; ++j) g[j] = x[j] * rd[j] * zinv[j];
    Vector axrz(m);
    apply_A(blocks, g, axrz);

    const auto direction = [&](const std::vector<Matrix>& rc, Vector& dy,
                               std::vector<Matrix>& dx, std::vector<Matrix>& dz) {
      apply_A(blocks, rc, tmp);
      Vector h = b - ax - tmp + axrz;
      dy = mllt.solve(h);
      for (std::size_t j = 0; j < nb; ++j) {
        dz[j] = rd[j] - apply_At(blocks[j], dy);
        dx[j] = rc[j] - sym(x[j] * dz[j] * zinv[j]);
      }
    };
    const auto steps = [&](const std::vector<Matrix>& dx,
                           const std::vector<Matrix>& dz) {
      double ap = std::numeric_limits<double>::infinity();
      double ad = ap;
      for (std::size_t j = 0; j < nb; ++j) {
        ap = std::min(ap, max_step(xllt[j], dx[j]));
        ad = std::min(ad, max_step(zllt[j], dz[j]));
      }
      return std::pair{ap, ad};
    };

    // predictor
    std::vector<Matrix> rc(nb), dx(nb), dz(nb);
    Vector dy(m);
    for (std::size_t j = 0; j < nb; ++j) rc[j] = -x[j];
    direction(rc, dy, dx, dz);
    auto [ap, ad] = steps(dx, dz);
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    double gap_aff = 0.0;
    for (std::size_t j = 0; j < nb; ++j) {
      gap_aff += ((x[j] + ap * dx[j]).cwiseProduct(z[j] + ad * dz[j])).sum();
    }
    const double expon = std::max(1.0, 3.0 * std::min(ap, ad) * std::min(ap, ad));
    const double sigma = std::min(1.0, std::pow(std::max(gap_aff, 0.0) / gap, expon));

    // corrector
    for (std::size_t j = 0; j < nb; ++j) {
      rc[j] = sigma * mu * zinv[j] - x[j] - sym(dx[j] * dz[j] * zinv[j]);
    }
    direction(rc, dy, dx, dz);
    std::tie(ap, ad) = steps(dx, dz);
    const double tau = 0.9 + 0.09 * std::min({ap, ad, 1.0});
    const double step_p = std::min(1.0, tau * ap);
    const double step_d = std::min(1.0, tau * ad);
    for (std::size_t j = 0; j < nb; ++j) {
      x[j] = sym(x[j] + step_p * dx[j]);
      z[j] = sym(z[j] + step_d * dz[j]);
    }
    y += step_d * dy;
    rec.step_p = step_p;
    rec.step_d = step_d;
    res.trace.push_back(rec);
    if (!y.allFinite()) {
      res.status = Status::kNumericalFailure;
      res.message = "non-finite iterate";
      return res;
    }
    stalls = (std::max(step_p, step_d) < 1e-8) ? stalls + 1 : 0;
    if (stalls >= 3) {
      res.status = Status::kNumericalFailure;
      res.message = "step length stalled";
      return res;
    }
  }
  return res;
}

}  // namespace mjrobust::sdp
