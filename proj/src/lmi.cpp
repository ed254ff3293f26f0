#include "mjrobust/lmi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "mjrobust/error.hpp"

namespace mjrobust {

namespace {

constexpr double kTraceCapPerEntry = 1e4;

Matrix eye(int n) { return Matrix::Identity(n, n); }

}  // namespace

const char* to_string(LmiSource s) {
  switch (s) {
    case LmiSource::kFiniteBrl: return "finite-brl";
    case LmiSource::kGriddingPi1: return "gridding-pi1";
    case LmiSource::kCustom: return "custom";
  }
  return "custom";
}

LmiSource lmi_source_from_string(const std::string& s) {
  if (s == "finite-brl") return LmiSource::kFiniteBrl;
  if (s == "gridding-pi1") return LmiSource::kGriddingPi1;
  if (s == "custom") return LmiSource::kCustom;
  throw InvalidInput("unknown LMI source '" + s + "'");
}

const char* to_string(FeasibilityStatus s) {
  switch (s) {
    case FeasibilityStatus::kCertified: return "certified";
    case FeasibilityStatus::kInfeasible: return "infeasible";
    case FeasibilityStatus::kUnbounded: return "unbounded";
    case FeasibilityStatus::kSolverFailure: return "solver-failure";
  }
  return "solver-failure";
}

// ---------------------------------------------------------------- LmiSystem

int LmiSystem::add_group(std::string name, VarKind kind, int n) {
  if (n < 1) throw InvalidInput("LmiSystem: variable size must be positive");
  if (kind == VarKind::kScalar) n = 1;
  const int count = kind == VarKind::kSymmetric ? n * (n + 1) / 2
                    : kind == VarKind::kGeneral ? n * n
                                                : 1;
  groups_.push_back({std::move(name), kind, n, unknowns_, count});
  unknowns_ += count;
  return static_cast<int>(groups_.size()) - 1;
}

int LmiSystem::add_block(std::string label, std::vector<int> row_sizes) {
  Block b;
  b.label = std::move(label);
  b.offsets.reserve(row_sizes.size());
  for (int s : row_sizes) {
    if (s < 0) throw InvalidInput("LmiSystem: negative block row size");
    b.offsets.push_back(b.dim);
    b.dim += s;
  }
  if (b.dim == 0) throw InvalidInput("LmiSystem: empty block");
  b.row_sizes = std::move(row_sizes);
  blocks_.push_back(std::move(b));
  return static_cast<int>(blocks_.size()) - 1;
}

int LmiSystem::find_group(const std::string& name) const {
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    if (groups_[g].name == name) return static_cast<int>(g);
  }
  throw InvalidInput("LmiSystem: no variable named '" + name + "'");
}

void LmiSystem::add_entries(Block& blk, int bi, int bj, int row_off,
                            int col_off, const Matrix& m,
                            std::vector<sdp::Entry>& out) const {
  if (bi < 0 || bj < 0 || bi >= static_cast<int>(blk.row_sizes.size()) ||
      bj >= static_cast<int>(blk.row_sizes.size())) {
    throw InvalidInput("LmiSystem: block row out of range");
  }
  if (m.size() == 0) return;
  if (row_off + m.rows() > blk.row_sizes[bi] ||
      col_off + m.cols() > blk.row_sizes[bj]) {
    std::ostringstream os;
    os << "LmiSystem: " << m.rows() << "x" << m.cols()
       << " term does not fit at (" << bi << ", " << bj << ") of " << blk.label;
    throw InvalidInput(os.str());
  }
  const int r0 = blk.offsets[bi] + row_off;
  const int c0 = blk.offsets[bj] + col_off;
  if (r0 == c0) {
    if (m.rows() != m.cols()) throw InvalidInput("LmiSystem: diagonal term must be square");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw InvalidInput("LmiSystem: diagonal term must be symmetric");
    }
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = r; c < m.cols(); ++c) {
        if (m(r, c) != 0.0) {
          out.push_back({r0 + static_cast<int>(r), c0 + static_cast<int>(c), m(r, c)});
        }
      }
    }
    return;
  }
  if (r0 + m.rows() > c0) {
    throw InvalidInput("LmiSystem: off-diagonal term must lie above the diagonal");
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (m(r, c) != 0.0) {
        out.push_back({r0 + static_cast<int>(r), c0 + static_cast<int>(c), m(r, c)});
      }
    }
  }
}

void LmiSystem::place_constant(int block, int bi, int bj, const Matrix& m,
                               int row_off, int col_off) {
  auto& blk = blocks_.at(block);
  add_entries(blk, bi, bj, row_off, col_off, m, blk.constant);
}

void LmiSystem::place(int block, int bi, int bj, int group, const Map& map,
                      int row_off, int col_off) {
  auto& blk = blocks_.at(block);
  const auto& g = groups_.at(group);
  for (int k = 0; k < g.count; ++k) {
    const Matrix m = map(basis(group, k));
    std::vector<sdp::Entry> entries;
    add_entries(blk, bi, bj, row_off, col_off, m, entries);
    if (!entries.empty()) blk.terms.emplace_back(g.offset + k, std::move(entries));
  }
}

Matrix LmiSystem::basis(int group, int k) const {
  const auto& g = groups_.at(group);
  if (k < 0 || k >= g.count) throw InvalidInput("LmiSystem: basis index out of range");
  Matrix e = Matrix::Zero(g.n, g.n);
  switch (g.kind) {
    case VarKind::kScalar:
      e(0, 0) = 1.0;
      break;
    case VarKind::kGeneral:
      e(k / g.n, k % g.n) = 1.0;
      break;
    case VarKind::kSymmetric: {
      int idx = 0;
      for (int i = 0; i < g.n; ++i) {
        for (int j = i; j < g.n; ++j, ++idx) {
          if (idx == k) {
            e(i, j) = 1.0;
            e(j, i) = 1.0;
          }
        }
      }
      break;
    }
  }
  return e;
}

Matrix LmiSystem::group_value(int group, const Vector& values) const {
  const auto& g = groups_.at(group);
  if (values.size() != unknowns_) throw InvalidInput("LmiSystem: value vector has the wrong size");
  Matrix v = Matrix::Zero(g.n, g.n);
  switch (g.kind) {
    case VarKind::kScalar:
      v(0, 0) = values[g.offset];
      break;
    case VarKind::kGeneral:
      for (int k = 0; k < g.count; ++k) v(k / g.n, k % g.n) = values[g.offset + k];
      break;
    case VarKind::kSymmetric: {
      int idx = 0;
      for (int i = 0; i < g.n; ++i) {
        for (int j = i; j < g.n; ++j, ++idx) {
          v(i, j) = values[g.offset + idx];
          v(j, i) = values[g.offset + idx];
        }
      }
      break;
    }
  }
  return v;
}

void LmiSystem::pack(int group, const Matrix& value, Vector& values) const {
  const auto& g = groups_.at(group);
  if (values.size() != unknowns_) values = Vector::Zero(unknowns_);
  if (value.rows() != g.n || value.cols() != g.n) {
    throw InvalidInput("LmiSystem: value for '" + g.name + "' has the wrong shape");
  }
  switch (g.kind) {
    case VarKind::kScalar:
      values[g.offset] = value(0, 0);
      break;
    case VarKind::kGeneral:
      for (int k = 0; k < g.count; ++k) values[g.offset + k] = value(k / g.n, k % g.n);
      break;
    case VarKind::kSymmetric: {
      int idx = 0;
      for (int i = 0; i < g.n; ++i) {
        for (int j = i; j < g.n; ++j, ++idx) {
          values[g.offset + idx] = 0.5 * (value(i, j) + value(j, i));
        }
      }
      break;
    }
  }
}

Matrix LmiSystem::evaluate(int block, const Vector& values) const {
  const auto& blk = blocks_.at(block);
  if (values.size() != unknowns_) throw InvalidInput("LmiSystem: value vector has the wrong size");
  Matrix f = sdp::to_dense(blk.dim, blk.constant);
  for (const auto& [k, entries] : blk.terms) {
    const double y = values[k];
    if (y == 0.0) continue;
    for (const auto& e : entries) {
      f(e.row, e.col) += y * e.value;
      if (e.row != e.col) f(e.col, e.row) += y * e.value;
    }
  }
  return f;
}

std::vector<double> LmiSystem::block_margins(const Vector& values) const {
  std::vector<double> out;
  out.reserve(blocks_.size());
  for (int b = 0; b < num_blocks(); ++b) out.push_back(min_eig(evaluate(b, values)));
  return out;
}

double LmiSystem::min_margin(const Vector& values) const {
  const auto m = block_margins(values);
  return m.empty() ? std::numeric_limits<double>::infinity()
                   : *std::min_element(m.begin(), m.end());
}

// ---------------------------------------------------------------- solving

namespace {

Certificate extract(const LmiSystem& sys, const Vector& values) {
  Certificate c;
  c.source = sys.source();
  c.gamma = sys.gamma;
  c.values = values;
  for (int g : sys.p_groups) c.p.push_back(sys.group_value(g, values));
  for (int g : sys.x_groups) {
    c.x.push_back(sys.group_value(g, values));
    c.x_sym_min_eig.push_back(min_eig(Matrix(c.x.back() + c.x.back().transpose())));
  }
  const auto scalars = [&](const std::vector<int>& gs) {
    Vector v(static_cast<Eigen::Index>(gs.size()));
    for (std::size_t i = 0; i < gs.size(); ++i) v[i] = sys.group_value(gs[i], values)(0, 0);
    return v;
  };
  c.alpha = scalars(sys.alpha_groups);
  c.beta = scalars(sys.beta_groups);
  c.rho = scalars(sys.rho_groups);
  return c;
}

}  // namespace

Vector pack_certificate(const LmiSystem& sys, const Certificate& cert) {
  Vector values = Vector::Zero(sys.num_unknowns());
  if (cert.p.size() != sys.p_groups.size() || cert.x.size() != sys.x_groups.size() ||
      cert.alpha.size() != static_cast<Eigen::Index>(sys.alpha_groups.size()) ||
      cert.beta.size() != static_cast<Eigen::Index>(sys.beta_groups.size()) ||
      cert.rho.size() != static_cast<Eigen::Index>(sys.rho_groups.size())) {
    throw InvalidInput("certificate does not match the LMI layout");
  }
  for (std::size_t i = 0; i < cert.p.size(); ++i) sys.pack(sys.p_groups[i], cert.p[i], values);
  for (std::size_t i = 0; i < cert.x.size(); ++i) sys.pack(sys.x_groups[i], cert.x[i], values);
  const auto put = [&](const std::vector<int>& gs, const Vector& v) {
    for (std::size_t i = 0; i < gs.size(); ++i) {
      sys.pack(gs[i], Matrix::Constant(1, 1, v[static_cast<Eigen::Index>(i)]), values);
    }
  };
  put(sys.alpha_groups, cert.alpha);
  put(sys.beta_groups, cert.beta);
  put(sys.rho_groups, cert.rho);
  return values;
}

FeasibilityResult solve_feasibility(const LmiSystem& sys, const SolveOptions& opt) {
  if (sys.num_blocks() == 0) throw InvalidInput("solve_feasibility: no constraint blocks");
  const int m = sys.num_unknowns();
  const int t_index = m;
  sdp::Problem prob;
  prob.m = m + 1;
  prob.b = Vector::Zero(m + 1);
  prob.b[t_index] = 1.0;

  for (int bi = 0; bi < sys.num_blocks(); ++bi) {
    const auto& blk = sys.block(bi);
    sdp::Block sb;
    sb.dim = blk.dim;
    sb.c = blk.constant;
    for (const auto& [k, entries] : blk.terms) {
      std::vector<sdp::Entry> neg = entries;
      for (auto& e : neg) e.value = -e.value;
      sb.a.emplace_back(k, std::move(neg));
    }
    std::vector<sdp::Entry> id;
    id.reserve(blk.dim);
    for (int d = 0; d < blk.dim; ++d) id.push_back({d, d, 1.0});
    sb.a.emplace_back(t_index, std::move(id));
    prob.blocks.push_back(std::move(sb));
  }
  const auto bound = opt.variable_bound ? opt.variable_bound : sys.variable_bound;
  if (bound) {
    for (int k = 0; k < m; ++k) {
      prob.blocks.push_back({1, {{0, 0, *bound}}, {{k, {{0, 0, 1.0}}}}});
      prob.blocks.push_back({1, {{0, 0, *bound}}, {{k, {{0, 0, -1.0}}}}});
    }
  }
  const auto cap = opt.trace_cap ? opt.trace_cap : sys.trace_cap;
  if (cap && !sys.p_groups.empty()) {
    sdp::Block tb;
    tb.dim = 1;
    tb.c = {{0, 0, *cap}};
    for (int g : sys.p_groups) {
      const auto& grp = sys.groups()[g];
      for (int k = 0; k < grp.count; ++k) {
        const double tr = sys.basis(g, k).trace();
        if (tr != 0.0) tb.a.push_back({grp.offset + k, {{0, 0, tr}}});
      }
    }
    prob.blocks.push_back(std::move(tb));
  }
  prob.blocks.push_back({1, {{0, 0, opt.t_cap}}, {{t_index, {{0, 0, 1.0}}}}});

  bool declared_infeasible = false;
  sdp::Options so;
  so.tol = opt.tol;
  so.max_iterations = opt.max_iterations;
  so.stop = [&](const Vector& y, const sdp::IterRecord& rec) {
    if (rec.pinf <= 1e-7 && rec.dinf <= 1e-7 &&
        rec.pobj < opt.min_margin - 1e-3 * (1.0 + std::abs(rec.pobj))) {
      declared_infeasible = true;
      return true;
    }
    if (!opt.early_stop || y[t_index] < opt.min_margin) return false;
    const Vector v = y.head(m);
    for (int bi = 0; bi < sys.num_blocks(); ++bi) {
      Matrix f = sys.evaluate(bi, v);
      f.diagonal().array() -= opt.min_margin;
      Eigen::LLT<Matrix> llt(f);
      if (llt.info() != Eigen::Success) return false;
    }
    return true;
  };

  const auto res = sdp::solve(prob, so);
  FeasibilityResult out;
  out.trace = res.trace;
  out.iterations = res.iterations;
  if (res.y.size() != m + 1) {
    out.status = FeasibilityStatus::kSolverFailure;
    out.margin = -std::numeric_limits<double>::infinity();
    out.message = res.message.empty() ? "solver produced no iterate" : res.message;
    return out;
  }
  const Vector values = res.y.head(m);
  out.solver_t = res.y[t_index];
  out.block_margins = sys.block_margins(values);
  out.margin = *std::min_element(out.block_margins.begin(), out.block_margins.end());

  std::ostringstream msg;
  msg << "solver " << sdp::to_string(res.status) << " after " << res.iterations
      << " iterations, t = " << out.solver_t << ", replayed margin = " << out.margin;
  if (!res.message.empty()) msg << " (" << res.message << ")";
  out.message = msg.str();

  if (out.solver_t >= 0.5 * opt.t_cap) {
    out.status = FeasibilityStatus::kUnbounded;
    out.message += "; margin is unbounded, the system is degenerate";
    return out;
  }
  if (out.margin >= opt.min_margin) {
    out.status = FeasibilityStatus::kCertified;
    Certificate c = extract(sys, values);
    c.margin = out.margin;
    c.solver_status = sdp::to_string(res.status);
    c.solver_iterations = res.iterations;
    c.solver_t = out.solver_t;
    out.certificate = std::move(c);
    return out;
  }
  if (declared_infeasible || res.status == sdp::Status::kOptimal) {
    out.status = FeasibilityStatus::kInfeasible;
    return out;
  }
  out.status = FeasibilityStatus::kSolverFailure;
  std::ostringstream tr;
  tr << "; trace:";
  for (const auto& r : res.trace) {
    tr << " [" << r.iter << ": pobj " << r.pobj << ", dobj " << r.dobj << ", pinf "
       << r.pinf << ", dinf " << r.dinf << ", gap " << r.relgap << "]";
  }
  out.message += tr.str();
  return out;
}

// ---------------------------------------------------------------- assembly

LmiSystem assemble_finite_brl(const MjlsModel& model, double gamma) {
  if (!(gamma > 0.0)) throw InvalidInput("assemble_finite_brl: gamma must be positive");
  const auto& chain = model.finite_chain();
  const int nm = chain.size();
  const int n = model.n(), r_in = model.inputs(), r_out = model.outputs();
  LmiSystem sys(LmiSource::kFiniteBrl);
  sys.gamma = gamma;
  sys.trace_cap = kTraceCapPerEntry * n * nm;
  for (int i = 0; i < nm; ++i) {
    sys.p_groups.push_back(sys.add_group("P" + std::to_string(i), VarKind::kSymmetric, n));
  }
  for (int i = 0; i < nm; ++i) {
    const int b = sys.add_block("mode " + std::to_string(i), {n, r_out, n, r_in});
    const Matrix a = model.A(i), bm = model.B(i), c = model.C(i);
    for (int j = 0; j < nm; ++j) {
      const double pij = chain.p(i, j);
      if (pij == 0.0) continue;
      const int g = sys.p_groups[j];
      sys.place(b, 0, 0, g, [pij](const Matrix& v) { return Matrix(pij * v); });
      sys.place(b, 0, 2, g, [pij, &a](const Matrix& v) { return Matrix(pij * v * a); });
      if (r_in > 0) {
        sys.place(b, 0, 3, g, [pij, &bm](const Matrix& v) { return Matrix(pij * v * bm); });
      }
    }
    if (r_out > 0) {
      sys.place_constant(b, 1, 1, eye(r_out));
      sys.place_constant(b, 1, 2, c);
    }
    sys.place(b, 2, 2, sys.p_groups[i], [](const Matrix& v) { return v; });
    if (r_in > 0) sys.place_constant(b, 3, 3, gamma * eye(r_in));
  }
  return sys;
}

namespace {

void check_sigmas(const SigmaBounds& s, const Grid& grid) {
  const auto cells = grid.cells();
  for (const auto* v : {&s.a, &s.b, &s.c, &s.q}) {
    if (v->size() != cells) {
      throw InvalidInput("gridding: sigma bounds missing for some cells");
    }
    if (!((v->array() > 0.0).all()) || !v->allFinite()) {
      throw InvalidInput("gridding: sigma bounds must be positive and finite");
    }
  }
}

void check_grid(const MjlsModel& model, const Grid& grid) {
  const auto& kc = model.kernel_chain();
  const double tol = 1e-12 * std::max(1.0, kc.b() - kc.a());
  if (std::abs(grid.a() - kc.a()) > tol || std::abs(grid.b() - kc.b()) > tol) {
    throw InvalidInput("gridding: grid does not cover the chain's interval");
  }
}

}  // namespace

LmiSystem assemble_gridding(const MjlsModel& model, const Grid& grid,
                            const SigmaBounds& sigmas, double gamma) {
  if (!(gamma > 0.0)) throw InvalidInput("assemble_gridding: gamma must be positive");
  check_grid(model, grid);
  check_sigmas(sigmas, grid);
  const auto& chain = model.kernel_chain();
  const int nc = grid.cells();
  const int n = model.n(), rv = model.inputs(), rz = model.outputs();
  const int nn = n * nc;

  LmiSystem sys(LmiSource::kGriddingPi1);
  sys.gamma = gamma;
  sys.trace_cap = kTraceCapPerEntry * n * nc;
  for (int i = 0; i < nc; ++i) {
    sys.p_groups.push_back(sys.add_group("P" + std::to_string(i), VarKind::kSymmetric, n));
  }
  for (int i = 0; i < nc; ++i) {
    const std::string s = std::to_string(i);
    sys.x_groups.push_back(sys.add_group("X" + s, VarKind::kGeneral, n));
    sys.alpha_groups.push_back(sys.add_group("alpha" + s, VarKind::kScalar));
    sys.beta_groups.push_back(sys.add_group("beta" + s, VarKind::kScalar));
    sys.rho_groups.push_back(sys.add_group("rho" + s, VarKind::kScalar));
  }

  for (int i = 0; i < nc; ++i) {
    const double h = grid.sample(i);
    const Matrix a = model.A(h), bm = model.B(h), c = model.C(h);
    const Vector sq = sqrt_masses(chain, grid, h);
    const double sa = sigmas.a[i], sb = sigmas.b[i], sc = sigmas.c[i], sqq = sigmas.q[i];
    const int gx = sys.x_groups[i], ga = sys.alpha_groups[i], gb = sys.beta_groups[i],
              gr = sys.rho_groups[i];
    const int blk = sys.add_block("cell " + std::to_string(i),
                                  {n, rz, n, rv, nn, rz, n, n, n, rv, rv, nn, n, rz});
    const auto scaled_eye = [](double f, int d) {
      return [f, d](const Matrix& v) { return Matrix(f * v(0, 0) * eye(d)); };
    };

    // row 1
    sys.place(blk, 0, 0, gx, [](const Matrix& v) { return Matrix(v + v.transpose()); });
    sys.place(blk, 0, 2, gx, [&a](const Matrix& v) { return Matrix(v * a); });
    if (rv > 0) sys.place(blk, 0, 3, gx, [&bm](const Matrix& v) { return Matrix(v * bm); });
    for (int j = 0; j < nc; ++j) {
      const double w = sq[j];
      if (w != 0.0) {
        sys.place(blk, 0, 4, sys.p_groups[j], [w](const Matrix& v) { return Matrix(w * v); },
                  0, j * n);
      }
    }
    sys.place(blk, 0, 6, gx, [sa](const Matrix& v) { return Matrix(2.0 * sa * v); });
    sys.place(blk, 0, 8, gx, [sb](const Matrix& v) { return Matrix(sb * v); });
    sys.place(blk, 0, 12, gr, scaled_eye(1.0, n));
    // row 2
    if (rz > 0) {
      sys.place_constant(blk, 1, 1, eye(rz));
      sys.place_constant(blk, 1, 2, c);
      sys.place_constant(blk, 1, 5, 2.0 * sc * eye(rz));
      sys.place(blk, 1, 13, gr, scaled_eye(1.0, rz));
    }
    // rows 3-5
    sys.place(blk, 2, 2, sys.p_groups[i], [](const Matrix& v) { return v; });
    sys.place(blk, 2, 7, ga, scaled_eye(1.0, n));
    if (rv > 0) {
      sys.place_constant(blk, 3, 3, gamma * eye(rv));
      sys.place(blk, 3, 10, gb, scaled_eye(1.0, rv));
    }
    for (int j = 0; j < nc; ++j) {
      const int gp = sys.p_groups[j];
      sys.place(blk, 4, 4, gp, [](const Matrix& v) { return v; }, j * n, j * n);
      sys.place(blk, 4, 11, gp, [sqq](const Matrix& v) { return Matrix(sqq * v); }, j * n,
                j * n);
    }
    // diagonal rows 6-14
    if (rz > 0) sys.place(blk, 5, 5, ga, scaled_eye(2.0, rz));
    sys.place(blk, 6, 6, ga, scaled_eye(2.0, n));
    sys.place(blk, 7, 7, ga, scaled_eye(1.0, n));
    sys.place(blk, 8, 8, gb, scaled_eye(1.0, n));
    if (rv > 0) {
      sys.place(blk, 9, 9, gb, scaled_eye(1.0, rv));
      sys.place(blk, 10, 10, gb, scaled_eye(1.0, rv));
    }
    sys.place(blk, 11, 11, gr, scaled_eye(1.0, nn));
    sys.place(blk, 12, 12, gr, scaled_eye(1.0, n));
    if (rz > 0) sys.place(blk, 13, 13, gr, scaled_eye(1.0, rz));
  }
  return sys;
}

ReducedGridding::ReducedGridding(const MjlsModel& model, Grid grid,
                                 SigmaBounds sigmas, double gamma)
    : grid_(std::move(grid)),
      sigmas_(std::move(sigmas)),
      gamma_(gamma),
      n_(model.n()),
      r_in_(model.inputs()),
      r_out_(model.outputs()) {
  check_grid(model, grid_);
  check_sigmas(sigmas_, grid_);
  const auto& chain = model.kernel_chain();
  for (int i = 0; i < grid_.cells(); ++i) {
    const double h = grid_.sample(i);
    a_.push_back(model.A(h));
    b_.push_back(model.B(h));
    c_.push_back(model.C(h));
    sq_.push_back(sqrt_masses(chain, grid_, h));
  }
}

Matrix ReducedGridding::block(int i, const Certificate& cert) const {
  const int nc = grid_.cells();
  if (static_cast<int>(cert.p.size()) != nc || static_cast<int>(cert.x.size()) != nc ||
      cert.alpha.size() != nc || cert.beta.size() != nc || cert.rho.size() != nc) {
    throw InvalidInput("reduced gridding: certificate does not match the grid");
  }
  const double al = cert.alpha[i], be = cert.beta[i], rh = cert.rho[i];
  if (!(al > 0.0) || !(be > 0.0) || !(rh > 0.0)) {
    throw InvalidInput("reduced gridding: alpha, beta and rho must be positive");
  }
  const int n = n_, rz = r_out_, rv = r_in_, nn = n * nc;
  const double sa = sigmas_.a[i], sb = sigmas_.b[i], sc = sigmas_.c[i], sq = sigmas_.q[i];
  const Matrix& x = cert.x[i];

  Matrix ups = Matrix::Zero(nn, nn);
  Matrix qu(n, nn);
  for (int j = 0; j < nc; ++j) {
    ups.block(j * n, j * n, n, n) = cert.p[j];
    qu.block(0, j * n, n, n) = sq_[i][j] * cert.p[j];
  }
  const int o1 = 0, o2 = n, o3 = n + rz, o4 = 2 * n + rz, o5 = 2 * n + rz + rv;
  const int dim = o5 + nn;
  Matrix m = Matrix::Zero(dim, dim);
  m.block(o1, o1, n, n) = x + x.transpose() -
                          (2.0 * sa * sa / al + sb * sb / be) * x * x.transpose() -
                          rh * eye(n);
  m.block(o1, o3, n, n) = x * a_[i];
  m.block(o1, o4, n, rv) = x * b_[i];
  m.block(o1, o5, n, nn) = qu;
  m.block(o2, o2, rz, rz) = (1.0 - 2.0 * sc * sc / al - rh) * eye(rz);
  m.block(o2, o3, rz, n) = c_[i];
  m.block(o3, o3, n, n) = cert.p[i] - al * eye(n);
  m.block(o4, o4, rv, rv) = (gamma_ - be) * eye(rv);
  m.block(o5, o5, nn, nn) = ups - (sq * sq / rh) * ups * ups;
  m.triangularView<Eigen::StrictlyLower>() = m.transpose().triangularView<Eigen::StrictlyLower>();
  return m;
}

double ReducedGridding::min_margin(const Certificate& cert) const {
  double lo = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_.cells(); ++i) lo = std::min(lo, min_eig(block(i, cert)));
  return lo;
}

ReducedGridding assemble_gridding_reduced(const MjlsModel& model, const Grid& grid,
                                          const SigmaBounds& sigmas, double gamma) {
  return ReducedGridding(model, grid, sigmas, gamma);
}

// ---------------------------------------------------------------- bisection

BisectionResult bisect_gamma(const std::function<FeasibilityResult(double)>& oracle,
                             double tol, double lo, double hi) {
  if (!(tol > 0.0)) throw InvalidInput("bisect_gamma: tol must be positive");
  if (!(lo > 0.0) || !(hi > lo)) throw InvalidInput("bisect_gamma: need 0 < lo < hi");
  BisectionResult out;
  const auto eval = [&](double g) {
    const auto r = oracle(g);
    const bool ok = r.status == FeasibilityStatus::kCertified;
    out.steps.push_back({g, ok, r.margin});
    if (ok) out.certificate = r.certificate;
    return ok;
  };

  bool lo_known = false;
  bool hi_ok = eval(hi);
  while (!hi_ok) {
    lo = hi;
    lo_known = true;
    hi *= 10.0;
    if (hi > 1e12) {
      out.message = "no feasible gamma up to 1e12";
      out.gamma_lo = lo;
      return out;
    }
    hi_ok = eval(hi);
  }
  std::optional<Certificate> best = out.certificate;
  if (!lo_known) {
    while (eval(lo)) {
      best = out.certificate;
      hi = lo;
      lo /= 10.0;
      if (lo < 1e-12) {
        out.found = true;
        out.gamma_lo = 0.0;
        out.gamma_hi = hi;
        out.certificate = best;
        out.message = "feasible down to 1e-12";
        return out;
      }
    }
  }
  while (hi - lo > tol) {
    const double mid = hi / lo > 4.0 ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    if (eval(mid)) {
      hi = mid;
      best = out.certificate;
    } else {
      lo = mid;
    }
  }
  out.found = true;
  out.gamma_lo = lo;
  out.gamma_hi = hi;
  out.certificate = best;
  return out;
}

HinfResult hinf_norm_finite(const MjlsModel& model, double tol,
                            const SolveOptions& options, double lo, double hi) {
  const auto nominal = MjlsModel::autonomous(model.chain(), model.a_field());
  HinfResult out;
  out.spectral_radius = spectral_radius_LA(nominal);
  if (!(out.spectral_radius < 1.0)) {
    std::ostringstream os;
    os << "hinf_norm_finite: the nominal model is not EMSS (spectral radius "
       << out.spectral_radius << ")";
    throw PreconditionError(os.str());
  }
  out.bisection = bisect_gamma(
      [&](double g) { return solve_feasibility(assemble_finite_brl(model, g), options); },
      tol, lo, hi);
  if (!out.bisection.found) throw VerificationFailure("hinf_norm_finite: " + out.bisection.message);
  out.gamma_star = out.bisection.gamma_hi;
  out.norm = std::sqrt(out.gamma_star);
  out.bound = 1.0 / out.norm;
  return out;
}

RobustCertificate certify_robust_stability(const MjlsModel& model, double gamma,
                                           const CertMethod& method,
                                           const SolveOptions& options) {
  if (!(gamma > 0.0)) throw InvalidInput("certify_robust_stability: gamma must be positive");
  RobustCertificate out;
  out.gamma = gamma;
  out.bound = 1.0 / std::sqrt(gamma);
  FeasibilityResult r;
  if (std::holds_alternative<FiniteMethod>(method)) {
    r = solve_feasibility(assemble_finite_brl(model, gamma), options);
  } else {
    const auto& gm = std::get<GriddingMethod>(method);
    r = solve_feasibility(assemble_gridding(model, gm.grid, gm.sigmas, gamma), options);
    if (r.certificate) {
      r.certificate->grid = gm.grid;
      r.certificate->sigmas = gm.sigmas;
    }
  }
  out.status = r.status;
  out.certified = r.status == FeasibilityStatus::kCertified;
  out.certificate = std::move(r.certificate);
  out.message = out.certified ? r.message
                              : "no certificate (not a disproof of robust stability): " + r.message;
  return out;
}

double replay_margin(const Certificate& cert, const MjlsModel& model) {
  if (cert.source == LmiSource::kFiniteBrl) {
    const auto sys = assemble_finite_brl(model, cert.gamma);
    return sys.min_margin(pack_certificate(sys, cert));
  }
  if (cert.source == LmiSource::kGriddingPi1) {
    if (!cert.grid || !cert.sigmas) {
      throw InvalidInput("replay_margin: gridding certificate lacks its grid or sigmas");
    }
    const auto sys = assemble_gridding(model, *cert.grid, *cert.sigmas, cert.gamma);
    return sys.min_margin(pack_certificate(sys, cert));
  }
  throw InvalidInput("replay_margin: custom certificates cannot be replayed");
}

// ---------------------------------------------------------------- verification

namespace {

double xi_margin(const Matrix& ep, const Matrix& p, const Matrix& a, const Matrix& b,
                 const Matrix& c, double gamma, double state) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(ep);
  const Vector ev = es.eigenvalues();
  const double big = std::max(ev.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  if (ev.cwiseAbs().minCoeff() <= 1e-14 * big) {
    std::ostringstream os;
    os << "verify_certificate: E(P) is singular at state " << state;
    throw VerificationFailure(os.str());
  }
  const Matrix einv =
      es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  const int n = static_cast<int>(a.rows()), rz = static_cast<int>(c.rows()),
            rv = static_cast<int>(b.cols());
  const int dim = 2 * n + rz + rv;
  Matrix xi = Matrix::Zero(dim, dim);
  xi.block(0, 0, n, n) = einv;
  xi.block(0, n + rz, n, n) = a;
  xi.block(0, 2 * n + rz, n, rv) = b;
  xi.block(n, n, rz, rz) = eye(rz);
  xi.block(n, n + rz, rz, n) = c;
  xi.block(n + rz, n + rz, n, n) = p;
  xi.block(2 * n + rz, 2 * n + rz, rv, rv) = gamma * eye(rv);
  xi.triangularView<Eigen::StrictlyLower>() = xi.transpose().triangularView<Eigen::StrictlyLower>();
  return min_eig(xi);
}

}  // namespace

VerificationReport verify_certificate(const Certificate& cert, const MjlsModel& model,
                                      int samples_per_cell) {
  VerificationReport rep;
  rep.min_margin = std::numeric_limits<double>::infinity();
  const auto consider = [&](double margin, double state) {
    ++rep.samples;
    if (margin < rep.min_margin) {
      rep.min_margin = margin;
      rep.worst_state = state;
    }
  };
  if (model.is_finite()) {
    const auto& chain = model.finite_chain();
    if (static_cast<int>(cert.p.size()) != chain.size()) {
      throw InvalidInput("verify_certificate: certificate has the wrong number of P_i");
    }
    const auto ep = apply_E(chain, ModeFamily(cert.p));
    for (int i = 0; i < chain.size(); ++i) {
      consider(xi_margin(ep[i], cert.p[i], model.A(i), model.B(i), model.C(i), cert.gamma, i), i);
    }
  } else {
    if (!cert.grid) throw InvalidInput("verify_certificate: kernel certificates need their grid");
    if (samples_per_cell < 1) throw InvalidInput("verify_certificate: need at least one sample per cell");
    const Grid& grid = *cert.grid;
    check_grid(model, grid);
    if (static_cast<int>(cert.p.size()) != grid.cells()) {
      throw InvalidInput("verify_certificate: certificate has the wrong number of P_i");
    }
    const auto& chain = model.kernel_chain();
    for (int i = 0; i < grid.cells(); ++i) {
      for (int k = 0; k < samples_per_cell; ++k) {
        const double ell = grid.lo(i) + (k + 0.5) / samples_per_cell * grid.width(i);
        const Vector q = subinterval_masses(chain, grid, ell);
        Matrix ep = Matrix::Zero(model.n(), model.n());
        for (int j = 0; j < grid.cells(); ++j) ep += q[j] * cert.p[j];
        consider(xi_margin(ep, cert.p[i], model.A(ell), model.B(ell), model.C(ell),
                           cert.gamma, ell),
                 ell);
      }
    }
  }
  rep.passed = rep.min_margin > 0.0;
  return rep;
}

double prop10_margin(const Certificate& lifted, const MjlsModel& finite_model, double gamma) {
  const auto sys = assemble_finite_brl(finite_model, gamma);
  if (lifted.p.size() != sys.p_groups.size()) {
    throw InvalidInput("cross_check_prop10: certificate does not match the number of modes");
  }
  Vector values = Vector::Zero(sys.num_unknowns());
  for (std::size_t i = 0; i < lifted.p.size(); ++i) sys.pack(sys.p_groups[i], lifted.p[i], values);
  return sys.min_margin(values);
}

bool cross_check_prop10(const Certificate& lifted, const MjlsModel& finite_model, double gamma) {
  return prop10_margin(lifted, finite_model, gamma) > 0.0;
}

}  // namespace mjrobust
