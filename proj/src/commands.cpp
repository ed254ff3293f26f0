#include "mjrobust/commands.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "mjrobust/error.hpp"
#include "mjrobust/gridding.hpp"
#include "mjrobust/lmi.hpp"
#include "mjrobust/quadrature.hpp"
#include "mjrobust/version.hpp"

namespace mjrobust {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

Json provenance(const ModelConfig& cfg, const std::string& verb) {
  const auto& a = cfg.analysis;
  return {{"tool", "mjrobust"},
          {"version", kVersion},
          {"command", verb},
          {"config_name", cfg.name},
          {"config_hash", cfg.hash},
          {"seed", a.seed},
          {"tolerances",
           {{"bisection", a.tol}, {"solver", a.solver_tol}, {"min_margin", a.min_margin}}}};
}

SolveOptions solve_options(const ModelConfig& cfg) {
  SolveOptions o;
  o.min_margin = cfg.analysis.min_margin;
  o.tol = cfg.analysis.solver_tol;
  return o;
}

Json check_entry(const std::string& name, bool passed, const std::string& detail) {
  return {{"name", name}, {"passed", passed}, {"detail", detail}};
}

Json model_summary(const MjlsModel& m) {
  Json j = {{"n", m.n()}, {"inputs", m.inputs()}, {"outputs", m.outputs()}};
  if (m.is_finite()) {
    j["chain"] = "finite";
    j["modes"] = m.modes();
  } else {
    j["chain"] = "kernel";
    j["kernel"] = m.kernel_chain().tag();
    j["interval"] = {m.kernel_chain().a(), m.kernel_chain().b()};
  }
  return j;
}

Json steps_to_json(const std::vector<BisectionStep>& steps) {
  Json a = Json::array();
  for (const auto& s : steps) {
    a.push_back({{"gamma", s.gamma}, {"feasible", s.feasible},
                 {"margin", std::isfinite(s.margin) ? Json(s.margin) : Json()}});
  }
  return a;
}

Json verification_to_json(const VerificationReport& v, int samples_per_cell) {
  return {{"min_margin", v.min_margin}, {"worst_state", v.worst_state},
          {"samples", v.samples}, {"samples_per_cell", samples_per_cell},
          {"passed", v.passed}};
}

Json sigmas_to_json(const SigmaBounds& s) {
  return {{"A", vector_to_json(s.a)}, {"B", vector_to_json(s.b)},
          {"C", vector_to_json(s.c)}, {"Q", vector_to_json(s.q)},
          {"mesh_per_cell", s.mesh_per_cell}, {"safety", s.safety},
          {"note", "sup estimates on a mesh times the safety factor, not rigorous bounds"}};
}

// Gridding certification of `model` on `grid` at the configured gamma or by
// bisection. `finite` is set for lifted finite models (adds the
// cross-check against the finite bounded real lemma).
CommandOutcome run_gridding(const ModelConfig& cfg, const MjlsModel& model, const Grid& grid,
                            const SigmaBounds& sigmas, const MjlsModel* finite,
                            const std::string& verb) {
  CommandOutcome out;
  out.report = provenance(cfg, verb);
  out.report["model"] = model_summary(model);
  out.report["grid"] = {{"cells", grid.cells()}, {"points", grid.points()},
                        {"samples", grid.samples()}};
  out.report["sigmas"] = sigmas_to_json(sigmas);
  const auto& a = cfg.analysis;
  const SolveOptions so = solve_options(cfg);
  const auto oracle = [&](double g) {
    auto r = solve_feasibility(assemble_gridding(model, grid, sigmas, g), so);
    if (r.certificate) {
      r.certificate->grid = grid;
      r.certificate->sigmas = sigmas;
    }
    return r;
  };

  std::optional<Certificate> cert;
  double gamma = 0.0;
  if (a.bisect) {
    const auto b = bisect_gamma(oracle, a.tol, a.bracket_lo, a.bracket_hi);
    out.report["bisection"] = {{"found", b.found}, {"gamma_lo", b.gamma_lo},
                               {"gamma_hi", b.gamma_hi}, {"steps", steps_to_json(b.steps)},
                               {"message", b.message}};
    if (!b.found) {
      out.exit_code = kExitNoCertificate;
      out.report["verdict"] = "no-certificate";
      out.summary = "no certificate in the gamma bracket (not a disproof): " + b.message;
      return out;
    }
    gamma = b.gamma_hi;
    cert = b.certificate;
  } else {
    if (!a.gamma) throw ConfigError("/analysis/gamma", "required unless bisecting (--gamma or --bisect)");
    gamma = *a.gamma;
    const auto r = oracle(gamma);
    out.report["solve"] = {{"status", to_string(r.status)}, {"solver_t", r.solver_t},
                           {"margin", std::isfinite(r.margin) ? Json(r.margin) : Json()},
                           {"message", r.message}};
    if (r.status == FeasibilityStatus::kSolverFailure) {
      out.exit_code = kExitSolverFailure;
      out.report["verdict"] = "solver-failure";
      out.summary = "solver failure at gamma = " + num(gamma) + ": " + r.message;
      return out;
    }
    if (!r.certificate) {
      out.exit_code = kExitNoCertificate;
      out.report["verdict"] = "no-certificate";
      std::ostringstream os;
      os << "no certificate at gamma = " << gamma << " (not a disproof of robust stability); "
         << "best margin t = " << r.solver_t << ", status " << to_string(r.status);
      out.summary = os.str();
      return out;
    }
    cert = r.certificate;
  }

  out.report["gamma"] = gamma;
  out.report["bound"] = 1.0 / std::sqrt(gamma);
  out.report["margin"] = cert->margin;
  const auto verification = verify_certificate(*cert, model, a.samples_per_cell);
  out.report["verification"] = verification_to_json(verification, a.samples_per_cell);
  const double reduced = assemble_gridding_reduced(model, grid, sigmas, gamma).min_margin(*cert);
  out.report["reduced_form_margin"] = reduced;
  bool ok = reduced > 0.0;
  if (finite) {
    const double m = prop10_margin(*cert, *finite, gamma);
    out.report["finite_cross_check"] = {{"margin", m}, {"passed", m > 0.0}};
    ok = ok && m > 0.0;
  }
  out.report["verdict"] = ok ? "certified" : "certificate-check-failed";
  out.certificate = certificate_to_json(*cert, cfg.hash);
  std::ostringstream os;
  os << "certified at gamma = " << gamma << ": ||Delta|| <= " << fixed(1.0 / std::sqrt(gamma))
     << " (LMI margin " << cert->margin << ", sampled margin " << verification.min_margin
     << " over " << verification.samples << " states";
  if (!verification.passed) os << ", sampled check FAILED between grid points";
  os << ")";
  out.summary = os.str();
  if (!ok) {
    out.exit_code = kExitSolverFailure;
    out.summary += "; replayed certificate checks failed";
  }
  return out;
}

std::string csv_row(std::initializer_list<std::string> lead, const Vector& v) {
  std::string s;
  bool first = true;
  for (const auto& x : lead) {
    if (!first) s += ',';
    s += x;
    first = false;
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) s += ',' + num(v[i]);
  return s + '\n';
}

std::string csv_header(std::initializer_list<std::string> lead, const std::string& prefix,
                       int count, const std::string& tail = "") {
  std::string s;
  bool first = true;
  for (const auto& x : lead) {
    if (!first) s += ',';
    s += x;
    first = false;
  }
  for (int i = 0; i < count; ++i) s += ',' + prefix + std::to_string(i + 1);
  if (!tail.empty()) s += ',' + tail;
  return s + '\n';
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"check", "hinf", "radius", "grid-cert",
                                                 "lift", "simulate", "ncs-build"};
  return names;
}

void apply_overrides(ModelConfig& cfg, const CommandOptions& o) {
  auto& a = cfg.analysis;
  if (o.gamma) {
    if (!(*o.gamma > 0.0)) throw ConfigError("--gamma", "must be positive");
    a.gamma = o.gamma;
  }
  if (o.bisect) a.bisect = true;
  if (o.grid_n) {
    if (*o.grid_n < 1) throw ConfigError("--grid-n", "must be at least 1");
    a.grid_n = *o.grid_n;
  }
  if (o.seed) a.seed = *o.seed;
  if (o.tol) {
    if (!(*o.tol > 0.0)) throw ConfigError("--tol", "must be positive");
    a.tol = *o.tol;
  }
  if (o.samples_per_cell) {
    if (*o.samples_per_cell < 1) throw ConfigError("--samples-per-cell", "must be at least 1");
    a.samples_per_cell = *o.samples_per_cell;
  }
}

CommandOutcome cmd_check(const ModelConfig& cfg) {
  CommandOutcome out;
  const auto& m = cfg.mjls();
  out.report = provenance(cfg, "check");
  out.report["model"] = model_summary(m);
  Json checks = Json::array();
  checks.push_back(check_entry("model invariants", true, "shapes, supports and finiteness"));

  const auto pos = check_positivity(m.chain());
  std::string pd;
  if (pos.mesh_certified) {
    pd = "mesh-certified on " + std::to_string(pos.mesh_points) +
         " cell midpoints (a mesh check, not a proof)";
  } else {
    pd = "initial distribution positive and every mode reachable";
  }
  checks.push_back(check_entry("initial distribution positive", pos.nu0_positive, pd));
  checks.push_back(check_entry("kernel marginal positive", pos.kernel_marginal_positive, pd));

  if (!m.is_finite()) {
    const auto& k = m.kernel_chain();
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const double t = k.a() + (i + 0.5) / 100.0 * (k.b() - k.a());
      const auto br = k.breaks(t);
      const double s = integrate([&](double x) { return k.g(t, x); }, k.a(), k.b(), br);
      worst = std::max(worst, std::abs(s - 1.0));
    }
    checks.push_back(check_entry("kernel rows integrate to one", worst <= 1e-8,
                                 "max deviation " + num(worst) + " over 100 states"));
  }

  double ctd = 0.0;
  if (!m.d_is_zero()) {
    for (double s : m.check_points()) {
      ctd = std::max(ctd, (m.C(s).transpose() * m.D(s)).cwiseAbs().maxCoeff());
    }
  }
  checks.push_back(check_entry("C^T D = 0", ctd <= 1e-10,
                               m.d_is_zero() ? "D = 0" : "max |C^T D| = " + num(ctd)));

  if (m.is_finite()) {
    const double rho = spectral_radius_LA(MjlsModel::autonomous(m.chain(), m.a_field()));
    out.report["nominal_spectral_radius"] = rho;
    out.report["nominal_emss"] = rho < 1.0;
  }
  bool ok = true;
  std::ostringstream os;
  for (const auto& c : checks) {
    const bool p = c["passed"].get<bool>();
    ok = ok && p;
    os << (p ? "  ok    " : "  FAIL  ") << c["name"].get<std::string>() << ": "
       << c["detail"].get<std::string>() << '\n';
  }
  out.report["checks"] = std::move(checks);
  out.report["verdict"] = ok ? "pass" : "fail";
  out.exit_code = ok ? kExitOk : kExitValidation;
  out.summary = (ok ? "check passed\n" : "check FAILED\n") + os.str();
  if (!out.summary.empty() && out.summary.back() == '\n') out.summary.pop_back();
  return out;
}

CommandOutcome cmd_hinf(const ModelConfig& cfg, bool radius_only) {
  const auto& m = cfg.mjls();
  const std::string verb = radius_only ? "radius" : "hinf";
  if (!m.is_finite()) throw PreconditionError(verb + ": needs a finite chain (use grid-cert)");
  if (m.inputs() == 0) throw PreconditionError(verb + ": the model has no B, C");
  const auto& a = cfg.analysis;
  const auto h = hinf_norm_finite(m, a.tol, solve_options(cfg), a.bracket_lo, a.bracket_hi);
  CommandOutcome out;
  out.report = provenance(cfg, verb);
  out.report["model"] = model_summary(m);
  out.report["spectral_radius"] = h.spectral_radius;
  out.report["gamma_star"] = h.gamma_star;
  out.report["bound"] = h.bound;
  if (!radius_only) out.report["norm"] = h.norm;
  out.report["bisection"] = {{"gamma_lo", h.bisection.gamma_lo},
                             {"gamma_hi", h.bisection.gamma_hi},
                             {"steps", steps_to_json(h.bisection.steps)}};
  if (h.bisection.certificate) {
    const auto v = verify_certificate(*h.bisection.certificate, m);
    out.report["verification"] = verification_to_json(v, 1);
    out.certificate = certificate_to_json(*h.bisection.certificate, cfg.hash);
    out.report["margin"] = h.bisection.certificate->margin;
  }
  out.report["verdict"] = "certified";
  std::ostringstream os;
  if (radius_only) {
    os << "stability radius >= " << fixed(h.bound) << " (gamma* = " << h.gamma_star << ")";
  } else {
    os << "gamma* = " << h.gamma_star << ", ||L||_inf <= " << fixed(h.norm)
       << ", admissible ||Delta|| <= " << fixed(h.bound) << " (nominal spectral radius "
       << fixed(h.spectral_radius) << ")";
  }
  out.summary = os.str();
  return out;
}

CommandOutcome cmd_grid_cert(const ModelConfig& cfg) {
  const auto& m = cfg.mjls();
  const auto& a = cfg.analysis;
  if (m.inputs() == 0) throw PreconditionError("grid-cert: the model has no B, C");
  if (m.is_finite()) {
    const auto lifted = lift_finite(m);
    const Grid grid = lift_grid(m.modes());
    const auto sig = estimate_sigmas(lifted, grid, a.sigma_mesh, a.sigma_safety);
    auto out = run_gridding(cfg, lifted, grid, sig, &m, "grid-cert");
    out.report["lifted_from_finite"] = true;
    return out;
  }
  const auto& k = m.kernel_chain();
  const Grid grid = uniform_grid(k.a(), k.b(), a.grid_n);
  const auto sig = estimate_sigmas(m, grid, a.sigma_mesh, a.sigma_safety);
  return run_gridding(cfg, m, grid, sig, nullptr, "grid-cert");
}

CommandOutcome cmd_lift(const ModelConfig& cfg) {
  const auto& m = cfg.mjls();
  if (!m.is_finite()) throw PreconditionError("lift: needs a finite chain");
  const int modes = m.modes();
  const auto lifted = lift_finite(m);
  const Grid grid = lift_grid(modes);
  Json lift = {{"interval", {0.0, static_cast<double>(modes)}},
               {"breakpoints", grid.points()},
               {"kernel", matrix_to_json(m.finite_chain().transition())},
               {"nu0", vector_to_json(m.finite_chain().pi())}};
  Json pieces = Json::array();
  for (int i = 0; i < modes; ++i) {
    Json p = {{"A", matrix_to_json(lifted.A(grid.sample(i)))}};
    if (m.inputs() > 0) {
      p["B"] = matrix_to_json(lifted.B(grid.sample(i)));
      p["C"] = matrix_to_json(lifted.C(grid.sample(i)));
    }
    pieces.push_back(std::move(p));
  }
  lift["pieces"] = std::move(pieces);

  CommandOutcome out;
  if (m.inputs() > 0 && (cfg.analysis.bisect || cfg.analysis.gamma)) {
    const auto sig = estimate_sigmas(lifted, grid, cfg.analysis.sigma_mesh, cfg.analysis.sigma_safety);
    out = run_gridding(cfg, lifted, grid, sig, &m, "lift");
  } else {
    out.report = provenance(cfg, "lift");
    out.report["model"] = model_summary(lifted);
    out.report["verdict"] = "lifted";
    out.summary = "lifted " + std::to_string(modes) + " modes onto [0, " +
                  std::to_string(modes) + "] with unit cells";
  }
  out.report["lift"] = std::move(lift);
  return out;
}

CommandOutcome cmd_simulate(const ModelConfig& cfg) {
  const auto& s = cfg.simulation;
  const auto& m = cfg.mjls();
  CommandOutcome out;
  out.report = provenance(cfg, "simulate");
  out.report["model"] = model_summary(m);
  out.report["runs"] = s.runs;
  out.report["steps"] = s.steps;
  const RngStream master(cfg.analysis.seed, "simulate");

  std::vector<Matrix> deltas = s.deltas;
  const bool ncs = cfg.is_ncs();
  const int state_dim = ncs ? cfg.plant->nc() : m.n();
  if (deltas.empty()) {
    if (ncs) deltas.push_back(Matrix::Zero(cfg.plant->m(), cfg.plant->nc()));
    else if (m.inputs() > 0) deltas.push_back(Matrix::Zero(m.inputs(), m.outputs()));
  }
  const Vector x0 = s.x0 ? *s.x0 : Vector(Vector::Ones(state_dim) / std::sqrt(static_cast<double>(state_dim)));

  Json series = Json::array();
  std::ostringstream summary;
  const int cases = deltas.empty() ? 1 : static_cast<int>(deltas.size());
  for (int d = 0; d < cases; ++d) {
    std::optional<MjlsModel> closed;
    if (!ncs) {
      if (deltas.empty()) {
        closed = MjlsModel::autonomous(m.chain(), m.a_field());
      } else {
        closed = close_uncertain_loop(
            m, m.is_finite() ? MatrixField::constant(deltas[d], m.modes())
                             : MatrixField::constant(deltas[d]));
      }
    }
    // x series per run: x_c(kL) for NCS, x(k) otherwise; norms are of the
    // lifted NCS state [x_c((k-1)L); x_c(kL)], k >= 1.
    const int cols = ncs ? s.steps : s.steps + 1;
    Matrix sq = Matrix::Zero(s.runs, cols);
    Matrix mean = Matrix::Zero(s.steps + 1, state_dim);
    std::vector<int> diverged;
    std::string runs_csv = csv_header({"run", "k"}, "x", state_dim);
    for (int r = 0; r < s.runs; ++r) {
      RngStream rng = master.substream("delta", static_cast<std::uint64_t>(d)).substream("run", r);
      std::vector<Vector> xs;
      bool div = false;
      if (ncs) {
        const Matrix delta = deltas[d];
        auto tr = simulate_closed_loop(*cfg.plant, delta, *cfg.delays, x0, s.steps, rng);
        xs = std::move(tr.xc);
        div = tr.diverged;
      } else {
        auto tr = simulate(*closed, x0, std::nullopt, {}, s.steps, rng);
        xs = std::move(tr.x);
        div = tr.diverged;
      }
      if (div) {
        diverged.push_back(r);
        sq.row(r).setConstant(std::numeric_limits<double>::infinity());
        continue;
      }
      for (int k = 0; k <= s.steps; ++k) mean.row(k) += xs[k].transpose();
      if (ncs) {
        for (int k = 1; k <= s.steps; ++k) sq(r, k - 1) = xs[k - 1].squaredNorm() + xs[k].squaredNorm();
      } else {
        for (int k = 0; k <= s.steps; ++k) sq(r, k) = xs[k].squaredNorm();
      }
      if (s.write_runs) {
        for (int k = 0; k <= s.steps; ++k) {
          runs_csv += csv_row({std::to_string(r), std::to_string(k)}, xs[k]);
        }
      }
    }
    const int good = s.runs - static_cast<int>(diverged.size());
    Json entry;
    if (!deltas.empty()) entry["delta"] = matrix_to_json(deltas[d]);
    entry["diverged_runs"] = diverged;
    std::string mean_csv = csv_header({"k"}, "mean_x", state_dim, "mean_sq");
    if (good > 0) {
      mean /= static_cast<double>(good);
      Matrix finite_sq(good, cols);
      for (int r = 0, g = 0; r < s.runs; ++r) {
        if (std::isfinite(sq(r, 0))) finite_sq.row(g++) = sq.row(r);
      }
      const Vector msq = finite_sq.colwise().mean();
      for (int k = 0; k <= s.steps; ++k) {
        const int col = ncs ? k - 1 : k;
        Vector row = mean.row(k).transpose();
        std::string line = csv_row({std::to_string(k)}, row);
        line.pop_back();
        line += ',' + (col >= 0 ? num(msq[col]) : std::string()) + '\n';
        mean_csv += line;
      }
      RngStream boot = master.substream("bootstrap", static_cast<std::uint64_t>(d));
      const auto fit = fit_emss(finite_sq, boot, s.bootstrap);
      entry["decay_slope"] = fit.decay_slope;
      entry["ci95"] = {fit.ci_low, fit.ci_high};
      entry["consistent_with_emss"] = fit.consistent_with_emss;
      entry["trivially_stable"] = fit.trivially_stable;
      entry["mean_square"] = fit.mean_square;
      summary << "delta[" << d << "]: slope " << fixed(fit.decay_slope, 5) << " (95% CI "
              << fixed(fit.ci_low, 5) << ", " << fixed(fit.ci_high, 5) << ")";
    } else {
      summary << "delta[" << d << "]: every run diverged";
    }
    if (!diverged.empty()) summary << ", " << diverged.size() << " runs diverged";
    summary << '\n';
    const std::string tag = "delta" + std::to_string(d);
    entry["mean_csv"] = "mean_" + tag + ".csv";
    out.files.emplace_back("mean_" + tag + ".csv", mean_csv);
    if (s.write_runs) {
      entry["runs_csv"] = "runs_" + tag + ".csv";
      out.files.emplace_back("runs_" + tag + ".csv", runs_csv);
    }
    series.push_back(std::move(entry));
  }
  out.report["series"] = std::move(series);
  out.report["note"] = "simulation is statistical evidence; certificates carry the proof";
  out.report["verdict"] = "ok";
  out.summary = summary.str();
  if (!out.summary.empty()) out.summary.pop_back();
  return out;
}

CommandOutcome cmd_ncs_build(const ModelConfig& cfg) {
  if (!cfg.is_ncs()) throw PreconditionError("ncs-build: the config has no system/ncs plant");
  const auto& plant = *cfg.plant;
  const auto& m = cfg.mjls();
  CommandOutcome out;
  out.report = provenance(cfg, "ncs-build");
  out.report["model"] = model_summary(m);
  out.report["expm_AL"] = matrix_to_json(expm(plant.ac * plant.period));
  if (m.is_finite()) {
    Json modes = Json::array();
    Json a = Json::array(), b = Json::array(), c = Json::array();
    for (int i = 0; i < m.modes(); ++i) {
      const double tau = cfg.delays->values[i];
      const auto [w1, w2] = w_matrices(plant, tau);
      modes.push_back({{"delay", tau}, {"W1", matrix_to_json(w1)}, {"W2", matrix_to_json(w2)},
                       {"A", matrix_to_json(m.A(i))}, {"B", matrix_to_json(m.B(i))}});
      a.push_back(matrix_to_json(m.A(i)));
      b.push_back(matrix_to_json(m.B(i)));
      c.push_back(matrix_to_json(m.C(i)));
    }
    out.report["modes"] = std::move(modes);
    const double rho = spectral_radius_LA(MjlsModel::autonomous(m.chain(), m.a_field()));
    out.report["spectral_radius"] = rho;
    Json model = {{"name", cfg.name.empty() ? "discretized" : cfg.name + "-discretized"},
                  {"chain", cfg.doc["chain"]},
                  {"system", {{"A", a}, {"B", b}, {"C", c}}}};
    if (cfg.doc.contains("analysis")) model["analysis"] = cfg.doc["analysis"];
    out.files.emplace_back("model.json", model.dump(2) + "\n");
    out.report["model_file"] = "model.json";
    out.summary = "discretized " + std::to_string(m.modes()) + "-mode NCS model, spectral radius " +
                  fixed(rho) + "; wrote model.json";
  } else {
    const auto& k = m.kernel_chain();
    const Grid grid = uniform_grid(k.a(), k.b(), cfg.analysis.grid_n);
    const int n = m.n(), r = m.inputs();
    std::string csv = csv_header({"tau"}, "a", n * n);
    csv.pop_back();
    for (int i = 0; i < n * r; ++i) csv += ",b" + std::to_string(i + 1);
    csv += '\n';
    for (double tau : grid.samples()) {
      const Matrix A = m.A(tau), B = m.B(tau);
      Vector row(n * n + n * r);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) row[i * n + j] = A(i, j);
        for (int j = 0; j < r; ++j) row[n * n + i * r + j] = B(i, j);
      }
      csv += csv_row({num(tau)}, row);
    }
    out.files.emplace_back("ncs_samples.csv", csv);
    out.report["samples_csv"] = "ncs_samples.csv";
    out.report["sample_delays"] = grid.samples();
    out.summary = "discretized kernel NCS model on [" + fixed(k.a(), 3) + ", " + fixed(k.b(), 3) +
                  "]; tabulated A_d, B_d at " + std::to_string(grid.cells()) +
                  " delays in ncs_samples.csv";
  }
  out.report["verdict"] = "ok";
  return out;
}

int run_command(const std::string& verb, const CommandOptions& options, std::ostream& out,
                std::ostream& err) {
  Json failure;
  int code = kExitOk;
  CommandOutcome result;
  try {
    ModelConfig cfg = load_config(options.config);
    apply_overrides(cfg, options);
    if (verb == "check") result = cmd_check(cfg);
    else if (verb == "hinf") result = cmd_hinf(cfg, false);
    else if (verb == "radius") result = cmd_hinf(cfg, true);
    else if (verb == "grid-cert") result = cmd_grid_cert(cfg);
    else if (verb == "lift") result = cmd_lift(cfg);
    else if (verb == "simulate") result = cmd_simulate(cfg);
    else if (verb == "ncs-build") result = cmd_ncs_build(cfg);
    else throw InvalidInput("unknown command '" + verb + "'");
    code = result.exit_code;
  } catch (const ConfigError& e) {
    failure = {{"kind", "validation"}, {"path", e.path()}, {"message", e.what()}};
    code = kExitValidation;
  } catch (const InvalidInput& e) {
    failure = {{"kind", "validation"}, {"message", e.what()}};
    code = kExitValidation;
  } catch (const PreconditionError& e) {
    failure = {{"kind", "precondition"}, {"message", e.what()}};
    code = kExitValidation;
  } catch (const GainUndefined& e) {
    failure = {{"kind", "precondition"}, {"message", e.what()}};
    code = kExitValidation;
  } catch (const std::exception& e) {
    failure = {{"kind", "solver"}, {"message", e.what()}};
    code = kExitSolverFailure;
  }

  try {
    std::filesystem::create_directories(options.out);
    if (!failure.is_null()) {
      Json rep = {{"tool", "mjrobust"}, {"version", kVersion}, {"command", verb},
                  {"verdict", "error"}, {"error", failure}};
      save_json(options.out / "report.json", rep);
      err << "error: " << failure["message"].get<std::string>() << '\n';
      return code;
    }
    save_json(options.out / "report.json", result.report);
    if (result.certificate) save_json(options.out / "certificate.json", *result.certificate);
    for (const auto& [name, contents] : result.files) {
      std::ofstream f(options.out / name, std::ios::binary);
      if (!f) throw InvalidInput("cannot write " + (options.out / name).string());
      f << contents;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  out << result.summary << '\n';
  return code;
}

}  // namespace mjrobust
