#include "mjrobust/config.hpp"

#include <cmath>

#include "mjrobust/error.hpp"

namespace mjrobust {

namespace {

std::string at(const std::string& path, const std::string& key) { return path + "/" + key; }
std::string at(const std::string& path, std::size_t i) { return path + "/" + std::to_string(i); }

const Json& require(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  if (!j.contains(key)) throw ConfigError(at(path, key), "required field missing");
  return j.at(key);
}

double as_number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "expected a finite number");
  return v;
}

int as_int(const Json& j, const std::string& path, int min_value) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  const auto v = j.get<long long>();
  if (v < min_value) throw ConfigError(path, "must be at least " + std::to_string(min_value));
  return static_cast<int>(v);
}

Matrix as_matrix(const Json& j, const std::string& path) {
  try {
    return matrix_from_json(j, path);
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(path, e.what());
  }
}

Vector as_vector(const Json& j, const std::string& path) {
  if (j.is_number()) return Vector::Constant(1, as_number(j, path));
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = as_number(j[i], at(path, i));
  return v;
}

void check_keys(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError(at(path, it.key()), "unknown field");
  }
}

// Rethrow domain-object validation with the config path attached.
template <class F>
auto checked(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(path, e.what());
  }
}

AnalysisConfig parse_analysis(const Json& j, const std::string& path) {
  AnalysisConfig a;
  if (j.is_null()) return a;
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  check_keys(j, path, {"gamma", "bisect", "grid_n", "sigma_safety", "sigma_mesh", "tol",
                       "solver_tol", "min_margin", "samples_per_cell", "seed", "bracket"});
  if (j.contains("gamma")) {
    a.gamma = as_number(j["gamma"], at(path, "gamma"));
    if (!(*a.gamma > 0.0)) throw ConfigError(at(path, "gamma"), "must be positive");
  }
  if (j.contains("bisect")) {
    if (!j["bisect"].is_boolean()) throw ConfigError(at(path, "bisect"), "expected a boolean");
    a.bisect = j["bisect"].get<bool>();
  }
  if (j.contains("grid_n")) a.grid_n = as_int(j["grid_n"], at(path, "grid_n"), 1);
  if (j.contains("sigma_safety")) {
    a.sigma_safety = as_number(j["sigma_safety"], at(path, "sigma_safety"));
    if (a.sigma_safety < 1.0) throw ConfigError(at(path, "sigma_safety"), "must be at least 1");
  }
  if (j.contains("sigma_mesh")) a.sigma_mesh = as_int(j["sigma_mesh"], at(path, "sigma_mesh"), 2);
  auto positive = [&](const char* key, double& out) {
    if (!j.contains(key)) return;
    out = as_number(j[key], at(path, key));
    if (!(out > 0.0)) throw ConfigError(at(path, key), "must be positive");
  };
  positive("tol", a.tol);
  positive("solver_tol", a.solver_tol);
  positive("min_margin", a.min_margin);
  if (j.contains("samples_per_cell")) {
    a.samples_per_cell = as_int(j["samples_per_cell"], at(path, "samples_per_cell"), 1);
  }
  if (j.contains("seed")) {
    const auto& sd = j["seed"];
    if (!sd.is_number_integer() || (!sd.is_number_unsigned() && sd.get<long long>() < 0)) {
      throw ConfigError(at(path, "seed"), "expected a non-negative integer");
    }
    a.seed = sd.get<std::uint64_t>();
  }
  if (j.contains("bracket")) {
    const Vector b = as_vector(j["bracket"], at(path, "bracket"));
    if (b.size() != 2 || !(b[0] > 0.0) || !(b[0] < b[1])) {
      throw ConfigError(at(path, "bracket"), "expected [lo, hi] with 0 < lo < hi");
    }
    a.bracket_lo = b[0];
    a.bracket_hi = b[1];
  }
  return a;
}

SimulationConfig parse_simulation(const Json& j, const std::string& path) {
  SimulationConfig s;
  if (j.is_null()) return s;
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  check_keys(j, path, {"runs", "steps", "x0", "deltas", "write_runs", "bootstrap"});
  if (j.contains("runs")) s.runs = as_int(j["runs"], at(path, "runs"), 1);
  if (j.contains("steps")) s.steps = as_int(j["steps"], at(path, "steps"), 1);
  if (j.contains("bootstrap")) s.bootstrap = as_int(j["bootstrap"], at(path, "bootstrap"), 1);
  if (j.contains("x0")) s.x0 = as_vector(j["x0"], at(path, "x0"));
  if (j.contains("write_runs")) {
    if (!j["write_runs"].is_boolean()) throw ConfigError(at(path, "write_runs"), "expected a boolean");
    s.write_runs = j["write_runs"].get<bool>();
  }
  if (j.contains("deltas")) {
    const auto& d = j["deltas"];
    if (!d.is_array()) throw ConfigError(at(path, "deltas"), "expected an array");
    for (std::size_t i = 0; i < d.size(); ++i) s.deltas.push_back(as_matrix(d[i], at(at(path, "deltas"), i)));
  }
  return s;
}

}  // namespace

ChainModel parse_chain(const Json& j, const std::string& path) {
  const auto& type = require(j, "type", path);
  if (!type.is_string()) throw ConfigError(at(path, "type"), "expected \"finite\" or \"kernel\"");
  const auto t = type.get<std::string>();
  if (t == "finite") {
    check_keys(j, path, {"type", "pi", "P", "mesh"});
    Vector pi = as_vector(require(j, "pi", path), at(path, "pi"));
    Matrix p = as_matrix(require(j, "P", path), at(path, "P"));
    if (p.rows() != pi.size() || p.cols() != pi.size()) {
      throw ConfigError(at(path, "P"), "must be N x N with N = size of pi");
    }
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      const double s = p.row(i).sum();
      if (std::abs(s - 1.0) > 1e-12) {
        throw ConfigError(at(at(path, "P"), static_cast<std::size_t>(i)),
                          "row sums to " + std::to_string(s) + ", must sum to 1");
      }
    }
    return checked(path, [&] { return ChainModel(FiniteChain(pi, p)); });
  }
  if (t != "kernel") throw ConfigError(at(path, "type"), "expected \"finite\" or \"kernel\"");
  if (j.contains("tabulated")) {
    check_keys(j, path, {"type", "tabulated"});
    const auto& tb = j["tabulated"];
    const std::string tp = at(path, "tabulated");
    const double a = as_number(require(tb, "a", tp), at(tp, "a"));
    const double b = as_number(require(tb, "b", tp), at(tp, "b"));
    Matrix k = as_matrix(require(tb, "kernel", tp), at(tp, "kernel"));
    Vector nu0 = as_vector(require(tb, "nu0", tp), at(tp, "nu0"));
    return checked(tp, [&] { return ChainModel(KernelChain::tabulated(a, b, k, nu0)); });
  }
  const auto& builtin = require(j, "builtin", path);
  if (!builtin.is_string()) throw ConfigError(at(path, "builtin"), "expected a name");
  const auto name = builtin.get<std::string>();
  if (name == "example2") {
    check_keys(j, path, {"type", "builtin", "c"});
    const double c = j.contains("c") ? as_number(j["c"], at(path, "c")) : 0.4;
    if (!(c > 0.0)) throw ConfigError(at(path, "c"), "must be positive");
    return checked(path, [&] { return ChainModel(KernelChain::example2(c)); });
  }
  if (name == "uniform") {
    check_keys(j, path, {"type", "builtin", "a", "b"});
    const double a = as_number(require(j, "a", path), at(path, "a"));
    const double b = as_number(require(j, "b", path), at(path, "b"));
    if (!(a < b)) throw ConfigError(path, "need a < b");
    return checked(path, [&] { return ChainModel(KernelChain::uniform(a, b)); });
  }
  throw ConfigError(at(path, "builtin"), "unknown kernel '" + name + "' (known: example2, uniform)");
}

MatrixField parse_field(const Json& j, const ChainModel& chain, const std::string& path) {
  if (j.is_object() && j.contains("constant")) {
    check_keys(j, path, {"constant"});
    Matrix m = as_matrix(j["constant"], at(path, "constant"));
    if (is_finite(chain)) return MatrixField::constant(m, std::get<FiniteChain>(chain).size());
    return MatrixField::constant(m);
  }
  if (j.is_object() && j.contains("breakpoints")) {
    check_keys(j, path, {"breakpoints", "pieces"});
    if (is_finite(chain)) throw ConfigError(at(path, "breakpoints"), "only valid for kernel chains");
    Vector bp = as_vector(j["breakpoints"], at(path, "breakpoints"));
    const auto& pj = require(j, "pieces", path);
    if (!pj.is_array()) throw ConfigError(at(path, "pieces"), "expected an array of matrices");
    std::vector<Matrix> pieces;
    for (std::size_t i = 0; i < pj.size(); ++i) pieces.push_back(as_matrix(pj[i], at(at(path, "pieces"), i)));
    std::vector<double> b(bp.data(), bp.data() + bp.size());
    return checked(path, [&] { return MatrixField(ModeFamily(pieces, b)); });
  }
  if (!j.is_array()) throw ConfigError(path, "expected a list of matrices, {\"constant\"} or {\"breakpoints\", \"pieces\"}");
  if (!is_finite(chain)) throw ConfigError(path, "a per-mode list needs a finite chain");
  const int modes = std::get<FiniteChain>(chain).size();
  if (static_cast<int>(j.size()) != modes) {
    throw ConfigError(path, "expected " + std::to_string(modes) + " matrices, one per mode");
  }
  std::vector<Matrix> pieces;
  for (std::size_t i = 0; i < j.size(); ++i) pieces.push_back(as_matrix(j[i], at(path, i)));
  return checked(path, [&] { return MatrixField(ModeFamily(pieces)); });
}

ModelConfig parse_config(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("", "expected an object at the top level");
  check_keys(doc, "", {"name", "chain", "system", "analysis", "simulation"});
  ModelConfig cfg;
  cfg.doc = doc;
  cfg.hash = json_hash(doc);
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw ConfigError("/name", "expected a string");
    cfg.name = doc["name"].get<std::string>();
  }
  ChainModel chain = parse_chain(require(doc, "chain", ""), "/chain");
  const auto& sys = require(doc, "system", "");
  if (!sys.is_object()) throw ConfigError("/system", "expected an object");
  if (sys.contains("ncs")) {
    check_keys(sys, "/system", {"ncs"});
    const auto& nj = sys["ncs"];
    const std::string np = "/system/ncs";
    check_keys(nj, np, {"Ac", "Bc", "K", "L", "delays"});
    PlantSpec plant;
    plant.ac = as_matrix(require(nj, "Ac", np), np + "/Ac");
    plant.bc = as_matrix(require(nj, "Bc", np), np + "/Bc");
    plant.k = as_matrix(require(nj, "K", np), np + "/K");
    plant.period = nj.contains("L") ? as_number(nj["L"], np + "/L") : 1.0;
    checked(np, [&] { plant.validate(); return 0; });
    DelayModel delays = is_finite(chain)
        ? [&] {
            if (!nj.contains("delays")) throw ConfigError(np + "/delays", "required for a finite chain");
            const Vector d = as_vector(nj["delays"], np + "/delays");
            return checked(np + "/delays", [&] {
              return DelayModel::finite(std::get<FiniteChain>(chain),
                                        std::vector<double>(d.data(), d.data() + d.size()));
            });
          }()
        : DelayModel::kernel(std::get<KernelChain>(chain));
    if (!is_finite(chain) && nj.contains("delays")) {
      throw ConfigError(np + "/delays", "kernel chains use the state as the delay");
    }
    cfg.model = checked(np, [&] { return discretize(plant, delays); });
    cfg.plant = std::move(plant);
    cfg.delays = std::move(delays);
  } else {
    check_keys(sys, "/system", {"A", "B", "C", "D"});
    MatrixField a = parse_field(require(sys, "A", "/system"), chain, "/system/A");
    if (!sys.contains("B") && !sys.contains("C")) {
      if (sys.contains("D")) throw ConfigError("/system/D", "D without B and C");
      cfg.model = checked("/system", [&] { return MjlsModel::autonomous(chain, a); });
    } else {
      MatrixField b = parse_field(require(sys, "B", "/system"), chain, "/system/B");
      MatrixField c = parse_field(require(sys, "C", "/system"), chain, "/system/C");
      std::optional<MatrixField> d;
      if (sys.contains("D")) d = parse_field(sys["D"], chain, "/system/D");
      cfg.model = checked("/system", [&] { return MjlsModel(chain, a, b, c, d); });
    }
  }
  cfg.analysis = parse_analysis(doc.value("analysis", Json()), "/analysis");
  cfg.simulation = parse_simulation(doc.value("simulation", Json()), "/simulation");
  if (cfg.simulation.x0) {
    const int need = cfg.plant ? cfg.plant->nc() : cfg.model->n();
    if (cfg.simulation.x0->size() != need) {
      throw ConfigError("/simulation/x0", "expected " + std::to_string(need) + " entries");
    }
  }
  for (std::size_t i = 0; i < cfg.simulation.deltas.size(); ++i) {
    const Matrix& d = cfg.simulation.deltas[i];
    const int rows = cfg.plant ? cfg.plant->m() : cfg.model->inputs();
    const int cols = cfg.plant ? cfg.plant->nc() : cfg.model->outputs();
    if (d.rows() != rows || d.cols() != cols) {
      throw ConfigError("/simulation/deltas/" + std::to_string(i),
                        "expected " + std::to_string(rows) + "x" + std::to_string(cols));
    }
  }
  return cfg;
}

ModelConfig load_config(const std::filesystem::path& path) {
  Json doc;
  try {
    doc = load_json(path);
  } catch (const InvalidInput& e) {
    throw ConfigError("", e.what());
  }
  return parse_config(doc);
}

}  // namespace mjrobust
