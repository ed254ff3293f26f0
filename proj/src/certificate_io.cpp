#include "mjrobust/certificate_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mjrobust/error.hpp"

namespace mjrobust {

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string json_hash(const Json& doc) { return fnv1a_hex(doc.dump()); }

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& where) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) throw InvalidInput(where + ": expected a non-empty matrix");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array()) {
    // a flat array is a column vector
    Matrix m(rows, 1);
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (!j[r].is_number()) throw InvalidInput(where + "/" + std::to_string(r) + ": expected a number");
      m(r, 0) = j[r].get<double>();
    }
    return m;
  }
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[r];
    const std::string here = where + "/" + std::to_string(r);
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw InvalidInput(here + ": rows must have equal length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!row[c].is_number()) throw InvalidInput(here + "/" + std::to_string(c) + ": expected a number");
      m(r, c) = row[c].get<double>();
    }
  }
  if (!m.allFinite()) throw InvalidInput(where + ": non-finite entry");
  return m;
}

Json vector_to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector vector_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) throw InvalidInput(where + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InvalidInput(where + "/" + std::to_string(i) + ": expected a number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

namespace {

const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw InvalidInput(where + ": missing field '" + key + "'");
  }
  return j.at(key);
}

double number(const Json& j, const char* key, const std::string& where) {
  const auto& v = field(j, key, where);
  if (!v.is_number()) throw InvalidInput(where + "/" + key + ": expected a number");
  return v.get<double>();
}

}  // namespace

Json certificate_to_json(const Certificate& cert, const std::string& model_hash) {
  Json j;
  j["kind"] = "mjrobust-certificate";
  j["source"] = to_string(cert.source);
  j["model_hash"] = model_hash;
  j["gamma"] = cert.gamma;
  j["bound"] = 1.0 / std::sqrt(cert.gamma);
  j["margin"] = cert.margin;
  Json p = Json::array();
  for (const auto& m : cert.p) p.push_back(matrix_to_json(m));
  j["P"] = std::move(p);
  Json x = Json::array();
  for (const auto& m : cert.x) x.push_back(matrix_to_json(m));
  j["X"] = std::move(x);
  j["alpha"] = vector_to_json(cert.alpha);
  j["beta"] = vector_to_json(cert.beta);
  j["rho"] = vector_to_json(cert.rho);
  j["x_sym_min_eig"] = cert.x_sym_min_eig;
  if (cert.grid) {
    j["grid"] = {{"points", cert.grid->points()}, {"samples", cert.grid->samples()}};
  }
  if (cert.sigmas) {
    j["sigmas"] = {{"A", vector_to_json(cert.sigmas->a)},
                   {"B", vector_to_json(cert.sigmas->b)},
                   {"C", vector_to_json(cert.sigmas->c)},
                   {"Q", vector_to_json(cert.sigmas->q)},
                   {"mesh_per_cell", cert.sigmas->mesh_per_cell},
                   {"safety", cert.sigmas->safety}};
  }
  j["solver"] = {{"status", cert.solver_status},
                 {"iterations", cert.solver_iterations},
                 {"t", cert.solver_t}};
  return j;
}

Certificate certificate_from_json(const Json& j, std::string* model_hash) {
  const std::string w = "certificate";
  if (!j.is_object()) throw InvalidInput(w + ": expected an object");
  Certificate c;
  const auto& src = field(j, "source", w);
  if (!src.is_string()) throw InvalidInput(w + "/source: expected a string");
  c.source = lmi_source_from_string(src.get<std::string>());
  c.gamma = number(j, "gamma", w);
  c.margin = number(j, "margin", w);
  const auto& p = field(j, "P", w);
  if (!p.is_array()) throw InvalidInput(w + "/P: expected an array");
  for (std::size_t i = 0; i < p.size(); ++i) {
    c.p.push_back(matrix_from_json(p[i], w + "/P/" + std::to_string(i)));
  }
  if (j.contains("X")) {
    const auto& x = j.at("X");
    for (std::size_t i = 0; i < x.size(); ++i) {
      c.x.push_back(matrix_from_json(x[i], w + "/X/" + std::to_string(i)));
    }
  }
  c.alpha = j.contains("alpha") ? vector_from_json(j.at("alpha"), w + "/alpha") : Vector();
  c.beta = j.contains("beta") ? vector_from_json(j.at("beta"), w + "/beta") : Vector();
  c.rho = j.contains("rho") ? vector_from_json(j.at("rho"), w + "/rho") : Vector();
  if (j.contains("x_sym_min_eig")) c.x_sym_min_eig = j.at("x_sym_min_eig").get<std::vector<double>>();
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    c.grid = Grid(field(g, "points", w + "/grid").get<std::vector<double>>(),
                  field(g, "samples", w + "/grid").get<std::vector<double>>());
  }
  if (j.contains("sigmas")) {
    const auto& s = j.at("sigmas");
    const std::string ws = w + "/sigmas";
    SigmaBounds sb;
    sb.a = vector_from_json(field(s, "A", ws), ws + "/A");
    sb.b = vector_from_json(field(s, "B", ws), ws + "/B");
    sb.c = vector_from_json(field(s, "C", ws), ws + "/C");
    sb.q = vector_from_json(field(s, "Q", ws), ws + "/Q");
    sb.mesh_per_cell = s.value("mesh_per_cell", 0);
    sb.safety = s.value("safety", 1.0);
    c.sigmas = std::move(sb);
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    c.solver_status = s.value("status", "");
    c.solver_iterations = s.value("iterations", 0);
    c.solver_t = s.value("t", 0.0);
  }
  if (model_hash) *model_hash = j.value("model_hash", "");
  return c;
}

void save_json(const std::filesystem::path& path, const Json& doc) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

}  // namespace mjrobust
