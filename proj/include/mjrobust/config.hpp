#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mjrobust/certificate_io.hpp"
#include "mjrobust/error.hpp"
#include "mjrobust/mjls.hpp"
#include "mjrobust/ncs.hpp"

namespace mjrobust {

/// Schema violation; path() is a JSON pointer to the offending value.
class ConfigError : public InvalidInput {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : InvalidInput(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct AnalysisConfig {
  std::optional<double> gamma;
  bool bisect = false;
  int grid_n = 20;
  double sigma_safety = 1.05;
  int sigma_mesh = 64;
  double tol = 1e-3;        // bisection width
  double solver_tol = 1e-8;
  double min_margin = 1e-6;
  int samples_per_cell = 16;
  std::uint64_t seed = 1;
  double bracket_lo = 1e-6;
  double bracket_hi = 1e6;
};

struct SimulationConfig {
  int runs = 1000;
  int steps = 40;
  std::optional<Vector> x0;     // plant state for NCS models, model state otherwise
  std::vector<Matrix> deltas;   // controller perturbations (NCS) or loop Delta
  bool write_runs = true;
  int bootstrap = 200;
};

/// A parsed and validated model document.
///
///   {
///     "name": "...",
///     "chain": {"type": "finite", "pi": [...], "P": [[...]]}
///            | {"type": "kernel", "builtin": "example2", "c": 0.4}
///            | {"type": "kernel", "builtin": "uniform", "a": 0, "b": 1}
///            | {"type": "kernel", "tabulated": {"a":, "b":, "kernel": [[...]], "nu0": [...]}},
///     "system": {"A": F, "B": F, "C": F, "D": F}
///             | {"ncs": {"Ac": M, "Bc": M, "K": M, "L": 1.0, "delays": [...]}},
///     "analysis": {...}, "simulation": {...}
///   }
///
/// A field F is a list of matrices (one per mode), {"constant": M}, or
/// {"breakpoints": [...], "pieces": [M, ...]} for kernel chains. B, C, D are
/// optional (autonomous model). NCS delays are per mode for finite chains;
/// kernel chains use the state as the delay.
struct ModelConfig {
  Json doc;
  std::string hash;
  std::string name;
  std::optional<MjlsModel> model;
  std::optional<PlantSpec> plant;
  std::optional<DelayModel> delays;
  AnalysisConfig analysis;
  SimulationConfig simulation;

  const MjlsModel& mjls() const { return *model; }
  bool is_ncs() const { return plant.has_value(); }
};

ModelConfig parse_config(const Json& doc);
ModelConfig load_config(const std::filesystem::path& path);

ChainModel parse_chain(const Json& j, const std::string& path);
MatrixField parse_field(const Json& j, const ChainModel& chain,
                        const std::string& path);

}  // namespace mjrobust
