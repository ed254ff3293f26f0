#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mjrobust/config.hpp"

namespace mjrobust {

enum ExitCode : int {
  kExitOk = 0,
  kExitNoCertificate = 2,  // infeasible at the requested gamma; not a disproof
  kExitValidation = 3,
  kExitSolverFailure = 4,
};

struct CommandOptions {
  std::filesystem::path config;
  std::filesystem::path out = ".";
  std::optional<double> gamma;
  bool bisect = false;
  std::optional<int> grid_n;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<int> samples_per_cell;
};

/// What a command produced. Nothing here depends on wall-clock time, so equal
/// (config, seed) give byte-identical files.
struct CommandOutcome {
  int exit_code = kExitOk;
  Json report;
  std::optional<Json> certificate;
  std::vector<std::pair<std::string, std::string>> files;  // name, contents
  std::string summary;
};

const std::vector<std::string>& command_names();

/// Applies the CLI overrides to the parsed config.
void apply_overrides(ModelConfig& cfg, const CommandOptions& options);

CommandOutcome cmd_check(const ModelConfig& cfg);
CommandOutcome cmd_hinf(const ModelConfig& cfg, bool radius_only = false);
CommandOutcome cmd_grid_cert(const ModelConfig& cfg);
CommandOutcome cmd_lift(const ModelConfig& cfg);
CommandOutcome cmd_simulate(const ModelConfig& cfg);
CommandOutcome cmd_ncs_build(const ModelConfig& cfg);

/// Loads the config, runs `verb`, writes report.json (and certificate.json,
/// CSVs) under options.out, prints the summary. Returns the exit code.
int run_command(const std::string& verb, const CommandOptions& options,
                std::ostream& out, std::ostream& err);

}  // namespace mjrobust
