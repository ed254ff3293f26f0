#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "mjrobust/commands.hpp"

using namespace mjrobust;
namespace fs = std::filesystem;

namespace {

fs::path config(const std::string& name) { return fs::path(MJROBUST_CONFIG_DIR) / name; }

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("mjrobust_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Json example1_doc() { return load_json(config("example1_ncs.json")); }

}  // namespace

TEST(Config, ParsesExampleConfigs) {
  const auto c1 = load_config(config("example1_ncs.json"));
  EXPECT_TRUE(c1.is_ncs());
  EXPECT_TRUE(c1.mjls().is_finite());
  EXPECT_EQ(c1.mjls().n(), 2);
  const auto c2 = load_config(config("example2_ncs.json"));
  EXPECT_FALSE(c2.mjls().is_finite());
  EXPECT_EQ(*c2.analysis.gamma, 3.1);
  EXPECT_EQ(c2.simulation.deltas.size(), 3u);
}

TEST(Config, RowSumErrorNamesPath) {
  try {
    load_config(config("bad_row_sum.json"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "/chain/P/0");
    EXPECT_NE(std::string(e.what()).find("must sum to 1"), std::string::npos);
  }
}

TEST(Config, UnknownFieldRejected) {
  Json d = example1_doc();
  d["analysis"]["gama"] = 3.0;
  try {
    parse_config(d);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "/analysis/gama");
  }
}

TEST(Config, WrongModeCountRejected) {
  Json d = {{"chain", {{"type", "finite"}, {"pi", {0.5, 0.5}}, {"P", {{0.5, 0.5}, {0.5, 0.5}}}}},
            {"system", {{"A", {{{0.1}}}}}}};
  try {
    parse_config(d);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "/system/A");
  }
}

TEST(Config, KernelFieldForms) {
  Json d = {{"chain", {{"type", "kernel"}, {"builtin", "uniform"}, {"a", 0.0}, {"b", 1.0}}},
            {"system",
             {{"A", {{"breakpoints", {0.0, 0.5, 1.0}}, {"pieces", {{{0.1}}, {{0.2}}}}}},
              {"B", {{"constant", {{1.0}}}}},
              {"C", {{"constant", {{1.0}}}}}}}};
  const auto c = parse_config(d);
  EXPECT_EQ(c.mjls().A(0.75)(0, 0), 0.2);
  d["system"]["A"] = {{{0.1}}};
  EXPECT_THROW(parse_config(d), ConfigError);
}

TEST(Config, HashIsCanonical) {
  const auto a = parse_config(example1_doc());
  const auto b = parse_config(Json::parse(example1_doc().dump(4)));
  EXPECT_EQ(a.hash, b.hash);
  Json d = example1_doc();
  d["analysis"]["seed"] = 8;
  EXPECT_NE(parse_config(d).hash, a.hash);
}

TEST(Commands, CheckPassesExamples) {
  const auto r1 = cmd_check(load_config(config("example1_ncs.json")));
  EXPECT_EQ(r1.exit_code, kExitOk);
  const auto r2 = cmd_check(load_config(config("example2_ncs.json")));
  EXPECT_EQ(r2.exit_code, kExitOk);
  EXPECT_NE(r2.summary.find("mesh-certified"), std::string::npos);
}

TEST(Commands, CheckFailsOnUnreachableMode) {
  Json d = {{"chain", {{"type", "finite"}, {"pi", {1.0, 0.0}}, {"P", {{1.0, 0.0}, {1.0, 0.0}}}}},
            {"system", {{"A", {{{0.1}}, {{0.2}}}}}}};
  EXPECT_EQ(cmd_check(parse_config(d)).exit_code, kExitValidation);
}

TEST(Commands, HinfExampleOneBound) {
  const auto r = cmd_hinf(load_config(config("example1_ncs.json")));
  EXPECT_EQ(r.exit_code, kExitOk);
  EXPECT_NEAR(r.report["bound"].get<double>(), 0.6803, 5e-3);
  ASSERT_TRUE(r.certificate);
  EXPECT_EQ((*r.certificate)["source"], "finite-brl");
}

TEST(Commands, RadiusReportsBoundOnly) {
  const auto r = cmd_hinf(load_config(config("scalar_two_mode.json")), true);
  EXPECT_FALSE(r.report.contains("norm"));
  EXPECT_GT(r.report["bound"].get<double>(), 0.0);
}

TEST(Commands, GridCertOnFiniteConfigLifts) {
  auto cfg = load_config(config("example1_ncs.json"));
  cfg.analysis.gamma = 3.0;
  const auto r = cmd_grid_cert(cfg);
  EXPECT_EQ(r.exit_code, kExitOk) << r.summary;
  EXPECT_TRUE(r.report["finite_cross_check"]["passed"].get<bool>());
  EXPECT_GT(r.report["reduced_form_margin"].get<double>(), 0.0);
}

TEST(Commands, GridCertNoCertificateExitCode) {
  auto cfg = load_config(config("example1_ncs.json"));
  cfg.analysis.gamma = 1.0;
  const auto r = cmd_grid_cert(cfg);
  EXPECT_EQ(r.exit_code, kExitNoCertificate);
  EXPECT_NE(r.summary.find("not a disproof"), std::string::npos);
}

TEST(Commands, SimulateZeroDynamics) {
  Json d = {{"chain", {{"type", "finite"}, {"pi", {0.5, 0.5}}, {"P", {{0.5, 0.5}, {0.5, 0.5}}}}},
            {"system", {{"A", {{{0.0}}, {{0.0}}}}}},
            {"simulation", {{"runs", 3}, {"steps", 5}, {"x0", {1.0}}}}};
  const auto r = cmd_simulate(parse_config(d));
  ASSERT_EQ(r.files.size(), 2u);
  const auto& runs = r.files[1].second;
  std::istringstream in(runs);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "run,k,x1");
  while (std::getline(in, line)) {
    const auto k = std::stoi(line.substr(line.find(',') + 1));
    if (k >= 1) {
      EXPECT_EQ(line.substr(line.rfind(',') + 1), "0");
    }
  }
  EXPECT_TRUE(r.report["series"][0]["trivially_stable"].get<bool>());
}

TEST(Commands, RunCommandIsDeterministic) {
  CommandOptions o;
  o.config = config("example1_ncs.json");
  o.seed = 99;
  std::ostringstream out, err;
  const auto a = scratch("a"), b = scratch("b");
  o.out = a;
  ASSERT_EQ(run_command("simulate", o, out, err), kExitOk) << err.str();
  o.out = b;
  ASSERT_EQ(run_command("simulate", o, out, err), kExitOk);
  for (const char* f : {"report.json", "runs_delta0.csv", "runs_delta1.csv", "mean_delta2.csv"}) {
    const auto x = slurp(a / f);
    EXPECT_FALSE(x.empty()) << f;
    EXPECT_EQ(x, slurp(b / f)) << f;
  }
}

TEST(Commands, ValidationErrorWritesReport) {
  CommandOptions o;
  o.config = config("bad_row_sum.json");
  o.out = scratch("bad");
  std::ostringstream out, err;
  EXPECT_EQ(run_command("check", o, out, err), kExitValidation);
  const auto rep = load_json(o.out / "report.json");
  EXPECT_EQ(rep["error"]["path"], "/chain/P/0");
}

TEST(Commands, HinfOnKernelModelIsPrecondition) {
  CommandOptions o;
  o.config = config("example2_ncs.json");
  o.out = scratch("kernel_hinf");
  std::ostringstream out, err;
  EXPECT_EQ(run_command("hinf", o, out, err), kExitValidation);
}

TEST(Commands, NcsBuildWritesModel) {
  const auto r = cmd_ncs_build(load_config(config("example1_ncs.json")));
  ASSERT_EQ(r.files.size(), 1u);
  const auto model = parse_config(Json::parse(r.files[0].second));
  EXPECT_NEAR(spectral_radius_LA(MjlsModel::autonomous(model.mjls().chain(), model.mjls().a_field())),
              0.2655, 1e-3);
}
