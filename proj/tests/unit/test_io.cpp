#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "mpeig/error.hpp"
#include "mpeig/io.hpp"
#include "support.hpp"

namespace mpeig {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kConfigs = fs::path(MPEIG_SOURCE_DIR) / "configs";

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mpeig_test_io" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string message_of(const std::string& text, const std::string& source = "cfg.json") {
  try {
    parse_config(text, source);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

const char* kTiny = R"({
  "task": "solve",
  "grid": {"dim": 1, "lower": [0], "upper": [1], "n_per_axis": [8]},
  "s": 0.5,
  "p": 2,
  "V": {"kind": "constant", "value": 0},
  "g": {"kind": "constant", "value": 1}
})";

TEST(FormatDouble, SeventeenDigitsRoundTrip) {
  EXPECT_EQ(format_double(0.0), "0");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(-2.5), "-2.5");
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  for (double x : {std::acos(-1.0), 1e-300, -6.02214076e23, 61.180057334391165}) {
    EXPECT_EQ(std::strtod(format_double(x).c_str(), nullptr), x);
  }
}

TEST(Config, ShippedConfigsRoundTrip) {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(kConfigs)) {
    if (entry.path().extension() != ".json") continue;
    ++count;
    const RunConfig a = load_config(entry.path());
    const RunConfig b = parse_config(serialize_config(a), "serialized", a.base_dir);
    EXPECT_EQ(a, b) << entry.path();
    EXPECT_EQ(serialize_config(a), serialize_config(b));
  }
  EXPECT_GE(count, 6);
}

// Required keys on lines 2-7; extra entries start on line 8.
std::string config_with(const std::string& extra, const std::string& g = R"({"kind": "constant", "value": 1})",
                        int n = 8) {
  return "{\n"
         "  \"task\": \"solve\",\n"
         "  \"grid\": {\"dim\": 1, \"lower\": [0], \"upper\": [1], \"n_per_axis\": [" +
         std::to_string(n) + "]},\n"
         "  \"s\": 0.5,\n"
         "  \"p\": 2,\n"
         "  \"V\": {\"kind\": \"constant\", \"value\": 0},\n"
         "  \"g\": " + g + (extra.empty() ? "" : ",\n  " + extra) + "\n}";
}

TEST(Config, DefaultsAndSeed) {
  const RunConfig c = parse_config(config_with(R"("seed": 42)"));
  EXPECT_EQ(c.task, Task::kSolve);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.solver.seed, 42u);
  EXPECT_EQ(c.mode, OperatorMode::kMixed);
  EXPECT_EQ(c.output_dir, "out");
  EXPECT_EQ(c.solver.max_iters, SolverConfig{}.max_iters);
  EXPECT_TRUE(c.oracle_enabled);
}

TEST(Config, ErrorsNameLineAndPath) {
  std::string text = config_with("");
  text.replace(text.find("\"p\": 2"), 6, "\"p\": 0.5");
  std::string m = message_of(text);
  EXPECT_NE(m.find("cfg.json:5:"), std::string::npos) << m;
  EXPECT_NE(m.find(": p: must"), std::string::npos) << m;
  EXPECT_EQ(m.find("cfg.json", 1), std::string::npos) << m;

  m = message_of(config_with(R"("colour": 3)"));
  EXPECT_NE(m.find("cfg.json:8:"), std::string::npos) << m;
  EXPECT_NE(m.find("colour"), std::string::npos) << m;

  m = message_of(config_with(R"("solver": {"max_iters": 0})"));
  EXPECT_NE(m.find("cfg.json:8:"), std::string::npos) << m;
  EXPECT_NE(m.find(": solver/max_iters:"), std::string::npos) << m;

  m = message_of("{\n  \"p\": 2,\n  oops\n}");
  EXPECT_NE(m.find("cfg.json:3"), std::string::npos) << m;

  text = config_with("");
  text.replace(text.find("solve"), 5, "dance");
  m = message_of(text);
  EXPECT_NE(m.find("cfg.json:2:"), std::string::npos) << m;
  EXPECT_NE(m.find("dance"), std::string::npos) << m;

  m = message_of(R"({"p": 2})");
  EXPECT_NE(m.find("missing key 'task'"), std::string::npos) << m;
}

TEST(Config, NonPositiveWeightNamesTheNode) {
  EXPECT_EQ(message_of(config_with("", R"({"kind": "expression", "value": 0, "terms": [{"preset": "bump", "coefficient": 1}]})", 9)), "");
  const std::string m = message_of(
      config_with("", R"({"kind": "expression", "value": -0.5, "terms": [{"preset": "ramp", "coefficient": 1}]})", 9));
  EXPECT_NE(m.find("cfg.json:7:"), std::string::npos) << m;
  EXPECT_NE(m.find("node 0"), std::string::npos) << m;
  const std::string zero = message_of(config_with("", R"({"kind": "constant", "value": 0})"));
  EXPECT_NE(zero.find("node 0"), std::string::npos) << zero;
}

TEST(Config, NegativePotentialRejected) {
  std::string text = config_with("");
  text.replace(text.find("\"value\": 0}"), 11, "\"value\": -1}");
  const std::string m = message_of(text);
  EXPECT_NE(m.find("cfg.json:6:"), std::string::npos) << m;
  EXPECT_NE(m.find(": V: potential"), std::string::npos) << m;
}

TEST(Config, OracleCaseFieldsAreChecked) {
  const std::string m = message_of(config_with(
      R"("oracle": {"cases": [{"id": "wide", "dim": 1, "lower": [0], "upper": [2], "n_per_axis": [4]}]})",
      R"({"kind": "expression", "value": 1.5, "terms": [{"preset": "ramp", "coefficient": -1}]})"));
  EXPECT_EQ(m, "");
}

TEST(Config, CsvFields) {
  const fs::path dir = scratch("csv");
  const GridPtr g = test::line(4);
  Field w(g, 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 1.0 + static_cast<double>(i);
  {
    std::ofstream(dir / "g.csv", std::ios::binary) << fields_csv(*g, {"g"}, {&w});
  }
  const std::string text = config_with("", R"({"kind": "csv", "path": "g.csv"})", 4);
  const RunConfig cfg = parse_config(text, "cfg.json", dir);
  const Problem prob = build_problem(cfg);
  EXPECT_EQ(prob.g.values, w.values);

  {
    std::ofstream(dir / "g.csv", std::ios::binary) << "x,g\n0.2,1\n0.4,2\n0.6,0\n0.8,1\n";
  }
  std::string m;
  try {
    parse_config(text, "cfg.json", dir);
  } catch (const ValidationError& e) {
    m = e.what();
  }
  EXPECT_NE(m.find("node 2"), std::string::npos) << m;

  {
    std::ofstream(dir / "g.csv", std::ios::binary) << "x,g\n0.2,1\n0.45,2\n0.6,1\n0.8,1\n";
  }
  EXPECT_THROW(parse_config(text, "cfg.json", dir), ValidationError);
  fs::remove(dir / "g.csv");
  EXPECT_THROW(parse_config(text, "cfg.json", dir), IoError);
}

TEST(FieldsCsv, HeaderAndLineEndings) {
  const GridPtr g = test::square(2);
  const Field u(g, 0.5);
  const std::string csv = fields_csv(*g, {"u"}, {&u});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "x,y,u");
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST(Commands, SolveIsByteIdenticalAcrossRuns) {
  RunConfig cfg = parse_config(kTiny);
  cfg.output_dir = scratch("solve_a").string();
  const CommandResult a = cmd_solve(cfg);
  cfg.output_dir = scratch("solve_b").string();
  const CommandResult b = cmd_solve(cfg);
  EXPECT_EQ(a.exit_code, kExitSuccess);
  ASSERT_EQ(a.files.size(), 2u);
  for (std::size_t k = 0; k < a.files.size(); ++k) {
    EXPECT_EQ(slurp(a.files[k]), slurp(b.files[k]));
    EXPECT_EQ(slurp(a.files[k]).find('\r'), std::string::npos);
  }
  const json j = json::parse(slurp(a.files[0]));
  EXPECT_TRUE(j["converged"].get<bool>());
}

TEST(Commands, SpectrumCarriesOracleAndLabels) {
  RunConfig cfg = parse_config(kTiny);
  cfg.task = Task::kSpectrum;
  cfg.mode = OperatorMode::kLocalOnly;
  cfg.output_dir = scratch("spectrum").string();
  const CommandResult r = cmd_spectrum(cfg);
  EXPECT_EQ(r.exit_code, kExitSuccess);
  const json j = json::parse(slurp(r.files[0]));
  EXPECT_EQ(j["oracle"]["method"], "dense");
  EXPECT_LT(j["oracle"]["relative_error1"].get<double>(), 1e-6);
  EXPECT_GE(j["lambda2"]["lambda"].get<double>(), j["lambda1"]["lambda"].get<double>());
  bool tagged = false;
  for (const auto& l : j["labels"]) tagged = tagged || l.get<std::string>().find("non-paper") != std::string::npos;
  EXPECT_TRUE(tagged);
  EXPECT_EQ(r.files.size(), 3u);
}

TEST(Commands, VerifyOneDimensionalReportsNotApplicable) {
  RunConfig cfg = load_config(kConfigs / "default_1d.json");
  cfg.output_dir = scratch("verify_1d").string();
  const CommandResult r = cmd_verify(cfg);
  EXPECT_EQ(r.exit_code, kExitSuccess) << r.summary;
  const json j = json::parse(slurp(r.files.at(0)));
  bool moser_na = false;
  for (const auto& c : j["checks"]) {
    if (c["name"] == "moser_decay") moser_na = c["verdict"] == "not-applicable";
  }
  EXPECT_TRUE(moser_na);
  EXPECT_TRUE(j["all_applicable_pass"].get<bool>());
}

TEST(Commands, VerifyWithTinyIterationCapFails) {
  RunConfig cfg = load_config(kConfigs / "default_1d.json");
  cfg.solver.max_iters = 3;
  cfg.output_dir = scratch("verify_cap").string();
  EXPECT_EQ(cmd_verify(cfg).exit_code, kExitCheckFailure);
}

TEST(Commands, DenseOracleSuite) {
  RunConfig cfg = load_config(kConfigs / "oracle_p2.json");
  cfg.output_dir = scratch("oracle_p2").string();
  const CommandResult r = cmd_oracle(cfg);
  EXPECT_EQ(r.exit_code, kExitSuccess) << r.summary;
  const json j = json::parse(slurp(r.files.at(0)));
  EXPECT_LT(j["max_relative_error"].get<double>(), 1e-6);
  EXPECT_EQ(j["cases"].size(), 4u);
}

TEST(Commands, BruteForceOracle) {
  RunConfig cfg = load_config(kConfigs / "brute_1d.json");
  cfg.output_dir = scratch("oracle_bf").string();
  const CommandResult r = cmd_oracle(cfg);
  EXPECT_EQ(r.exit_code, kExitSuccess) << r.summary;
  const json j = json::parse(slurp(r.files.at(0)));
  ASSERT_EQ(j["cases"].size(), 1u);
  EXPECT_TRUE(j["cases"][0].contains("agreement"));
  EXPECT_TRUE(j["cases"][0]["agreement"].get<bool>());
}

TEST(Commands, OracleGatesAreExplained) {
  RunConfig cfg = load_config(kConfigs / "brute_1d.json");
  cfg.dim = 2;
  cfg.lower = {0.0, 0.0};
  cfg.upper = {1.0, 1.0};
  cfg.n_per_axis = {32, 32};
  cfg.output_dir = scratch("oracle_gate").string();
  try {
    cmd_oracle(cfg);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("p = 2"), std::string::npos) << m;
    EXPECT_NE(m.find("10 nodes"), std::string::npos) << m;
  }
}

TEST(Commands, RunTaskDispatches) {
  RunConfig cfg = parse_config(kTiny);
  cfg.task = Task::kSolve;
  cfg.output_dir = scratch("dispatch").string();
  const CommandResult r = run_task(cfg);
  EXPECT_TRUE(fs::exists(fs::path(cfg.output_dir) / "eigenpair.json"));
  EXPECT_EQ(r.exit_code, kExitSuccess);
}

}  // namespace
}  // namespace mpeig
