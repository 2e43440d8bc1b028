#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mpeig/eigensolver.hpp"

namespace mpeig {

enum class Task { kSolve, kSpectrum, kVerify, kOracle };

const char* to_string(Task task);
Task task_from_string(const std::string& name);

/// Named coefficient fields usable in expressions. Coordinates are mapped to
/// the unit box first, xi_k = (x_k - lower_k) / (upper_k - lower_k):
///   one             1
///   quadratic_well  sum_k (2 xi_k - 1)^2
///   bump            prod_k sin(pi xi_k)
///   ramp            xi_0
std::vector<std::string> preset_names();
double preset_value(const std::string& name, const Grid& grid, const Point& x);

struct ExpressionTerm {
  std::string preset;
  double coefficient = 0.0;
  bool operator==(const ExpressionTerm&) const = default;
};

/// Coefficient field description:
///   constant     value
///   expression   value + sum coefficient * preset(x)
///   csv          one row per node, coordinates then the value, with header
struct FieldSpec {
  enum class Kind { kConstant, kExpression, kCsv };
  Kind kind = Kind::kConstant;
  double value = 0.0;
  std::vector<ExpressionTerm> terms;
  std::string path;
  bool operator==(const FieldSpec&) const = default;
};

/// A grid other than the main one, compared by the oracle command.
struct OracleCase {
  std::string id;
  int dim = 1;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<int> n_per_axis;
  bool operator==(const OracleCase&) const = default;
};

struct RunConfig {
  Task task = Task::kSolve;
  int dim = 2;
  std::vector<double> lower{0.0, 0.0};
  std::vector<double> upper{1.0, 1.0};
  std::vector<int> n_per_axis{24, 24};
  double s = 0.5;
  double p = 1.5;
  FieldSpec V{FieldSpec::Kind::kConstant, 0.0, {}, {}};
  FieldSpec g{FieldSpec::Kind::kConstant, 1.0, {}, {}};
  OperatorMode mode = OperatorMode::kMixed;
  SolverConfig solver;
  /// Mirrors solver.seed; the top-level value wins on load.
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  /// Empty disables the kernel cache.
  std::string kernel_cache_dir;
  bool oracle_enabled = true;
  int brute_force_restarts = 20;
  long brute_force_budget = 2'000'000;
  std::vector<OracleCase> oracle_cases;
  /// Directory that relative csv paths resolve against. Not serialized.
  std::filesystem::path base_dir;

  bool operator==(const RunConfig&) const = default;
};

/// Parses and validates a JSON run config. Errors carry "<source>:<line>:"
/// and the JSON path of the offending entry. Coefficient fields are
/// evaluated on the grid so that V >= 0 and g > 0 are checked here.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>",
                       const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& file);
/// Canonical JSON with every field present.
std::string serialize_config(const RunConfig& cfg);

GridPtr build_grid(const RunConfig& cfg);
Field evaluate_field(const FieldSpec& spec, const GridPtr& grid,
                     const std::filesystem::path& base_dir);
/// Grid, coefficients and kernel (through the cache when configured).
Problem build_problem(const RunConfig& cfg);
Problem build_problem(const RunConfig& cfg, const GridPtr& grid);

/// Shortest text that carries 17 significant digits: std::to_chars general
/// format, '.' decimal point, independent of locale.
std::string format_double(double x);

/// Node coordinates and one column per field, header row, LF endings.
std::string fields_csv(const Grid& grid, const std::vector<std::string>& names,
                       const std::vector<const Field*>& fields);

enum ExitCode : int { kExitSuccess = 0, kExitCheckFailure = 1, kExitValidation = 2, kExitIo = 3 };

struct CommandResult {
  int exit_code = kExitSuccess;
  std::vector<std::filesystem::path> files;
  /// One-line human summary.
  std::string summary;
};

/// eigenpair.json and eigenfunction.csv. Exit 1 when the solve did not converge.
CommandResult cmd_solve(const RunConfig& cfg);
/// spectrum.json, eigenfunction1.csv, eigenfunction2.csv.
CommandResult cmd_spectrum(const RunConfig& cfg);
/// report.json; exit 1 iff an applicable check fails.
CommandResult cmd_verify(const RunConfig& cfg);
/// oracle.json comparing the solver with the dense (p = 2) or brute-force
/// (at most 10 nodes) oracle on the main grid and every oracle case.
CommandResult cmd_oracle(const RunConfig& cfg);

/// Dispatches on cfg.task.
CommandResult run_task(const RunConfig& cfg);

/// Environment variable that overrides the output directory.
inline constexpr const char* kOutputDirEnv = "MPEIG_OUT_DIR";

}  // namespace mpeig
