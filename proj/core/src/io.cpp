#include "mpeig/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include "json_out.hpp"
#include "mpeig/error.hpp"

namespace mpeig {

using detail::Json;

namespace {

// JSON pointer -> line of the value, from a light scan of the raw text.
std::map<std::string, int> value_lines(const std::string& text) {
  struct Frame {
    bool object = false;
    std::string key;
    int index = 0;
    bool expect_key = false;
  };
  std::map<std::string, int> lines;
  std::vector<Frame> stack;
  int line = 1;
  auto path = [&] {
    std::string out;
    for (const Frame& f : stack) out += "/" + (f.object ? f.key : std::to_string(f.index));
    return out;
  };
  auto record = [&] { lines.emplace(path(), line); };
  const std::size_t n = text.size();
  for (std::size_t i = 0; i < n; ++i) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
    } else if (c == '"') {
      std::string s;
      for (++i; i < n && text[i] != '"'; ++i) {
        if (text[i] == '\\' && i + 1 < n) ++i;
        if (text[i] == '\n') ++line;
        s += text[i];
      }
      if (!stack.empty() && stack.back().object && stack.back().expect_key) {
        stack.back().key = s;
        stack.back().expect_key = false;
      } else {
        record();
      }
    } else if (c == '{' || c == '[') {
      record();
      stack.push_back({c == '{', {}, 0, c == '{'});
    } else if (c == '}' || c == ']') {
      if (!stack.empty()) stack.pop_back();
    } else if (c == ',') {
      if (!stack.empty()) {
        if (stack.back().object) {
          stack.back().expect_key = true;
        } else {
          ++stack.back().index;
        }
      }
    } else if (c != ':' && c != ' ' && c != '\t' && c != '\r') {
      record();
      while (i + 1 < n && std::string_view(",]}\n \t\r").find(text[i + 1]) == std::string_view::npos) {
        ++i;
      }
    }
  }
  return lines;
}

class Reader {
 public:
  Reader(std::string source, std::map<std::string, int> lines)
      : source_(std::move(source)), lines_(std::move(lines)) {}

  [[noreturn]] void fail(const std::string& ptr, const std::string& msg) const {
    std::string where = source_;
    // Fall back to the nearest enclosing entry with a known line.
    std::string probe = ptr;
    while (true) {
      auto it = lines_.find(probe);
      if (it != lines_.end()) {
        where += ":" + std::to_string(it->second);
        break;
      }
      const auto cut = probe.find_last_of('/');
      if (cut == std::string::npos || probe.empty()) break;
      probe.resize(cut);
    }
    const std::string name = ptr.empty() ? "(root)" : ptr.substr(1);
    throw ValidationError(where + ": " + name + ": " + msg);
  }

  void only_keys(const Json& obj, const std::string& ptr,
                 std::initializer_list<const char*> allowed) const {
    for (const auto& [key, value] : obj.items()) {
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; })) {
        fail(ptr + "/" + key, "unknown key");
      }
    }
  }

  const Json& object(const Json& parent, const std::string& ptr, const char* key) const {
    const std::string at = ptr + "/" + key;
    if (!parent.contains(key)) fail(ptr, std::string("missing key '") + key + "'");
    const Json& j = parent.at(key);
    if (!j.is_object()) fail(at, "expected an object");
    return j;
  }

  double number(const Json& parent, const std::string& ptr, const char* key,
                std::optional<double> fallback = std::nullopt) const {
    const std::string at = ptr + "/" + key;
    if (!parent.contains(key)) {
      if (fallback) return *fallback;
      fail(ptr, std::string("missing key '") + key + "'");
    }
    const Json& j = parent.at(key);
    if (!j.is_number()) fail(at, "expected a number");
    const double x = j.get<double>();
    if (!std::isfinite(x)) fail(at, "must be finite");
    return x;
  }

  long long integer(const Json& parent, const std::string& ptr, const char* key,
                    std::optional<long long> fallback = std::nullopt) const {
    const std::string at = ptr + "/" + key;
    if (!parent.contains(key)) {
      if (fallback) return *fallback;
      fail(ptr, std::string("missing key '") + key + "'");
    }
    const Json& j = parent.at(key);
    if (!j.is_number_integer()) fail(at, "expected an integer");
    return j.get<long long>();
  }

  std::uint64_t unsigned64(const Json& parent, const std::string& ptr, const char* key,
                           std::uint64_t fallback) const {
    if (!parent.contains(key)) return fallback;
    const Json& j = parent.at(key);
    if (!j.is_number_unsigned()) fail(ptr + "/" + key, "expected a non-negative integer");
    return j.get<std::uint64_t>();
  }

  std::string string(const Json& parent, const std::string& ptr, const char* key,
                     std::optional<std::string> fallback = std::nullopt) const {
    if (!parent.contains(key)) {
      if (fallback) return *fallback;
      fail(ptr, std::string("missing key '") + key + "'");
    }
    const Json& j = parent.at(key);
    if (!j.is_string()) fail(ptr + "/" + key, "expected a string");
    return j.get<std::string>();
  }

  bool boolean(const Json& parent, const std::string& ptr, const char* key, bool fallback) const {
    if (!parent.contains(key)) return fallback;
    const Json& j = parent.at(key);
    if (!j.is_boolean()) fail(ptr + "/" + key, "expected true or false");
    return j.get<bool>();
  }

  template <class T>
  std::vector<T> array(const Json& parent, const std::string& ptr, const char* key) const {
    const std::string at = ptr + "/" + key;
    if (!parent.contains(key)) fail(ptr, std::string("missing key '") + key + "'");
    const Json& j = parent.at(key);
    if (!j.is_array()) fail(at, "expected an array");
    std::vector<T> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
      const Json& e = j[i];
      if constexpr (std::is_integral_v<T>) {
        if (!e.is_number_integer()) fail(at + "/" + std::to_string(i), "expected an integer");
      } else {
        if (!e.is_number()) fail(at + "/" + std::to_string(i), "expected a number");
      }
      out.push_back(e.get<T>());
    }
    return out;
  }

 private:
  std::string source_;
  std::map<std::string, int> lines_;
};

void read_grid(const Reader& rd, const Json& j, const std::string& ptr, int& dim,
               std::vector<double>& lower, std::vector<double>& upper, std::vector<int>& n) {
  dim = static_cast<int>(rd.integer(j, ptr, "dim"));
  if (dim != 1 && dim != 2) rd.fail(ptr + "/dim", "must be 1 or 2");
  lower = rd.array<double>(j, ptr, "lower");
  upper = rd.array<double>(j, ptr, "upper");
  n = rd.array<int>(j, ptr, "n_per_axis");
  const auto d = static_cast<std::size_t>(dim);
  if (lower.size() != d) rd.fail(ptr + "/lower", "expected " + std::to_string(dim) + " entries");
  if (upper.size() != d) rd.fail(ptr + "/upper", "expected " + std::to_string(dim) + " entries");
  if (n.size() != d) rd.fail(ptr + "/n_per_axis", "expected " + std::to_string(dim) + " entries");
  for (std::size_t k = 0; k < d; ++k) {
    if (!(upper[k] > lower[k])) rd.fail(ptr + "/upper/" + std::to_string(k), "must exceed lower");
    if (n[k] < 2) rd.fail(ptr + "/n_per_axis/" + std::to_string(k), "must be >= 2");
  }
}

FieldSpec read_field_spec(const Reader& rd, const Json& parent, const std::string& ptr,
                          const char* key) {
  const std::string at = ptr + "/" + key;
  const Json& j = rd.object(parent, ptr, key);
  FieldSpec spec;
  const std::string kind = rd.string(j, at, "kind");
  if (kind == "constant") {
    rd.only_keys(j, at, {"kind", "value"});
    spec.kind = FieldSpec::Kind::kConstant;
    spec.value = rd.number(j, at, "value");
  } else if (kind == "expression") {
    rd.only_keys(j, at, {"kind", "value", "terms"});
    spec.kind = FieldSpec::Kind::kExpression;
    spec.value = rd.number(j, at, "value", 0.0);
    if (!j.contains("terms") || !j.at("terms").is_array()) rd.fail(at, "expected a 'terms' array");
    const Json& terms = j.at("terms");
    const auto names = preset_names();
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const std::string tp = at + "/terms/" + std::to_string(i);
      if (!terms[i].is_object()) rd.fail(tp, "expected an object");
      rd.only_keys(terms[i], tp, {"preset", "coefficient"});
      ExpressionTerm term;
      term.preset = rd.string(terms[i], tp, "preset");
      if (std::find(names.begin(), names.end(), term.preset) == names.end()) {
        std::string known;
        for (const auto& n : names) known += (known.empty() ? "" : ", ") + n;
        rd.fail(tp + "/preset", "unknown preset '" + term.preset + "' (known: " + known + ")");
      }
      term.coefficient = rd.number(terms[i], tp, "coefficient");
      spec.terms.push_back(term);
    }
  } else if (kind == "csv") {
    rd.only_keys(j, at, {"kind", "path"});
    spec.kind = FieldSpec::Kind::kCsv;
    spec.path = rd.string(j, at, "path");
  } else {
    rd.fail(at + "/kind", "expected 'constant', 'expression' or 'csv', got '" + kind + "'");
  }
  return spec;
}

Json field_spec_json(const FieldSpec& spec) {
  Json j;
  switch (spec.kind) {
    case FieldSpec::Kind::kConstant:
      j["kind"] = "constant";
      j["value"] = spec.value;
      break;
    case FieldSpec::Kind::kExpression: {
      j["kind"] = "expression";
      j["value"] = spec.value;
      Json terms = Json::array();
      for (const auto& t : spec.terms) terms.push_back({{"preset", t.preset}, {"coefficient", t.coefficient}});
      j["terms"] = terms;
      break;
    }
    case FieldSpec::Kind::kCsv:
      j["kind"] = "csv";
      j["path"] = spec.path;
      break;
  }
  return j;
}

Json grid_json(int dim, const std::vector<double>& lower, const std::vector<double>& upper,
               const std::vector<int>& n) {
  Json j;
  j["dim"] = dim;
  j["lower"] = lower;
  j["upper"] = upper;
  j["n_per_axis"] = n;
  return j;
}

GridPtr grid_from(int dim, const std::vector<double>& lower, const std::vector<double>& upper,
                  const std::vector<int>& n) {
  return build_grid(dim, lower, upper, n);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& raw, bool& ok) {
  std::string s = raw;
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && s[b] == ' ') ++b;
  if (b < s.size() && s[b] == '+') ++b;
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data() + b, s.data() + s.size(), x);
  ok = ec == std::errc() && ptr == s.data() + s.size() && b < s.size();
  return x;
}

Field read_field_csv(const std::filesystem::path& file, const GridPtr& grid) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open coefficient file " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(file.string() + ":1: missing header row");
  const std::size_t cols = static_cast<std::size_t>(grid->dim) + 1;
  if (split_csv_line(line).size() != cols) {
    throw ValidationError(file.string() + ":1: header must have " + std::to_string(cols) +
                          " columns (coordinates, value)");
  }
  std::vector<double> values;
  int lineno = 1;
  const double tol = 1e-9 * std::max(1.0, std::max(std::fabs(grid->upper[0]), std::fabs(grid->lower[0])));
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    const std::string where = file.string() + ":" + std::to_string(lineno) + ": ";
    if (cells.size() != cols) throw ValidationError(where + "expected " + std::to_string(cols) + " columns");
    std::vector<double> row(cols);
    for (std::size_t k = 0; k < cols; ++k) {
      bool ok = false;
      row[k] = parse_double(cells[k], ok);
      if (!ok) throw ValidationError(where + "cannot parse '" + cells[k] + "' as a number");
    }
    const std::size_t node = values.size();
    if (node >= grid->size()) throw ValidationError(where + "more rows than grid nodes");
    for (int k = 0; k < grid->dim; ++k) {
      if (std::fabs(row[static_cast<std::size_t>(k)] - grid->nodes[node][k]) > tol) {
        throw ValidationError(where + "coordinates do not match grid node " + std::to_string(node));
      }
    }
    values.push_back(row.back());
  }
  if (values.size() != grid->size()) {
    throw ValidationError(file.string() + ": expected " + std::to_string(grid->size()) +
                          " rows, found " + std::to_string(values.size()));
  }
  return Field(grid, std::move(values));
}

}  // namespace

const char* to_string(Task task) {
  switch (task) {
    case Task::kSolve:
      return "solve";
    case Task::kSpectrum:
      return "spectrum";
    case Task::kVerify:
      return "verify";
    case Task::kOracle:
      return "oracle";
  }
  return "solve";
}

Task task_from_string(const std::string& name) {
  for (Task t : {Task::kSolve, Task::kSpectrum, Task::kVerify, Task::kOracle}) {
    if (name == to_string(t)) return t;
  }
  throw ValidationError("unknown task '" + name + "' (expected solve, spectrum, verify or oracle)");
}

std::vector<std::string> preset_names() { return {"one", "quadratic_well", "bump", "ramp"}; }

double preset_value(const std::string& name, const Grid& grid, const Point& x) {
  std::array<double, 2> xi{0.0, 0.0};
  for (int k = 0; k < grid.dim; ++k) xi[k] = (x[k] - grid.lower[k]) / (grid.upper[k] - grid.lower[k]);
  if (name == "one") return 1.0;
  if (name == "quadratic_well") {
    double v = 0.0;
    for (int k = 0; k < grid.dim; ++k) v += (2.0 * xi[k] - 1.0) * (2.0 * xi[k] - 1.0);
    return v;
  }
  if (name == "bump") {
    double v = 1.0;
    for (int k = 0; k < grid.dim; ++k) v *= std::sin(std::numbers::pi * xi[k]);
    return v;
  }
  if (name == "ramp") return xi[0];
  throw ValidationError("unknown preset '" + name + "'");
}

GridPtr build_grid(const RunConfig& cfg) {
  return grid_from(cfg.dim, cfg.lower, cfg.upper, cfg.n_per_axis);
}

Field evaluate_field(const FieldSpec& spec, const GridPtr& grid,
                     const std::filesystem::path& base_dir) {
  switch (spec.kind) {
    case FieldSpec::Kind::kConstant:
      return Field(grid, spec.value);
    case FieldSpec::Kind::kExpression: {
      Field f(grid, spec.value);
      for (std::size_t i = 0; i < grid->size(); ++i) {
        for (const auto& t : spec.terms) f[i] += t.coefficient * preset_value(t.preset, *grid, grid->nodes[i]);
      }
      return f;
    }
    case FieldSpec::Kind::kCsv: {
      std::filesystem::path file(spec.path);
      if (file.is_relative()) file = base_dir / file;
      return read_field_csv(file, grid);
    }
  }
  return Field(grid, 0.0);
}

RunConfig parse_config(const std::string& text, const std::string& source,
                       const std::filesystem::path& base_dir) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t end = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(end), '\n');
    std::string what = e.what();
    const auto cut = what.find("syntax error");
    if (cut != std::string::npos) what = what.substr(cut);
    throw ValidationError(source + ":" + std::to_string(line) + ": " + what);
  }
  const Reader rd(source, value_lines(text));
  if (!j.is_object()) rd.fail("", "expected a JSON object");
  rd.only_keys(j, "", {"task", "grid", "s", "p", "V", "g", "operator_mode", "solver", "seed",
                       "output_dir", "kernel_cache_dir", "oracle"});

  RunConfig cfg;
  cfg.base_dir = base_dir;
  const std::string task = rd.string(j, "", "task");
  try {
    cfg.task = task_from_string(task);
  } catch (const ValidationError& e) {
    rd.fail("/task", e.what());
  }

  const Json& grid = rd.object(j, "", "grid");
  rd.only_keys(grid, "/grid", {"dim", "lower", "upper", "n_per_axis"});
  read_grid(rd, grid, "/grid", cfg.dim, cfg.lower, cfg.upper, cfg.n_per_axis);

  cfg.s = rd.number(j, "", "s");
  cfg.p = rd.number(j, "", "p");
  if (!(cfg.s > 0.0 && cfg.s < 1.0)) rd.fail("/s", "must satisfy 0 < s < 1");
  if (!(cfg.p > 1.0)) rd.fail("/p", "must satisfy p > 1");
  cfg.V = read_field_spec(rd, j, "", "V");
  cfg.g = read_field_spec(rd, j, "", "g");
  const std::string mode = rd.string(j, "", "operator_mode", "mixed");
  try {
    cfg.mode = operator_mode_from_string(mode);
  } catch (const ValidationError& e) {
    rd.fail("/operator_mode", e.what());
  }

  cfg.seed = rd.unsigned64(j, "", "seed", 1);
  if (j.contains("solver")) {
    const Json& s = rd.object(j, "", "solver");
    rd.only_keys(s, "/solver", {"max_iters", "tol_quotient", "tol_residual", "step0", "backtrack",
                                "armijo", "restarts"});
    SolverConfig d;
    auto& c = cfg.solver;
    const long long iters = rd.integer(s, "/solver", "max_iters", d.max_iters);
    if (iters < 1 || iters > 1'000'000'000) rd.fail("/solver/max_iters", "must lie in [1, 1e9]");
    c.max_iters = static_cast<int>(iters);
    c.tol_quotient = rd.number(s, "/solver", "tol_quotient", d.tol_quotient);
    c.tol_residual = rd.number(s, "/solver", "tol_residual", d.tol_residual);
    c.step0 = rd.number(s, "/solver", "step0", d.step0);
    c.backtrack = rd.number(s, "/solver", "backtrack", d.backtrack);
    c.armijo = rd.number(s, "/solver", "armijo", d.armijo);
    const long long restarts = rd.integer(s, "/solver", "restarts", d.restarts);
    if (restarts < 1 || restarts > 100000) rd.fail("/solver/restarts", "must lie in [1, 100000]");
    c.restarts = static_cast<int>(restarts);
  }
  cfg.solver.seed = cfg.seed;
  try {
    cfg.solver.validate();
  } catch (const ValidationError& e) {
    rd.fail("/solver", e.what());
  }

  cfg.output_dir = rd.string(j, "", "output_dir", "out");
  cfg.kernel_cache_dir = rd.string(j, "", "kernel_cache_dir", "");

  if (j.contains("oracle")) {
    const Json& o = rd.object(j, "", "oracle");
    rd.only_keys(o, "/oracle", {"enabled", "brute_force_restarts", "brute_force_budget", "cases"});
    cfg.oracle_enabled = rd.boolean(o, "/oracle", "enabled", true);
    const long long r = rd.integer(o, "/oracle", "brute_force_restarts", cfg.brute_force_restarts);
    if (r < 1 || r > 1'000'000) rd.fail("/oracle/brute_force_restarts", "must lie in [1, 1e6]");
    cfg.brute_force_restarts = static_cast<int>(r);
    cfg.brute_force_budget = static_cast<long>(rd.integer(o, "/oracle", "brute_force_budget", cfg.brute_force_budget));
    if (cfg.brute_force_budget < 1) rd.fail("/oracle/brute_force_budget", "must be >= 1");
    if (o.contains("cases")) {
      const Json& cases = o.at("cases");
      if (!cases.is_array()) rd.fail("/oracle/cases", "expected an array");
      for (std::size_t i = 0; i < cases.size(); ++i) {
        const std::string cp = "/oracle/cases/" + std::to_string(i);
        if (!cases[i].is_object()) rd.fail(cp, "expected an object");
        rd.only_keys(cases[i], cp, {"id", "dim", "lower", "upper", "n_per_axis"});
        OracleCase c;
        c.id = rd.string(cases[i], cp, "id");
        read_grid(rd, cases[i], cp, c.dim, c.lower, c.upper, c.n_per_axis);
        for (const auto& prev : cfg.oracle_cases) {
          if (prev.id == c.id) rd.fail(cp + "/id", "duplicate case id '" + c.id + "'");
        }
        cfg.oracle_cases.push_back(std::move(c));
      }
    }
  }

  // Coefficients are checked on the main grid and on every oracle grid.
  auto check_fields = [&](const GridPtr& g, const std::string& where) {
    Field V, gf;
    try {
      V = evaluate_field(cfg.V, g, cfg.base_dir);
    } catch (const ValidationError& e) {
      rd.fail("/V", e.what());
    }
    try {
      gf = evaluate_field(cfg.g, g, cfg.base_dir);
    } catch (const ValidationError& e) {
      rd.fail("/g", e.what());
    }
    for (std::size_t i = 0; i < g->size(); ++i) {
      if (!(std::isfinite(V[i]) && V[i] >= 0.0)) {
        rd.fail("/V", "potential V must be finite and >= 0; violated at node " + std::to_string(i) +
                          where + " (value " + format_double(V[i]) + ")");
      }
      if (!(std::isfinite(gf[i]) && gf[i] > 0.0)) {
        rd.fail("/g", "weight g must be finite and > 0; violated at node " + std::to_string(i) +
                          where + " (value " + format_double(gf[i]) + ")");
      }
    }
  };
  check_fields(build_grid(cfg), "");
  for (std::size_t i = 0; i < cfg.oracle_cases.size(); ++i) {
    const auto& c = cfg.oracle_cases[i];
    if (cfg.V.kind == FieldSpec::Kind::kCsv || cfg.g.kind == FieldSpec::Kind::kCsv) {
      rd.fail("/oracle/cases/" + std::to_string(i), "oracle cases require constant or expression V and g");
    }
    check_fields(grid_from(c.dim, c.lower, c.upper, c.n_per_axis), " of oracle case '" + c.id + "'");
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + file.string());
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw IoError("cannot read config file " + file.string());
  return parse_config(os.str(), file.string(), file.parent_path());
}

std::string serialize_config(const RunConfig& cfg) {
  Json j;
  j["task"] = to_string(cfg.task);
  j["grid"] = grid_json(cfg.dim, cfg.lower, cfg.upper, cfg.n_per_axis);
  j["s"] = cfg.s;
  j["p"] = cfg.p;
  j["V"] = field_spec_json(cfg.V);
  j["g"] = field_spec_json(cfg.g);
  j["operator_mode"] = to_string(cfg.mode);
  Json s;
  s["max_iters"] = cfg.solver.max_iters;
  s["tol_quotient"] = cfg.solver.tol_quotient;
  s["tol_residual"] = cfg.solver.tol_residual;
  s["step0"] = cfg.solver.step0;
  s["backtrack"] = cfg.solver.backtrack;
  s["armijo"] = cfg.solver.armijo;
  s["restarts"] = cfg.solver.restarts;
  j["solver"] = s;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["kernel_cache_dir"] = cfg.kernel_cache_dir;
  Json o;
  o["enabled"] = cfg.oracle_enabled;
  o["brute_force_restarts"] = cfg.brute_force_restarts;
  o["brute_force_budget"] = cfg.brute_force_budget;
  Json cases = Json::array();
  for (const auto& c : cfg.oracle_cases) {
    Json cj;
    cj["id"] = c.id;
    const Json grid = grid_json(c.dim, c.lower, c.upper, c.n_per_axis);
    for (const auto& [k, v] : grid.items()) cj[k] = v;
    cases.push_back(cj);
  }
  o["cases"] = cases;
  j["oracle"] = o;
  return detail::dump_json(j);
}

Problem build_problem(const RunConfig& cfg) { return build_problem(cfg, build_grid(cfg)); }

Problem build_problem(const RunConfig& cfg, const GridPtr& grid) {
  Field V = evaluate_field(cfg.V, grid, cfg.base_dir);
  Field g = evaluate_field(cfg.g, grid, cfg.base_dir);
  KernelPtr kernel;
  if (cfg.mode != OperatorMode::kLocalOnly) {
    if (!cfg.kernel_cache_dir.empty()) {
      std::filesystem::path dir(cfg.kernel_cache_dir);
      if (dir.is_relative()) dir = cfg.base_dir / dir;
      kernel = cached_weights(grid, cfg.s, cfg.p, dir);
    } else {
      kernel = build_weights(grid, cfg.s, cfg.p);
    }
  }
  return make_problem(grid, cfg.s, cfg.p, std::move(V), std::move(g), cfg.mode, kernel);
}

std::string format_double(double x) {
  if (x == 0.0) return std::signbit(x) ? "-0" : "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string fields_csv(const Grid& grid, const std::vector<std::string>& names,
                       const std::vector<const Field*>& fields) {
  if (names.size() != fields.size()) throw ValidationError("one column name per field required");
  std::string out = grid.dim == 1 ? "x" : "x,y";
  for (const auto& n : names) out += "," + n;
  out += '\n';
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out += format_double(grid.nodes[i][0]);
    if (grid.dim == 2) out += "," + format_double(grid.nodes[i][1]);
    for (const Field* f : fields) out += "," + format_double((*f)[i]);
    out += '\n';
  }
  return out;
}

namespace detail {

namespace {

void dump_into(const Json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close(static_cast<std::size_t>(indent), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(k).dump() + ": ";
        dump_into(v, out, indent + 2);
      }
      out += "\n" + close + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        dump_into(j[i], out, indent + 2);
      }
      out += "\n" + close + "]";
      return;
    }
    case Json::value_t::number_float: {
      const double x = j.get<double>();
      if (!std::isfinite(x)) {
        out += "null";
        return;
      }
      std::string s = format_double(x);
      // Keep floats recognisable as floats.
      if (s.find_first_of(".eE") == std::string::npos) s += ".0";
      out += s;
      return;
    }
    default:
      out += j.dump();
      return;
  }
}

}  // namespace

std::string dump_json(const Json& j) {
  std::string out;
  dump_into(j, out, 0);
  out += '\n';
  return out;
}

void write_file(const std::filesystem::path& file, const std::string& bytes) {
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + file.string() + " for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  os.close();
  if (!os) throw IoError("failed writing " + file.string());
}

}  // namespace detail

}  // namespace mpeig
