#include <algorithm>
#include <cmath>
#include <filesystem>

#include "json_out.hpp"
#include "mpeig/error.hpp"
#include "mpeig/io.hpp"
#include "mpeig/oracle.hpp"
#include "mpeig/properties.hpp"

namespace mpeig {

using detail::Json;

namespace {

std::filesystem::path prepare_dir(const RunConfig& cfg) {
  const std::filesystem::path dir(cfg.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

Json labels_json(const Problem& prob) {
  Json labels = Json::array();
  for (const auto& l : problem_labels(prob)) labels.push_back(l);
  return labels;
}

Json header_json(const RunConfig& cfg, const Problem& prob) {
  Json j;
  j["task"] = to_string(cfg.task);
  j["labels"] = labels_json(prob);
  j["operator_mode"] = to_string(prob.mode);
  j["dim"] = prob.grid->dim;
  j["nodes"] = prob.size();
  j["s"] = prob.s;
  j["p"] = prob.p;
  j["seed"] = cfg.seed;
  return j;
}

Json forms_json(const FormBreakdown& f) {
  return Json{{"local", f.local}, {"nonlocal", f.nonlocal}, {"potential", f.potential}, {"weight", f.weight}};
}

Json pair_json(const Problem& prob, const EigenPair& pair) {
  Json j;
  j["lambda"] = pair.lambda;
  j["residual"] = pair.residual;
  j["iterations"] = pair.iterations;
  j["converged"] = pair.converged;
  j["notes"] = pair.notes;
  if (pair.u.size() == prob.size()) j["forms"] = forms_json(evaluate_forms(prob, pair.u));
  return j;
}

Json trace_json(const std::vector<double>& trace) {
  Json j = Json::array();
  for (double x : trace) j.push_back(x);
  return j;
}

double relative_error(double value, double reference) {
  return std::fabs(value - reference) / std::fabs(reference);
}

// ||A u - lambda B u||_inf / max(1, |lambda|) with u scaled to u^T B u = 1.
double oracle_residual(const DenseSystem& sys, const EigenPair& pair) {
  return dense_residual(sys, pair.lambda, pair.u.values) / std::max(1.0, std::fabs(pair.lambda));
}

void require_oracle_gate(const Problem& prob, const std::string& id) {
  if (prob.p == 2.0 || prob.size() <= kBruteForceMaxNodes) return;
  throw ValidationError("no oracle applies to case '" + id + "': the dense oracle requires p = 2 (got p = " +
                        format_double(prob.p) + ") and the brute-force oracle requires at most " +
                        std::to_string(kBruteForceMaxNodes) + " nodes (grid has " +
                        std::to_string(prob.size()) + ")");
}

}  // namespace

CommandResult cmd_solve(const RunConfig& cfg) {
  if (cfg.task != Task::kSolve) throw ValidationError("cmd_solve requires task = solve");
  const Problem prob = build_problem(cfg);
  const EigenPair pair = solve_principal(prob, cfg.solver);
  const auto dir = prepare_dir(cfg);

  Json j = header_json(cfg, prob);
  const Json body = pair_json(prob, pair);
  for (const auto& [k, v] : body.items()) j[k] = v;
  CommandResult out;
  out.files = {dir / "eigenpair.json", dir / "eigenfunction.csv"};
  detail::write_file(out.files[0], detail::dump_json(j));
  detail::write_file(out.files[1], fields_csv(*prob.grid, {"u"}, {&pair.u}));
  out.exit_code = pair.converged ? kExitSuccess : kExitCheckFailure;
  out.summary = "lambda1 = " + format_double(pair.lambda) + (pair.converged ? "" : " (not converged)");
  return out;
}

CommandResult cmd_spectrum(const RunConfig& cfg) {
  if (cfg.task != Task::kSpectrum) throw ValidationError("cmd_spectrum requires task = spectrum");
  const Problem prob = build_problem(cfg);
  const EigenPair first = solve_principal(prob, cfg.solver);
  EigenPair second;
  const bool have_second = first.converged;
  if (have_second) {
    second = solve_second(prob, cfg.solver, first);
  } else {
    second.notes = "not computed: principal pair did not converge";
  }
  const auto dir = prepare_dir(cfg);

  Json j = header_json(cfg, prob);
  j["lambda1"] = pair_json(prob, first);
  Json l2 = pair_json(prob, second);
  l2["estimate"] = "minimax upper bound over symmetric circles";
  l2["computed"] = have_second;
  j["lambda2"] = l2;
  if (have_second) j["gap"] = second.lambda - first.lambda;
  j["principal_trace"] = trace_json(first.trace);
  j["minimax_trace"] = trace_json(second.trace);

  if (cfg.oracle_enabled) {
    Json o;
    if (prob.p == 2.0) {
      const DenseSystem sys = assemble_p2(prob);
      const auto ref = smallest_eigenpairs(sys, std::min<std::size_t>(2, sys.n));
      o["method"] = "dense";
      o["oracle_lambda1"] = ref[0].lambda;
      o["relative_error1"] = relative_error(first.lambda, ref[0].lambda);
      o["residual1"] = oracle_residual(sys, first);
      if (ref.size() > 1) {
        o["oracle_lambda2"] = ref[1].lambda;
        if (have_second) o["relative_error2"] = relative_error(second.lambda, ref[1].lambda);
      }
    } else if (prob.size() <= kBruteForceMaxNodes) {
      const auto bf = brute_force_quotient_min(prob, cfg.brute_force_restarts, cfg.brute_force_budget, cfg.seed);
      o["method"] = "brute_force";
      o["oracle_lambda1"] = bf.value;
      o["relative_error1"] = relative_error(first.lambda, bf.value);
      o["evaluations"] = bf.evaluations;
      o["exhausted"] = bf.exhausted;
    } else {
      o["method"] = "none";
      o["reason"] = "dense oracle requires p = 2; brute force requires at most " +
                    std::to_string(kBruteForceMaxNodes) + " nodes";
    }
    j["oracle"] = o;
  }

  CommandResult out;
  out.files = {dir / "spectrum.json", dir / "eigenfunction1.csv"};
  detail::write_file(out.files[0], detail::dump_json(j));
  detail::write_file(out.files[1], fields_csv(*prob.grid, {"u"}, {&first.u}));
  if (have_second) {
    out.files.push_back(dir / "eigenfunction2.csv");
    detail::write_file(out.files[2], fields_csv(*prob.grid, {"u"}, {&second.u}));
  }
  const bool ok = first.converged && second.converged;
  out.exit_code = ok ? kExitSuccess : kExitCheckFailure;
  out.summary = "lambda1 = " + format_double(first.lambda) +
                (have_second ? ", lambda2 = " + format_double(second.lambda) : "") +
                (ok ? "" : " (not converged)");
  return out;
}

CommandResult cmd_verify(const RunConfig& cfg) {
  if (cfg.task != Task::kVerify) throw ValidationError("cmd_verify requires task = verify");
  const Problem prob = build_problem(cfg);
  const SuiteResult suite = run_all(prob, cfg.solver);
  const auto dir = prepare_dir(cfg);

  Json j = header_json(cfg, prob);
  j["lambda1"] = pair_json(prob, suite.first);
  j["lambda2"] = pair_json(prob, suite.second);
  Json checks = Json::array();
  int failed = 0;
  for (const PropertyReport& r : suite.reports) {
    Json c;
    c["name"] = r.name;
    c["verdict"] = to_string(r.verdict);
    c["digest"] = r.digest;
    Json m = Json::object();
    for (const auto& [k, v] : r.measured) m[k] = v;
    c["measured"] = m;
    c["notes"] = r.notes;
    checks.push_back(c);
    if (r.verdict == Verdict::kFail) ++failed;
  }
  j["checks"] = checks;
  j["all_applicable_pass"] = failed == 0;

  CommandResult out;
  out.files = {dir / "report.json"};
  detail::write_file(out.files[0], detail::dump_json(j));
  out.exit_code = failed == 0 ? kExitSuccess : kExitCheckFailure;
  out.summary = std::to_string(suite.reports.size() - static_cast<std::size_t>(failed)) + "/" +
                std::to_string(suite.reports.size()) + " checks without failure";
  return out;
}

CommandResult cmd_oracle(const RunConfig& cfg) {
  if (cfg.task != Task::kOracle) throw ValidationError("cmd_oracle requires task = oracle");
  std::vector<std::pair<std::string, GridPtr>> grids{{"main", build_grid(cfg)}};
  for (const auto& c : cfg.oracle_cases) {
    grids.emplace_back(c.id, build_grid(c.dim, c.lower, c.upper, c.n_per_axis));
  }
  // Gate every case before any solve.
  for (const auto& [id, grid] : grids) {
    Problem shape;
    shape.grid = grid;
    shape.p = cfg.p;
    require_oracle_gate(shape, id);
  }

  Json cases = Json::array();
  Json labels = Json::array();
  double max_error = 0.0;
  bool all_agree = true;
  for (const auto& [id, grid] : grids) {
    const Problem prob = build_problem(cfg, grid);
    if (labels.empty()) labels = labels_json(prob);
    const EigenPair first = solve_principal(prob, cfg.solver);
    Json c;
    c["case"] = id;
    c["nodes"] = prob.size();
    c["dim"] = prob.grid->dim;
    if (prob.p == 2.0) {
      const DenseSystem sys = assemble_p2(prob);
      const auto ref = smallest_eigenpairs(sys, std::min<std::size_t>(2, sys.n));
      const double err1 = relative_error(first.lambda, ref[0].lambda);
      c["method"] = "dense";
      c["oracle_lambda"] = ref[0].lambda;
      c["solver_lambda"] = first.lambda;
      c["relative_error"] = err1;
      c["solver_residual"] = first.residual;
      c["oracle_residual"] = oracle_residual(sys, first);
      bool agree = first.converged && err1 <= kDenseLambda1Tolerance;
      max_error = std::max(max_error, err1);
      if (ref.size() > 1 && first.converged) {
        const EigenPair second = solve_second(prob, cfg.solver, first);
        const double err2 = relative_error(second.lambda, ref[1].lambda);
        c["oracle_lambda2"] = ref[1].lambda;
        c["solver_lambda2"] = second.lambda;
        c["relative_error2"] = err2;
        agree = agree && second.converged && err2 <= kDenseLambda2Tolerance;
      }
      c["agreement"] = agree;
      all_agree = all_agree && agree;
    } else {
      const auto bf = brute_force_quotient_min(prob, cfg.brute_force_restarts, cfg.brute_force_budget, cfg.seed);
      const double err = relative_error(first.lambda, bf.value);
      c["method"] = "brute_force";
      c["oracle_lambda"] = bf.value;
      c["solver_lambda"] = first.lambda;
      c["relative_error"] = err;
      c["solver_residual"] = first.residual;
      c["evaluations"] = bf.evaluations;
      c["exhausted"] = bf.exhausted;
      const bool agree = err <= kBruteForceTolerance;
      c["agreement"] = agree;
      max_error = std::max(max_error, err);
      all_agree = all_agree && agree;
    }
    c["converged"] = first.converged;
    cases.push_back(c);
  }
  const auto dir = prepare_dir(cfg);
  Json j;
  j["task"] = to_string(cfg.task);
  j["labels"] = labels;
  j["p"] = cfg.p;
  j["s"] = cfg.s;
  j["seed"] = cfg.seed;
  j["cases"] = cases;
  j["max_relative_error"] = max_error;
  j["all_agree"] = all_agree;

  CommandResult out;
  out.files = {dir / "oracle.json"};
  detail::write_file(out.files[0], detail::dump_json(j));
  out.exit_code = all_agree ? kExitSuccess : kExitCheckFailure;
  out.summary = std::to_string(grids.size()) + " case(s), max relative error " + format_double(max_error);
  return out;
}

CommandResult run_task(const RunConfig& cfg) {
  switch (cfg.task) {
    case Task::kSolve:
      return cmd_solve(cfg);
    case Task::kSpectrum:
      return cmd_spectrum(cfg);
    case Task::kVerify:
      return cmd_verify(cfg);
    case Task::kOracle:
      return cmd_oracle(cfg);
  }
  throw ValidationError("unknown task");
}

}  // namespace mpeig
