#include "rampc/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <utility>

#include "rampc/markov.hpp"

namespace rampc {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config: " + path + ": " + what);
}

void expect_object(const json& v, const std::string& path) {
  if (!v.is_object()) fail(path, "expected an object");
}

void expect_keys(const json& obj, const std::string& path,
                 std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) known = true;
    }
    if (!known) fail(path + "." + it.key(), "unknown key");
  }
}

double get_num(const json& obj, const std::string& path, const char* key,
               double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

long get_int(const json& obj, const std::string& path, const char* key,
             long fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
  return v.get<long>();
}

bool get_bool(const json& obj, const std::string& path, const char* key,
              bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) fail(path + "." + key, "expected a boolean");
  return v.get<bool>();
}

std::string get_str(const json& obj, const std::string& path, const char* key,
                    std::string fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string() || v.get<std::string>().empty()) {
    fail(path + "." + key, "expected a non-empty string");
  }
  return v.get<std::string>();
}

std::vector<double> get_num_array(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) {
      fail(path + "[" + std::to_string(i) + "]", "expected a number");
    }
    out.push_back(v[i].get<double>());
  }
  return out;
}

json pp_matrix() {
  return json::array({{0.92, 0.04, 0.02, 0.02},
                      {0.29, 0.50, 0.09, 0.12},
                      {0.26, 0.21, 0.36, 0.17},
                      {0.31, 0.25, 0.23, 0.21}});
}

json ps_matrix() {
  return json::array({{0.29, 0.7, 0.009, 0.001},
                      {0.09, 0.90, 0.009, 0.001},
                      {0.4, 0.29, 0.3, 0.01},
                      {0.048, 0.001, 0.001, 0.95}});
}

json table1_params() {
  return json{{"Ts", 0.5},    {"a_min", -4.0}, {"a_max", 5.0}, {"v_max", 40.0},
              {"v_ref", 30.0}, {"q", 5.0},      {"r", 10.0}};
}

Eigen::MatrixXd parse_transition_matrix(const json& v,
                                        const std::string& path, int d) {
  json mat = v;
  if (v.is_string()) {
    const std::string name = v.get<std::string>();
    if (name == "P_p") {
      mat = pp_matrix();
    } else if (name == "P_s") {
      mat = ps_matrix();
    } else {
      fail(path, "unknown matrix preset '" + name + "'");
    }
  }
  if (!mat.is_array() || mat.empty()) fail(path, "expected a matrix");
  const int rows = static_cast<int>(mat.size());
  if (rows != d) fail(path, "mode count differs from params.c");
  Eigen::MatrixXd P(rows, rows);
  for (int j = 0; j < rows; ++j) {
    const std::vector<double> row =
        get_num_array(mat[j], path + "[" + std::to_string(j) + "]");
    if (static_cast<int>(row.size()) != rows) fail(path, "matrix not square");
    double sum = 0.0;
    for (int i = 0; i < rows; ++i) {
      if (row[i] < 0.0) {
        fail(path + "[" + std::to_string(j) + "]", "negative entry");
      }
      P(j, i) = row[i];
      sum += row[i];
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      fail(path + "[" + std::to_string(j) + "]", "row does not sum to 1");
    }
  }
  return P;
}

std::string format_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

RciResult compute_rci(const CliConfig& config, const MjlsModel& model) {
  return rci_iterate(model, model.state_set, soft_constraint_set(model),
                     rpi_candidate(config.params), config.invariant.max_iter,
                     config.invariant.tol);
}

// Offline estimation phase shared by solve-once and estimate: a single chain
// trajectory from the ground-truth matrix, folded into the estimator.
TransitionEstimate offline_estimate(const CliConfig& config) {
  const int d = static_cast<int>(config.params.c.size());
  TransitionEstimate est = TransitionEstimate::empty(d);
  if (config.offline_n > 0) {
    if (config.P_true.rows() == 0) {
      fail("markov.P", "required when offline_n > 0");
    }
    std::mt19937_64 rng(config.master_seed);
    int w = config.w0;
    for (long k = 0; k < config.offline_n; ++k) {
      const int next = sample_next(config.P_true, w, rng);
      est = record_transition(est, w, next);
      w = next;
    }
  }
  return est;
}

AmbiguitySet controller_row(const CliConfig& config,
                            const TransitionEstimate& est, int j) {
  switch (config.controller) {
    case ControllerKind::Stochastic:
      return AmbiguitySet::singleton(est.p_hat.row(j).transpose());
    case ControllerKind::RiskAverse:
      return AmbiguitySet::l1_ball(est.p_hat.row(j).transpose(),
                                   radius(config.alpha, est.d, est.n(j)));
    case ControllerKind::Robust:
      return AmbiguitySet::full_simplex(est.d);
  }
  throw std::logic_error("controller_row: unknown controller");
}

const char* ambiguity_kind_name(AmbiguityKind kind) {
  switch (kind) {
    case AmbiguityKind::Singleton:
      return "singleton";
    case AmbiguityKind::L1Ball:
      return "l1_ball";
    case AmbiguityKind::FullSimplex:
      return "full_simplex";
  }
  return "unknown";
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
}

// trajectory.csv -> trajectory_3.csv
std::string indexed_name(const std::string& name, int index) {
  const size_t dot = name.find_last_of('.');
  const std::string suffix = "_" + std::to_string(index);
  if (dot == std::string::npos) return name + suffix;
  return name.substr(0, dot) + suffix + name.substr(dot);
}

}  // namespace

json preset_config(const std::string& name) {
  if (name == "table1") return json{{"params", table1_params()}};
  if (name == "P_p") {
    json cfg{{"params", table1_params()}};
    cfg["params"]["c"] = {1.13, -0.02, -0.33, -0.16};
    cfg["markov"] = {{"P", pp_matrix()},
                     {"alpha", 0.05},
                     {"delta", 0.05},
                     {"offline_n", 0}};
    cfg["controller"] = "risk_averse";
    cfg["horizon"] = 3;
    cfg["experiment"] = {{"T", 50},
                         {"realizations", 50},
                         {"master_seed", 1},
                         {"x0", {100.0, 30.0, 30.0}},
                         {"w0", 0},
                         {"online_learning", true}};
    return cfg;
  }
  if (name == "P_s") {
    json cfg{{"params", table1_params()}};
    cfg["params"]["c"] = {1.1, 0.0, -0.5, -1.0};
    cfg["markov"] = {{"P", ps_matrix()},
                     {"alpha", 0.05},
                     {"delta", 0.05},
                     {"offline_n", 0}};
    cfg["controller"] = "robust";
    cfg["horizon"] = 3;
    cfg["experiment"] = {{"T", 200},
                         {"realizations", 100},
                         {"master_seed", 1},
                         {"x0", {100.0, 30.0, 30.0}},
                         {"w0", 0},
                         {"forced_mode", {{"mode", 3}, {"step", 100}}},
                         {"online_learning", true}};
    return cfg;
  }
  if (name == "fig3") {
    json cfg{{"params", table1_params()}};
    cfg["params"]["a_min"] = -5.0;
    cfg["params"]["c"] = {1.13, -0.02, -0.33, -0.16};
    cfg["invariant_set"] = {{"max_iter", 50},
                            {"tol", 1e-7},
                            {"v_t", 20.0},
                            {"v_e_grid", {0.0, 30.0, 61}}};
    return cfg;
  }
  throw ConfigError("unknown preset '" + name +
                    "' (known: table1, P_p, P_s, fig3)");
}

json merge_config(json base, const json& overrides) {
  if (!base.is_object() || !overrides.is_object()) return overrides;
  for (auto it = overrides.begin(); it != overrides.end(); ++it) {
    if (base.contains(it.key())) {
      base[it.key()] = merge_config(base.at(it.key()), it.value());
    } else {
      base[it.key()] = it.value();
    }
  }
  return base;
}

CliConfig parse_cli_config(const json& doc) {
  expect_object(doc, "<root>");
  expect_keys(doc, "<root>",
              {"params", "markov", "controller", "horizon", "experiment",
               "invariant_set", "outputs"});
  CliConfig c;

  // params
  {
    const json params = doc.value("params", json::object());
    expect_object(params, "params");
    expect_keys(params, "params",
                {"Ts", "c", "a_min", "a_max", "v_max", "v_ref", "q", "r"});
    if (!params.contains("c")) fail("params.c", "required");
    c.params.c = get_num_array(params.at("c"), "params.c");
    if (c.params.c.empty()) fail("params.c", "must be non-empty");
    c.params.Ts = get_num(params, "params", "Ts", c.params.Ts);
    c.params.a_min = get_num(params, "params", "a_min", c.params.a_min);
    c.params.a_max = get_num(params, "params", "a_max", c.params.a_max);
    c.params.v_max = get_num(params, "params", "v_max", c.params.v_max);
    c.params.v_ref = get_num(params, "params", "v_ref", c.params.v_ref);
    c.params.q = get_num(params, "params", "q", c.params.q);
    c.params.r = get_num(params, "params", "r", c.params.r);
    try {
      build_acc_model(c.params);
    } catch (const std::invalid_argument& e) {
      fail("params", e.what());
    }
  }
  const int d = static_cast<int>(c.params.c.size());

  // markov
  {
    const json markov = doc.value("markov", json::object());
    expect_object(markov, "markov");
    expect_keys(markov, "markov", {"P", "alpha", "delta", "offline_n"});
    if (markov.contains("P")) {
      c.P_true = parse_transition_matrix(markov.at("P"), "markov.P", d);
    }
    c.alpha = get_num(markov, "markov", "alpha", c.alpha);
    c.delta = get_num(markov, "markov", "delta", c.delta);
    c.offline_n = get_int(markov, "markov", "offline_n", c.offline_n);
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) {
      fail("markov.alpha", "must lie in (0, 1)");
    }
    if (!(c.delta > 0.0 && c.delta <= 1.0)) {
      fail("markov.delta", "must lie in (0, 1]");
    }
    if (c.offline_n < 0) fail("markov.offline_n", "must be >= 0");
  }

  // controller / horizon
  if (doc.contains("controller")) {
    const std::string name = get_str(doc, "<root>", "controller", "");
    if (name == "stochastic") {
      c.controller = ControllerKind::Stochastic;
    } else if (name == "risk_averse") {
      c.controller = ControllerKind::RiskAverse;
    } else if (name == "robust") {
      c.controller = ControllerKind::Robust;
    } else {
      fail("controller",
           "unknown value '" + name +
               "' (expected stochastic, risk_averse or robust)");
    }
  }
  c.horizon = static_cast<int>(get_int(doc, "<root>", "horizon", c.horizon));
  if (c.horizon < 1) fail("horizon", "must be >= 1");

  // experiment
  {
    const json exp = doc.value("experiment", json::object());
    expect_object(exp, "experiment");
    expect_keys(exp, "experiment",
                {"T", "realizations", "master_seed", "x0", "w0", "forced_mode",
                 "online_learning"});
    c.T = static_cast<int>(get_int(exp, "experiment", "T", c.T));
    c.realizations = static_cast<int>(
        get_int(exp, "experiment", "realizations", c.realizations));
    if (c.T < 1) fail("experiment.T", "must be >= 1");
    if (c.realizations < 1) fail("experiment.realizations", "must be >= 1");
    if (exp.contains("master_seed")) {
      const json& v = exp.at("master_seed");
      if (!v.is_number_integer() || v.get<long long>() < 0) {
        fail("experiment.master_seed", "expected a non-negative integer");
      }
      c.master_seed = v.get<std::uint64_t>();
    }
    std::vector<double> x0{100.0, 30.0, 30.0};
    if (exp.contains("x0")) x0 = get_num_array(exp.at("x0"), "experiment.x0");
    if (x0.size() != 3) fail("experiment.x0", "expected 3 components");
    c.x0 = Eigen::Map<const Eigen::VectorXd>(x0.data(), 3);
    c.w0 = static_cast<int>(get_int(exp, "experiment", "w0", c.w0));
    if (c.w0 < 0 || c.w0 >= d) fail("experiment.w0", "mode out of range");
    if (exp.contains("forced_mode") && !exp.at("forced_mode").is_null()) {
      const json& fm = exp.at("forced_mode");
      expect_object(fm, "experiment.forced_mode");
      expect_keys(fm, "experiment.forced_mode", {"mode", "step"});
      ForcedMode forced;
      forced.mode = static_cast<int>(
          get_int(fm, "experiment.forced_mode", "mode", -1));
      forced.step = static_cast<int>(
          get_int(fm, "experiment.forced_mode", "step", -1));
      if (forced.mode < 0 || forced.mode >= d) {
        fail("experiment.forced_mode.mode", "mode out of range");
      }
      if (forced.step < 1) {
        fail("experiment.forced_mode.step", "must be >= 1 (w_0 is given)");
      }
      c.forced_mode = forced;
    }
    c.online_learning =
        get_bool(exp, "experiment", "online_learning", c.online_learning);
  }

  // invariant_set
  {
    const json inv = doc.value("invariant_set", json::object());
    expect_object(inv, "invariant_set");
    expect_keys(inv, "invariant_set", {"max_iter", "tol", "v_t", "v_e_grid"});
    c.invariant.max_iter = static_cast<int>(
        get_int(inv, "invariant_set", "max_iter", c.invariant.max_iter));
    if (c.invariant.max_iter < 0) {
      fail("invariant_set.max_iter", "must be >= 0");
    }
    c.invariant.tol = get_num(inv, "invariant_set", "tol", c.invariant.tol);
    if (!(c.invariant.tol > 0.0)) fail("invariant_set.tol", "must be > 0");
    c.invariant.v_t = get_num(inv, "invariant_set", "v_t", c.invariant.v_t);
    if (c.invariant.v_t < 0.0) fail("invariant_set.v_t", "must be >= 0");
    if (inv.contains("v_e_grid")) {
      const json& g = inv.at("v_e_grid");
      if (!g.is_array() || g.size() != 3 || !g[0].is_number() ||
          !g[1].is_number() || !g[2].is_number_integer()) {
        fail("invariant_set.v_e_grid", "expected [lo, hi, points]");
      }
      c.invariant.v_e_lo = g[0].get<double>();
      c.invariant.v_e_hi = g[1].get<double>();
      c.invariant.v_e_points = g[2].get<int>();
      if (c.invariant.v_e_lo < 0.0 ||
          c.invariant.v_e_hi < c.invariant.v_e_lo ||
          c.invariant.v_e_points < 1) {
        fail("invariant_set.v_e_grid", "need 0 <= lo <= hi and points >= 1");
      }
    }
  }

  // outputs
  {
    const json out = doc.value("outputs", json::object());
    expect_object(out, "outputs");
    expect_keys(out, "outputs",
                {"realizations", "summary", "ecdf", "trajectory", "invariant",
                 "grid", "program"});
    c.outputs.realizations =
        get_str(out, "outputs", "realizations", c.outputs.realizations);
    c.outputs.summary = get_str(out, "outputs", "summary", c.outputs.summary);
    c.outputs.ecdf = get_str(out, "outputs", "ecdf", c.outputs.ecdf);
    c.outputs.trajectory =
        get_str(out, "outputs", "trajectory", c.outputs.trajectory);
    c.outputs.invariant =
        get_str(out, "outputs", "invariant", c.outputs.invariant);
    c.outputs.grid = get_str(out, "outputs", "grid", c.outputs.grid);
    c.outputs.program = get_str(out, "outputs", "program", c.outputs.program);
  }

  return c;
}

ExperimentConfig to_experiment_config(const CliConfig& config,
                                      Polyhedron terminal_set) {
  if (config.P_true.rows() == 0) {
    fail("markov.P", "required for simulation");
  }
  ExperimentConfig exp;
  exp.params = config.params;
  exp.P_true = config.P_true;
  exp.controller = config.controller;
  exp.alpha = config.alpha;
  exp.delta = config.delta;
  exp.N = config.horizon;
  exp.T = config.T;
  exp.realizations = config.realizations;
  exp.master_seed = config.master_seed;
  exp.offline_sample_size = config.offline_n;
  exp.x0 = config.x0;
  exp.w0 = config.w0;
  exp.forced_mode = config.forced_mode;
  exp.online_learning = config.online_learning;
  exp.terminal_set = std::move(terminal_set);
  return exp;
}

InvariantSetReport invariant_set_report(const CliConfig& config) {
  const MjlsModel model = build_acc_model(config.params);
  InvariantSetReport report;
  report.rci = compute_rci(config, model);

  std::vector<double> grid;
  grid.reserve(config.invariant.v_e_points);
  for (int i = 0; i < config.invariant.v_e_points; ++i) {
    const double frac = config.invariant.v_e_points == 1
                            ? 0.0
                            : static_cast<double>(i) /
                                  (config.invariant.v_e_points - 1);
    grid.push_back(config.invariant.v_e_lo +
                   frac * (config.invariant.v_e_hi - config.invariant.v_e_lo));
  }
  if (report.rci.iterates.size() == 1) {
    // No iteration ran: only the seed set and the comparator are defined.
    std::string csv = "v_e,h_rpi0,h_rss\n";
    for (double v_e : grid) {
      csv += format_g(v_e);
      csv += ',';
      csv += format_g(h_min(report.rci.iterates.front(), v_e,
                            config.invariant.v_t));
      csv += ',';
      csv += format_g(rss_distance(config.params, v_e, config.invariant.v_t));
      csv += '\n';
    }
    report.grid_csv = std::move(csv);
  } else {
    report.grid_csv =
        h_min_grid_csv(config.params, report.rci, grid, config.invariant.v_t);
  }

  json iterate_rows = json::array();
  for (const Polyhedron& R : report.rci.iterates) {
    iterate_rows.push_back(R.rows());
  }
  report.metadata = json{{"converged", report.rci.converged},
                         {"iterations", report.rci.iterations},
                         {"iterate_rows", iterate_rows},
                         {"terminal", report.rci.iterates.back().to_json()}};
  return report;
}

SolveOnceReport solve_once_report(const CliConfig& config) {
  const MjlsModel model = build_acc_model(config.params);
  const TransitionEstimate est = offline_estimate(config);
  const int d = est.d;

  OcpSpec spec;
  spec.model = model;
  spec.params = config.params;
  spec.N = config.horizon;
  spec.delta = config.delta;
  spec.terminal_set = compute_rci(config, model).iterates.back();
  spec.branching = config.controller == ControllerKind::Stochastic
                       ? Branching::Support
                       : Branching::Full;
  spec.mode_ambiguity.reserve(d);
  for (int j = 0; j < d; ++j) {
    spec.mode_ambiguity.push_back(controller_row(config, est, j));
  }

  const AssembledOcp assembled = assemble(spec, config.x0, config.w0);
  const SolveResult result = rampc::solve(assembled.program);

  SolveOnceReport report;
  report.status = to_string(result.status);
  report.message = result.message;
  report.program_json = assembled.program.dump_json();
  if (result.status == SolveStatus::Optimal) {
    report.objective = result.objective;
    report.u0 = result.x(assembled.vars.u[0]);
  } else if (result.status == SolveStatus::PrimalInfeasible) {
    report.certificate_valid = verify_certificate(assembled.program, result.y);
  }
  return report;
}

nlohmann::json estimate_report(const CliConfig& config,
                               const std::vector<int>& sample) {
  const int d = static_cast<int>(config.params.c.size());
  for (size_t i = 0; i < sample.size(); ++i) {
    if (sample[i] < 0 || sample[i] >= d) {
      fail("sample[" + std::to_string(i) + "]",
           "mode out of range (0-based indices)");
    }
  }
  const TransitionEstimate est = estimate(sample, d);
  json rows = json::array();
  for (int j = 0; j < d; ++j) {
    const AmbiguitySet set =
        est.n(j) > 0
            ? AmbiguitySet::l1_ball(est.p_hat.row(j).transpose(),
                                    radius(config.alpha, d, est.n(j)))
            : AmbiguitySet::full_simplex(d);
    json p_hat = json::array();
    for (int i = 0; i < d; ++i) p_hat.push_back(est.p_hat(j, i));
    rows.push_back(json{{"count", est.n(j)},
                        {"p_hat", p_hat},
                        {"set", ambiguity_kind_name(set.kind)},
                        {"radius", set.radius}});
  }
  return json{{"d", d},
              {"sample_size", sample.size()},
              {"alpha", config.alpha},
              {"rows", rows}};
}

int cmd_invariant_set(const CliConfig& config, const CommandOptions& opt) {
  const InvariantSetReport report = invariant_set_report(config);
  const std::filesystem::path dir(opt.out_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / config.outputs.invariant,
             report.metadata.dump(2) + "\n");
  write_file(dir / config.outputs.grid, report.grid_csv);
  std::printf("invariant-set: %s after %d iterations (%d rows)\n",
              report.rci.converged ? "converged"
                                   : "not converged; partial output written",
              report.rci.iterations,
              report.rci.iterates.back().rows());
  return 0;
}

int cmd_simulate(const CliConfig& config, const CommandOptions& opt) {
  const MjlsModel model = build_acc_model(config.params);
  const RciResult rci = compute_rci(config, model);
  const BatchResult batch =
      run_batch(to_experiment_config(config, rci.iterates.back()));

  const std::filesystem::path dir(opt.out_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / config.outputs.realizations, realizations_csv(batch));
  write_file(dir / config.outputs.summary,
             summary_json(batch.summary).dump(2) + "\n");

  std::vector<double> costs;
  for (const RealizationResult& r : batch.realizations) {
    if (!r.infeasible_at && !r.numerical_trouble_at) {
      costs.push_back(r.closed_loop_cost);
    }
  }
  std::string ecdf = "cost,fraction\n";
  if (!costs.empty()) {
    for (const auto& [cost, fraction] : empirical_cdf(costs)) {
      ecdf += format_g(cost);
      ecdf += ',';
      ecdf += format_g(fraction);
      ecdf += '\n';
    }
  }
  write_file(dir / config.outputs.ecdf, ecdf);

  if (opt.verbose) {
    for (size_t i = 0; i < batch.realizations.size(); ++i) {
      write_file(dir / indexed_name(config.outputs.trajectory,
                                    static_cast<int>(i)),
                 trajectory_csv(batch.realizations[i]));
    }
  }

  std::printf(
      "simulate: %s, %d realizations, %d completed, %d infeasible, "
      "%d numerical trouble, mean cost %s\n",
      controller_name(config.controller).c_str(), batch.summary.realizations,
      batch.summary.completed, batch.summary.infeasible_count,
      batch.summary.numerical_trouble_count,
      format_g(batch.summary.mean_cost).c_str());
  return 0;
}

int cmd_solve_once(const CliConfig& config, const CommandOptions& opt) {
  const SolveOnceReport report = solve_once_report(config);
  if (opt.dump_program) {
    const std::filesystem::path dir(opt.out_dir);
    std::filesystem::create_directories(dir);
    write_file(dir / config.outputs.program, report.program_json + "\n");
  }
  std::printf("status %s\n", report.status.c_str());
  if (report.status == to_string(SolveStatus::Optimal)) {
    std::printf("objective %s\n", format_g(report.objective).c_str());
    std::printf("u0 %s\n", format_g(report.u0).c_str());
  } else if (report.status == to_string(SolveStatus::PrimalInfeasible)) {
    std::printf("certificate_valid %s\n",
                report.certificate_valid ? "true" : "false");
  }
  if (!report.message.empty()) {
    std::printf("message %s\n", report.message.c_str());
  }
  return report.status == to_string(SolveStatus::MaxIterations) ? 3 : 0;
}

int cmd_estimate(const CliConfig& config, const std::string& sample_path) {
  std::ifstream in(sample_path, std::ios::binary);
  if (!in) {
    throw ConfigError("config: sample file '" + sample_path +
                      "': cannot open");
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: sample file '" + sample_path +
                      "': " + e.what());
  }
  if (!doc.is_array()) {
    fail("sample", "expected a JSON array of 0-based mode indices");
  }
  std::vector<int> sample;
  sample.reserve(doc.size());
  for (size_t i = 0; i < doc.size(); ++i) {
    if (!doc[i].is_number_integer()) {
      fail("sample[" + std::to_string(i) + "]", "expected an integer");
    }
    sample.push_back(doc[i].get<int>());
  }
  std::printf("%s\n", estimate_report(config, sample).dump(2).c_str());
  return 0;
}

}  // namespace rampc
