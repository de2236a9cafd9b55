#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "rampc/config.hpp"
#include "rampc/markov.hpp"

using namespace rampc;
using nlohmann::json;

namespace {

std::string parse_error(const json& doc) {
  try {
    parse_cli_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool mentions(const std::string& message, const std::string& needle) {
  return message.find(needle) != std::string::npos;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

int count_lines(const std::string& text) {
  int lines = 0;
  for (char ch : text) {
    if (ch == '\n') ++lines;
  }
  return lines;
}

std::filesystem::path fresh_dir(const std::string& name) {
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / ("rampc_test_cli_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("P_p preset reproduces the published experiment exactly") {
  const CliConfig c = parse_cli_config(preset_config("P_p"));
  const double P[4][4] = {{0.92, 0.04, 0.02, 0.02},
                          {0.29, 0.50, 0.09, 0.12},
                          {0.26, 0.21, 0.36, 0.17},
                          {0.31, 0.25, 0.23, 0.21}};
  REQUIRE(c.P_true.rows() == 4);
  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < 4; ++i) CHECK(c.P_true(j, i) == P[j][i]);
  }
  CHECK(c.params.Ts == 0.5);
  CHECK(c.params.a_min == -4.0);
  CHECK(c.params.a_max == 5.0);
  CHECK(c.params.v_max == 40.0);
  CHECK(c.params.v_ref == 30.0);
  CHECK(c.params.q == 5.0);
  CHECK(c.params.r == 10.0);
  REQUIRE(c.params.c.size() == 4);
  CHECK(c.params.c[0] == 1.13);
  CHECK(c.params.c[1] == -0.02);
  CHECK(c.params.c[2] == -0.33);
  CHECK(c.params.c[3] == -0.16);
  CHECK(c.controller == ControllerKind::RiskAverse);
  CHECK(c.horizon == 3);
  CHECK(c.T == 50);
  CHECK(c.realizations == 50);
  CHECK(c.alpha == 0.05);
  CHECK(c.delta == 0.05);
  CHECK(c.offline_n == 0);
  CHECK(!c.forced_mode);
  CHECK(c.x0(0) == 100.0);
  CHECK(c.w0 == 0);
}

TEST_CASE("P_s preset reproduces the published experiment exactly") {
  const CliConfig c = parse_cli_config(preset_config("P_s"));
  const double P[4][4] = {{0.29, 0.7, 0.009, 0.001},
                          {0.09, 0.90, 0.009, 0.001},
                          {0.4, 0.29, 0.3, 0.01},
                          {0.048, 0.001, 0.001, 0.95}};
  REQUIRE(c.P_true.rows() == 4);
  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < 4; ++i) CHECK(c.P_true(j, i) == P[j][i]);
  }
  REQUIRE(c.params.c.size() == 4);
  CHECK(c.params.c[0] == 1.1);
  CHECK(c.params.c[1] == 0.0);
  CHECK(c.params.c[2] == -0.5);
  CHECK(c.params.c[3] == -1.0);
  CHECK(c.controller == ControllerKind::Robust);
  CHECK(c.T == 200);
  CHECK(c.realizations == 100);
  REQUIRE(c.forced_mode.has_value());
  CHECK(c.forced_mode->mode == 3);
  CHECK(c.forced_mode->step == 100);
}

TEST_CASE("table1 preset carries the default parameters and needs c") {
  // Table of defaults only: usable as a base layer, not standalone.
  CHECK(mentions(parse_error(preset_config("table1")), "params.c"));
  json doc = merge_config(preset_config("table1"),
                          json{{"params", {{"c", {0.0, -0.5}}}}});
  const CliConfig c = parse_cli_config(doc);
  CHECK(c.params.Ts == 0.5);
  CHECK(c.params.a_min == -4.0);
  CHECK(c.params.q == 5.0);
  CHECK(c.params.r == 10.0);
  REQUIRE(c.params.c.size() == 2);
  CHECK(c.P_true.rows() == 0);  // no markov section: fine until simulation
}

TEST_CASE("fig3 preset configures the invariant-set comparison") {
  const CliConfig c = parse_cli_config(preset_config("fig3"));
  CHECK(c.params.a_min == -5.0);
  CHECK(c.params.c[2] == -0.33);
  CHECK(c.invariant.max_iter == 50);
  CHECK(c.invariant.v_t == 20.0);
  CHECK(c.invariant.v_e_lo == 0.0);
  CHECK(c.invariant.v_e_hi == 30.0);
  CHECK(c.invariant.v_e_points == 61);
}

TEST_CASE("unknown preset is a config error") {
  CHECK_THROWS_AS(preset_config("P_q"), ConfigError);
}

TEST_CASE("merge_config layers user files over presets") {
  const json base = preset_config("P_s");
  const json merged = merge_config(
      base, json{{"horizon", 2},
                 {"experiment", {{"T", 4}, {"forced_mode", nullptr}}}});
  const CliConfig c = parse_cli_config(merged);
  CHECK(c.horizon == 2);
  CHECK(c.T == 4);
  CHECK(c.realizations == 100);       // untouched by the overlay
  CHECK(!c.forced_mode.has_value());  // null disables the injection
  CHECK(c.params.c[3] == -1.0);       // nested section survives the merge
}

TEST_CASE("schema violations raise ConfigError naming the path") {
  json ok = preset_config("P_s");
  CHECK(parse_error(ok).empty());

  json doc = ok;
  doc["typo"] = 1;
  CHECK(mentions(parse_error(doc), "typo"));

  doc = ok;
  doc["params"]["spring_constant"] = 3.0;
  CHECK(mentions(parse_error(doc), "params.spring_constant"));

  doc = ok;
  doc["controller"] = "fuzzy";
  CHECK(mentions(parse_error(doc), "controller"));

  doc = ok;
  doc["markov"]["P"][0][0] = 0.5;  // row no longer sums to one
  CHECK(mentions(parse_error(doc), "markov.P[0]"));

  doc = ok;
  doc["markov"]["P"] = "P_q";
  CHECK(mentions(parse_error(doc), "markov.P"));

  doc = ok;
  doc["markov"]["P"] = json::array({{0.5, 0.5}, {0.5, 0.5}});  // d mismatch
  CHECK(mentions(parse_error(doc), "markov.P"));

  doc = ok;
  doc["markov"]["alpha"] = 1.0;
  CHECK(mentions(parse_error(doc), "markov.alpha"));

  doc = ok;
  doc["experiment"]["w0"] = 4;
  CHECK(mentions(parse_error(doc), "experiment.w0"));

  doc = ok;
  doc["experiment"]["forced_mode"]["step"] = 0;
  CHECK(mentions(parse_error(doc), "forced_mode.step"));

  doc = ok;
  doc["experiment"]["x0"] = {1.0, 2.0};
  CHECK(mentions(parse_error(doc), "experiment.x0"));

  doc = ok;
  doc["experiment"]["master_seed"] = -1;
  CHECK(mentions(parse_error(doc), "master_seed"));

  doc = ok;
  doc["horizon"] = 0;
  CHECK(mentions(parse_error(doc), "horizon"));

  doc = ok;
  doc["params"]["c"][3] = -3.0;  // violates c >= -1/Ts
  CHECK(mentions(parse_error(doc), "params"));

  doc = ok;
  doc["invariant_set"]["v_e_grid"] = {30.0, 0.0, 61};
  CHECK(mentions(parse_error(doc), "v_e_grid"));
}

TEST_CASE("simulation requires a transition matrix") {
  json doc = preset_config("fig3");  // no markov section
  const CliConfig c = parse_cli_config(doc);
  CHECK_THROWS_AS(to_experiment_config(c, Polyhedron(3)), ConfigError);
}

TEST_CASE("estimate_report matches the estimator and the radius formula") {
  const CliConfig c = parse_cli_config(preset_config("P_p"));
  const std::vector<int> sample{0, 1, 0, 1, 2};
  const json report = estimate_report(c, sample);
  CHECK(report.at("d") == 4);
  CHECK(report.at("sample_size") == 5);
  const json& rows = report.at("rows");
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].at("count") == 2);
  CHECK(rows[0].at("p_hat")[1] == 1.0);
  // Two observations put the concentration radius past the simplex diameter,
  // so the ball clamps to the full simplex.
  CHECK(rows[0].at("set") == "full_simplex");
  CHECK(rows[0].at("radius") == 2.0);
  CHECK(rows[1].at("count") == 2);
  CHECK(rows[2].at("count") == 0);
  CHECK(rows[2].at("set") == "full_simplex");
  CHECK(rows[2].at("radius") == 2.0);
  CHECK(rows[3].at("count") == 0);

  // With enough data the set is a proper ball at the concentration radius.
  std::vector<int> cyclic;
  for (int k = 0; k < 300; ++k) cyclic.push_back(k % 3);
  const json big = estimate_report(c, cyclic);
  CHECK(big.at("rows")[0].at("count") == 100);
  CHECK(big.at("rows")[0].at("set") == "l1_ball");
  CHECK(big.at("rows")[0].at("radius").get<double>() ==
        doctest::Approx(radius(0.05, 4, 100)).epsilon(1e-12));
  CHECK(big.at("rows")[0].at("p_hat")[1] == 1.0);

  CHECK_THROWS_AS(estimate_report(c, std::vector<int>{0, 4}), ConfigError);
  CHECK_THROWS_AS(estimate_report(c, std::vector<int>{-1}), ConfigError);
}

TEST_CASE("invariant_set_report emits the grid and metadata") {
  json doc = merge_config(preset_config("fig3"),
                          json{{"invariant_set", {{"v_e_grid", {0.0, 30.0, 4}}}}});
  const InvariantSetReport report =
      invariant_set_report(parse_cli_config(doc));
  CHECK(report.rci.converged);
  CHECK(report.metadata.at("converged") == true);
  CHECK(report.metadata.at("iterations").get<int>() == report.rci.iterations);
  CHECK(report.metadata.at("iterate_rows").size() ==
        report.rci.iterates.size());
  CHECK(count_lines(report.grid_csv) == 5);  // header + 4 grid points
  CHECK(report.grid_csv.rfind("v_e,h_rpi0,h_rci,h_rss\n", 0) == 0);

  // Iteration disabled: the comparison degenerates to seed set vs comparator.
  doc = merge_config(doc, json{{"invariant_set", {{"max_iter", 0}}}});
  const InvariantSetReport seed_only =
      invariant_set_report(parse_cli_config(doc));
  CHECK(!seed_only.rci.converged);
  CHECK(seed_only.rci.iterates.size() == 1);
  CHECK(seed_only.grid_csv.rfind("v_e,h_rpi0,h_rss\n", 0) == 0);
  CHECK(count_lines(seed_only.grid_csv) == 5);
}

TEST_CASE("solve_once_report: cruising at the reference costs nothing") {
  json doc = merge_config(
      preset_config("P_p"),
      json{{"controller", "robust"},
           {"experiment", {{"x0", {200.0, 30.0, 30.0}}, {"w0", 1}}}});
  const SolveOnceReport report = solve_once_report(parse_cli_config(doc));
  CHECK(report.status == "optimal");
  CHECK(report.objective == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(report.u0 == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(!report.program_json.empty());
  // The dump is a loadable program.
  const ConicProgram prog = ConicProgram::load_json(report.program_json);
  CHECK(prog.num_vars() > 0);
}

TEST_CASE("solve_once_report: impossible state yields a checked certificate") {
  json doc = merge_config(
      preset_config("P_p"),
      json{{"controller", "robust"},
           {"experiment", {{"x0", {100.0, 45.0, 30.0}}}}});
  const SolveOnceReport report = solve_once_report(parse_cli_config(doc));
  CHECK(report.status == "primal_infeasible");
  CHECK(report.certificate_valid);
}

TEST_CASE("cmd_simulate writes reproducible artifacts") {
  json doc = merge_config(preset_config("P_s"),
                          json{{"horizon", 2},
                               {"experiment", {{"T", 3}, {"realizations", 2}}}});
  const CliConfig config = parse_cli_config(doc);
  CommandOptions opt;
  opt.verbose = true;

  const std::filesystem::path dir_a = fresh_dir("sim_a");
  const std::filesystem::path dir_b = fresh_dir("sim_b");
  opt.out_dir = dir_a.string();
  REQUIRE(cmd_simulate(config, opt) == 0);
  opt.out_dir = dir_b.string();
  REQUIRE(cmd_simulate(config, opt) == 0);

  for (const char* name : {"realizations.csv", "summary.json", "ecdf.csv",
                           "trajectory_0.csv", "trajectory_1.csv"}) {
    const std::string a = slurp(dir_a / name);
    CHECK(a == slurp(dir_b / name));
    CHECK(!a.empty());
  }
  const std::string realizations = slurp(dir_a / "realizations.csv");
  CHECK(count_lines(realizations) == 3);  // header + one row per realization
  CHECK(realizations.rfind("realization,seed,controller,cost,infeasible_at\n",
                           0) == 0);
  const std::string trajectory = slurp(dir_a / "trajectory_0.csv");
  CHECK(count_lines(trajectory) == 5);  // header + T+1 state rows
  CHECK(trajectory.rfind("t,w,h,v_e,v_t,u,solve_status\n", 0) == 0);
  const json summary = json::parse(slurp(dir_a / "summary.json"));
  CHECK(summary.at("realizations") == 2);
  CHECK(summary.at("infeasible_count") == 0);
  const std::string ecdf = slurp(dir_a / "ecdf.csv");
  CHECK(ecdf.rfind("cost,fraction\n", 0) == 0);

  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("cmd_invariant_set writes metadata and grid files") {
  json doc = merge_config(preset_config("fig3"),
                          json{{"invariant_set", {{"v_e_grid", {0.0, 30.0, 3}}}}});
  const CliConfig config = parse_cli_config(doc);
  CommandOptions opt;
  const std::filesystem::path dir = fresh_dir("inv");
  opt.out_dir = dir.string();
  REQUIRE(cmd_invariant_set(config, opt) == 0);
  const json meta = json::parse(slurp(dir / "invariant_set.json"));
  CHECK(meta.at("converged") == true);
  CHECK(meta.at("terminal").contains("G"));
  CHECK(count_lines(slurp(dir / "safety_grid.csv")) == 4);
  std::filesystem::remove_all(dir);
}
