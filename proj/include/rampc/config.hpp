#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rampc/safety.hpp"
#include "rampc/simulator.hpp"

namespace rampc {

// Schema violation in a config document.  The CLI maps this to exit code 2;
// the message names the offending JSON path.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// `invariant_set` section: iteration caps and the reporting grid of the
// safety-distance comparison (h_min of the iterates vs. the RSS comparator,
// evaluated at ego speeds over [v_e_lo, v_e_hi] against target speed v_t).
struct InvariantSetOptions {
  int max_iter = 50;
  double tol = 1e-7;
  double v_t = 20.0;
  double v_e_lo = 0.0;
  double v_e_hi = 30.0;
  int v_e_points = 61;
};

// `outputs` section: file names, resolved against the out-dir flag.  With
// --verbose, per-step trajectory files get the realization index appended
// before the extension (trajectory.csv -> trajectory_0.csv, ...).
struct OutputNames {
  std::string realizations = "realizations.csv";
  std::string summary = "summary.json";
  std::string ecdf = "ecdf.csv";
  std::string trajectory = "trajectory.csv";
  std::string invariant = "invariant_set.json";
  std::string grid = "safety_grid.csv";
  std::string program = "program.json";
};

// One fully validated experiment description.  JSON sections:
//   params        Ts, c, a_min, a_max, v_max, v_ref, q, r
//   markov        P (preset name or row-stochastic matrix), alpha, delta,
//                 offline_n
//   controller    "stochastic" | "risk_averse" | "robust"
//   horizon       prediction horizon N
//   experiment    T, realizations, master_seed, x0, w0, forced_mode
//                 ({mode, step} or null), online_learning
//   invariant_set max_iter, tol, v_t, v_e_grid ([lo, hi, points])
//   outputs       file names (see OutputNames)
// Mode indices are 0-based everywhere (configs, outputs, sample files).
struct CliConfig {
  AccParams params;
  Eigen::MatrixXd P_true;  // 0x0 when the markov section has no matrix
  ControllerKind controller = ControllerKind::RiskAverse;
  double alpha = 0.05;
  double delta = 0.05;
  long offline_n = 0;
  int horizon = 3;
  int T = 50;
  int realizations = 1;
  std::uint64_t master_seed = 1;
  Eigen::VectorXd x0;
  int w0 = 0;
  std::optional<ForcedMode> forced_mode;
  bool online_learning = true;
  InvariantSetOptions invariant;
  OutputNames outputs;
};

// Named configurations of the published experiments; throws ConfigError on
// an unknown name.
//   table1  default controller settings (params section only; supply c)
//   P_p     performance experiment: strictly positive transition matrix,
//           c = (1.13, -0.02, -0.33, -0.16), 50 realizations x 50 steps
//   P_s     safety experiment: sticky emergency mode, c = (1.1, 0, -0.5, -1),
//           forced switch to the braking mode, 100 realizations x 200 steps
//   fig3    invariant-set comparison: a_min = -5, safety grid over
//           v_e in [0, 30] at v_t = 20
nlohmann::json preset_config(const std::string& name);

// Recursive overlay: objects merge key-by-key, anything else (including
// null) replaces.  Used to layer a user file over a preset.
nlohmann::json merge_config(nlohmann::json base,
                            const nlohmann::json& overrides);

// Validates the document (types, ranges, unknown keys) and resolves matrix
// presets.  Throws ConfigError before any computation happens.
CliConfig parse_cli_config(const nlohmann::json& doc);

// Simulation setup for the config, with the terminal set supplied by the
// caller (commands compute it via the invariant-set iteration).
ExperimentConfig to_experiment_config(const CliConfig& config,
                                      Polyhedron terminal_set);

struct CommandOptions {
  std::string out_dir = ".";
  bool verbose = false;       // simulate: also write per-step trajectories
  bool dump_program = false;  // solve-once: write the assembled program JSON
};

// Reports backing the subcommands, exposed so they can be tested without
// touching the filesystem or capturing stdout.
struct InvariantSetReport {
  RciResult rci;
  nlohmann::json metadata;  // converged, iterations, per-iterate row counts,
                            // final set H-representation
  std::string grid_csv;     // v_e,h_rpi0[,h_rci],h_rss (middle column only
                            // when the iteration ran)
};
InvariantSetReport invariant_set_report(const CliConfig& config);

struct SolveOnceReport {
  std::string status;  // to_string of the solver status
  double objective = 0.0;
  double u0 = 0.0;            // meaningful when status == "optimal"
  bool certificate_valid = false;  // meaningful when primal infeasible
  std::string message;
  std::string program_json;
};
SolveOnceReport solve_once_report(const CliConfig& config);

// Rows of the transition estimate built from a 0-based mode sample, with the
// concentration set each row would induce at the configured alpha.
nlohmann::json estimate_report(const CliConfig& config,
                               const std::vector<int>& sample);

// Subcommand drivers: write artifacts under opt.out_dir, print a one-line
// summary, and return the process exit code (0 success, 3 solver failure;
// config errors throw ConfigError and the CLI maps them to 2).
int cmd_invariant_set(const CliConfig& config, const CommandOptions& opt);
int cmd_simulate(const CliConfig& config, const CommandOptions& opt);
int cmd_solve_once(const CliConfig& config, const CommandOptions& opt);
int cmd_estimate(const CliConfig& config, const std::string& sample_path);

}  // namespace rampc
