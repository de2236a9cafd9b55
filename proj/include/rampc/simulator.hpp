#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rampc/markov.hpp"
#include "rampc/mjls.hpp"
#include "rampc/ocp.hpp"
#include "rampc/polyhedron.hpp"

namespace rampc {

// The three closed-loop policies compared by the experiments.  Stochastic
// plans in expectation over the support of the estimated chain (nominal MPC,
// plain average-value-at-risk constraints at the configured level);
// RiskAverse wraps the estimate in an l1 ambiguity ball with the
// concentration radius at confidence alpha and shrinks it as evidence
// accumulates; Robust quantifies over the whole simplex and ignores the
// estimates entirely.
enum class ControllerKind { Stochastic, RiskAverse, Robust };

// Override of the sampled chain: w_t = mode at exactly t = step (0-based
// state index; step >= 1 since w_0 is part of the initial condition).
struct ForcedMode {
  int mode = 0;
  int step = 0;
};

struct ExperimentConfig {
  AccParams params;
  Eigen::MatrixXd P_true;  // ground-truth row-stochastic transition matrix
  ControllerKind controller = ControllerKind::RiskAverse;
  double alpha = 0.05;  // confidence of the concentration radius
  double delta = 0.05;  // risk level of the headway constraint
  int N = 3;            // prediction horizon
  int T = 50;           // closed-loop steps per realization
  int realizations = 1;
  std::uint64_t master_seed = 0;
  long offline_sample_size = 0;  // chain transitions observed before t = 0
  Eigen::VectorXd x0;
  int w0 = 0;
  std::optional<ForcedMode> forced_mode;
  bool online_learning = true;  // update estimates from closed-loop jumps
  Polyhedron terminal_set;      // precomputed invariant set binding leaves
};

// One closed-loop realization.  x holds x_0..x_E and w holds w_0..w_E where
// E is the number of executed steps; u holds the E applied inputs.
// solver_diagnostics has one entry per attempted solve (E entries on success,
// E+1 when the last attempt failed), and row_ambiguity_used records the
// ambiguity set of the current mode's row at each attempt.  fallback_at lists
// the steps where the solver broke down and the input came from the tail of
// the last policy (or from the terminal-set recovery rule) instead.
// closed_loop_cost is the executed-step sum of the stage cost (no terminal
// term).
struct RealizationResult {
  std::uint64_t seed = 0;
  std::vector<Eigen::VectorXd> x;
  std::vector<double> u;
  std::vector<int> w;
  std::vector<OcpStatus> solver_diagnostics;
  std::vector<AmbiguitySet> row_ambiguity_used;
  std::vector<int> fallback_at;
  double closed_loop_cost = 0.0;
  std::optional<int> infeasible_at;
  std::optional<int> numerical_trouble_at;
};

// Cost statistics are over completed realizations only (quantiles with
// linear interpolation between order statistics); NaN when none completed.
struct BatchSummary {
  int realizations = 0;
  int completed = 0;
  int infeasible_count = 0;
  int numerical_trouble_count = 0;
  double infeasible_fraction = 0.0;
  double mean_cost = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(completed)
  double min_cost = 0.0;
  double q25_cost = 0.0;
  double median_cost = 0.0;
  double q75_cost = 0.0;
  double max_cost = 0.0;
};

struct BatchResult {
  ExperimentConfig config;
  std::vector<RealizationResult> realizations;
  BatchSummary summary;
};

// Deterministic per-realization seed stream (splitmix of the master seed).
std::uint64_t realization_seed(std::uint64_t master_seed, int index);

// config.forced_mode.mode when t matches the configured step, else the draw.
int forced_mode_schedule(int t, int base_draw, const ExperimentConfig& config);

// One realization of the learning MPC loop: optional offline estimation from
// a presampled chain, then per step solve / apply the root input / observe
// the jump / update the current row's estimate.  The risk-averse controller
// replaces a row's ambiguity set only when the new ball nests inside the one
// in use; the stochastic controller re-centers its singletons every step
// when online_learning is set and freezes them otherwise; the robust
// controller always uses the full simplex.
//
// A certified infeasibility terminates the realization and is recorded, not
// thrown.  A solver breakdown (no statement about feasibility) instead falls
// back on the input the previous solution planned for the realized node --
// the same shifted policy the recursive-feasibility argument uses -- and,
// once that tree is exhausted, on an admissible input that keeps every
// successor inside the terminal set, which exists as long as the state is in
// it because the set is robust controlled invariant.  Only when no fallback
// applies (support-branching tree missing the realized mode, or the state
// has left the terminal set) is the breakdown recorded and the realization
// stopped.
RealizationResult run_learning_mpc(const ExperimentConfig& config,
                                   std::uint64_t seed);

// realizations independent runs seeded from (master_seed, index).  The mode
// chain is driven by a stream that depends only on the seed, so controllers
// compared under the same master seed see identical mode realizations.
BatchResult run_batch(const ExperimentConfig& config);

// Cost statistics over a set of realizations (exposed for tests).
BatchSummary summarize(const std::vector<RealizationResult>& results);

// Right-continuous empirical distribution: sorted unique values paired with
// the fraction of samples <= value.  Throws on an empty input.
std::vector<std::pair<double, double>> empirical_cdf(
    const std::vector<double>& costs);

// "stochastic" / "risk_averse" / "robust".
std::string controller_name(ControllerKind kind);

// Per-realization table: realization,seed,controller,cost,infeasible_at
// (empty cell when the realization completed).  Numbers use "%.12g".
std::string realizations_csv(const BatchResult& batch);

// Per-step table: t,w,h,v_e,v_t,u,solve_status with one row per recorded
// state; u and solve_status are empty on the final row of a completed run
// and u is empty on a failed attempt (a breakdown covered by a fallback
// input keeps its status but still shows the applied u).
std::string trajectory_csv(const RealizationResult& result);

nlohmann::json summary_json(const BatchSummary& summary);

}  // namespace rampc
