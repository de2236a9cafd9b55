#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rampc/conic.hpp"
#include "rampc/mjls.hpp"
#include "rampc/polyhedron.hpp"
#include "rampc/risk.hpp"
#include "rampc/scenario_tree.hpp"

namespace rampc {

// Which children a tree node branches into.  Support follows the positive
// entries of the nominal transition matrix (almost-sure semantics); Full
// branches into every mode, as the risk-averse problem quantifies over all
// realizations.
enum class Branching { Support, Full };

// Finite-horizon problem compiled over a scenario tree.  mode_ambiguity[j]
// is the set of candidate transition rows out of mode j: Singletons give the
// nominal problem (conditional expectations, plain AVaR); balls or the full
// simplex give the distributionally robust one.  Support branching requires
// Singleton rows (pruning is only sound when the distribution is known).
struct OcpSpec {
  MjlsModel model;
  AccParams params;
  int N = 3;
  std::vector<AmbiguitySet> mode_ambiguity;  // one per mode
  double delta = 0.05;                       // AVaR level of the g-constraint
  Polyhedron terminal_set;                   // binds every leaf state
  Branching branching = Branching::Full;
  bool bind_state_set_at_leaves = false;     // X_r at leaves too (default: off)
};

// Variable layout of the assembled program (indices of the first component).
struct OcpVariables {
  int nx = 0;
  int nu = 0;
  std::vector<int> x;  // per node
  std::vector<int> u;  // per node; -1 at leaves
  std::vector<int> t;  // per node: nested-cost epigraph scalar
};

struct AssembledOcp {
  ScenarioTree tree;
  ConicProgram program;
  OcpVariables vars;
};

// Tree-indexed solution.  States are re-propagated through the exact affine
// dynamics from x0 and the solved inputs, so x.row(child) = f(x.row(anc),
// u.row(anc), mode(child)) holds to machine precision and x.row(0) == x0.
struct NodePolicy {
  ScenarioTree tree;
  Eigen::MatrixXd x;  // num_nodes x nx
  Eigen::MatrixXd u;  // num_nodes x nu; zero rows at leaves
  double objective = 0.0;
};

enum class OcpStatus {
  Optimal,           // policy is valid
  Infeasible,        // constraints cannot be met from this state
  NumericalTrouble,  // solver gave up (stall / iteration cap); no statement
};                   // about feasibility

struct OcpSolution {
  OcpStatus status = OcpStatus::NumericalTrouble;
  NodePolicy policy;  // valid iff status == Optimal
  std::string message;
};

// Compiles the problem: explicit state variables linked by Zero-cone
// dynamics rows, quadratic costs as 3-dimensional second-order cones,
// per-node risk constraints and nested cost via the risk epigraph duals.
AssembledOcp assemble(const OcpSpec& spec, const Eigen::VectorXd& x0, int w0);

OcpSolution solve_ocp(const OcpSpec& spec, const Eigen::VectorXd& x0, int w0,
                      const SolverSettings& settings = SolverSettings{});

// First input of the policy (the value an MPC loop applies).
Eigen::VectorXd extract_control(const NodePolicy& policy);

}  // namespace rampc
