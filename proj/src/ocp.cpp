#include "rampc/ocp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rampc {
namespace {

void validate(const OcpSpec& spec, const Eigen::VectorXd& x0, int w0) {
  const int d = spec.model.num_modes();
  if (spec.N < 1) throw std::invalid_argument("ocp: horizon must be >= 1");
  if (!(spec.delta > 0.0) || spec.delta > 1.0) {
    throw std::invalid_argument("ocp: AVaR level must lie in (0, 1]");
  }
  if (static_cast<int>(spec.mode_ambiguity.size()) != d) {
    throw std::invalid_argument("ocp: need one ambiguity set per mode");
  }
  for (const AmbiguitySet& A : spec.mode_ambiguity) {
    if (A.dim() != d) {
      throw std::invalid_argument(
          "ocp: ambiguity set dimension does not match the mode count");
    }
    if (spec.branching == Branching::Support &&
        A.kind != AmbiguityKind::Singleton) {
      throw std::invalid_argument(
          "ocp: support branching requires singleton transition rows");
    }
  }
  if (spec.terminal_set.n != spec.model.nx()) {
    throw std::invalid_argument("ocp: terminal set lives in dimension " +
                                std::to_string(spec.terminal_set.n) +
                                ", expected " +
                                std::to_string(spec.model.nx()));
  }
  if (x0.size() != spec.model.nx()) {
    throw std::invalid_argument("ocp: initial state has wrong dimension");
  }
  if (w0 < 0 || w0 >= d) {
    throw std::invalid_argument("ocp: initial mode out of range");
  }
}

// Restriction of a singleton row to the child modes actually present in the
// support tree (the dropped entries are exactly the zeros).
Eigen::VectorXd restrict_row(const Eigen::VectorXd& row,
                             const std::vector<int>& child_modes) {
  Eigen::VectorXd p(child_modes.size());
  for (size_t k = 0; k < child_modes.size(); ++k) p[k] = row[child_modes[k]];
  return p;
}

// Risk measures applied across the children of a node with mode j.
RiskSpec constraint_risk(const OcpSpec& spec, int j,
                         const std::vector<int>& child_modes) {
  if (spec.branching == Branching::Support) {
    return RiskSpec::avar(
        restrict_row(spec.mode_ambiguity[j].center, child_modes), spec.delta);
  }
  return RiskSpec::robust_avar(spec.mode_ambiguity[j], spec.delta);
}

RiskSpec cost_risk(const OcpSpec& spec, int j,
                   const std::vector<int>& child_modes) {
  if (spec.branching == Branching::Support) {
    return RiskSpec::max_expectation(AmbiguitySet::singleton(
        restrict_row(spec.mode_ambiguity[j].center, child_modes)));
  }
  return RiskSpec::max_expectation(spec.mode_ambiguity[j]);
}

// Appends rows of G x <= h over the nx variables starting at x0_var.
void append_polyhedron(ConicProgram& prog, const Polyhedron& set,
                       int x0_var) {
  std::vector<std::pair<int, double>> coeffs;
  for (int k = 0; k < set.G.rows(); ++k) {
    coeffs.clear();
    for (int s = 0; s < set.n; ++s) {
      if (set.G(k, s) != 0.0) coeffs.emplace_back(x0_var + s, set.G(k, s));
    }
    prog.add_row(Cone::Nonneg, coeffs, set.h[k]);
  }
}

// epi >= a^2 encoded as ((epi+1)/2, (epi-1)/2, a) in SecondOrder(3).
void append_square_epigraph(ConicProgram& prog, const AffineExpr& a,
                            int epi_var) {
  std::vector<std::pair<int, double>> coeffs;
  prog.begin_second_order_block();
  coeffs.assign({{epi_var, -0.5}});
  prog.add_block_row(coeffs, 0.5);
  prog.add_block_row(coeffs, -0.5);
  coeffs.clear();
  for (const auto& [idx, c] : a.terms) coeffs.emplace_back(idx, -c);
  prog.add_block_row(coeffs, a.constant);
  prog.end_block();
}

}  // namespace

AssembledOcp assemble(const OcpSpec& spec, const Eigen::VectorXd& x0,
                      int w0) {
  validate(spec, x0, w0);
  const int d = spec.model.num_modes();
  const int nx = spec.model.nx();
  const int nu = spec.model.nu();

  AssembledOcp out;
  if (spec.branching == Branching::Support) {
    Eigen::MatrixXd P(d, d);
    for (int j = 0; j < d; ++j) {
      P.row(j) = spec.mode_ambiguity[j].center.transpose();
    }
    out.tree = build_support(P, spec.N, w0);
  } else {
    out.tree = build_full(d, spec.N, w0);
  }
  const ScenarioTree& tree = out.tree;
  ConicProgram& prog = out.program;

  out.vars.nx = nx;
  out.vars.nu = nu;
  out.vars.x.resize(tree.num_nodes());
  out.vars.u.assign(tree.num_nodes(), -1);
  out.vars.t.resize(tree.num_nodes());
  for (int i = 0; i < tree.num_nodes(); ++i) {
    out.vars.x[i] = prog.add_variables(nx);
    out.vars.t[i] = prog.add_variables(1);
    if (!tree.is_leaf(i)) out.vars.u[i] = prog.add_variables(nu);
  }
  prog.set_objective(out.vars.t[0], 1.0);

  // Root state pinned to x0.
  for (int s = 0; s < nx; ++s) {
    AffineExpr pin = AffineExpr::variable(out.vars.x[0] + s);
    pin.constant -= x0[s];
    prog.add_row(Cone::Zero, pin);
  }

  // Dynamics: x_child - A x_anc - B u_anc - p == 0, rowwise.
  for (int i = 1; i < tree.num_nodes(); ++i) {
    const TreeNode& node = tree.nodes[i];
    const ModeDynamics& dyn = spec.model.modes[node.mode];
    const int xa = out.vars.x[node.ancestor];
    const int ua = out.vars.u[node.ancestor];
    for (int s = 0; s < nx; ++s) {
      AffineExpr row = AffineExpr::variable(out.vars.x[i] + s);
      for (int k = 0; k < nx; ++k) {
        if (dyn.A(s, k) != 0.0) row.add(xa + k, -dyn.A(s, k));
      }
      for (int k = 0; k < nu; ++k) {
        if (dyn.B(s, k) != 0.0) row.add(ua + k, -dyn.B(s, k));
      }
      row.constant -= dyn.p[s];
      prog.add_row(Cone::Zero, row);
    }
  }

  // Hard state/input constraints and terminal sets.
  for (int i = 0; i < tree.num_nodes(); ++i) {
    if (!tree.is_leaf(i)) {
      append_polyhedron(prog, spec.model.state_set, out.vars.x[i]);
      append_polyhedron(prog, spec.model.input_set, out.vars.u[i]);
    } else {
      if (spec.bind_state_set_at_leaves) {
        append_polyhedron(prog, spec.model.state_set, out.vars.x[i]);
      }
      append_polyhedron(prog, spec.terminal_set, out.vars.x[i]);
    }
  }

  const double sqrt_q = std::sqrt(spec.params.q);
  const double sqrt_r = spec.params.r > 0.0 ? std::sqrt(spec.params.r) : 0.0;

  for (int i = 0; i < tree.num_nodes(); ++i) {
    const TreeNode& node = tree.nodes[i];

    // Stage / terminal tracking term: sq >= q (x2 - v_ref)^2.
    const int sq = prog.add_variables(1);
    AffineExpr verr =
        AffineExpr::variable(out.vars.x[i] + 1, sqrt_q);  // sqrt(q) (v - ref)
    verr.constant -= sqrt_q * spec.params.v_ref;
    append_square_epigraph(prog, verr, sq);

    if (tree.is_leaf(i)) {
      // t_leaf >= terminal cost.
      AffineExpr bound = AffineExpr::variable(sq);
      bound.add(out.vars.t[i], -1.0);
      prog.add_row(Cone::Nonneg, bound);
      continue;
    }

    std::vector<int> child_modes;
    for (int c : node.children) child_modes.push_back(tree.nodes[c].mode);

    // Risk constraint over the children's soft-constraint values.
    {
      std::vector<AffineExpr> g;
      for (int c : node.children) {
        AffineExpr e(spec.model.soft.offset);
        for (int s = 0; s < nx; ++s) {
          if (spec.model.soft.coeffs[s] != 0.0) {
            e.add(out.vars.x[c] + s, spec.model.soft.coeffs[s]);
          }
        }
        g.push_back(std::move(e));
      }
      append_epigraph_dual(prog, constraint_risk(spec, node.mode, child_modes),
                           g, AffineExpr(0.0));
    }

    // Nested cost: t_i - sq - sr >= risk over children of t_child.
    AffineExpr budget = AffineExpr::variable(out.vars.t[i]);
    budget.add(sq, -1.0);
    if (spec.params.r > 0.0) {
      const int sr = prog.add_variables(1);
      AffineExpr uterm;
      for (int k = 0; k < nu; ++k) uterm.add(out.vars.u[i] + k, sqrt_r);
      append_square_epigraph(prog, uterm, sr);
      budget.add(sr, -1.0);
    }
    std::vector<AffineExpr> tc;
    for (int c : node.children) {
      tc.push_back(AffineExpr::variable(out.vars.t[c]));
    }
    append_epigraph_dual(prog, cost_risk(spec, node.mode, child_modes), tc,
                         budget);
  }

  return out;
}

OcpSolution solve_ocp(const OcpSpec& spec, const Eigen::VectorXd& x0, int w0,
                      const SolverSettings& settings) {
  AssembledOcp built = assemble(spec, x0, w0);
  const SolveResult res = solve(built.program, settings);

  OcpSolution out;
  out.message = res.message;
  switch (res.status) {
    case SolveStatus::Optimal:
      out.status = OcpStatus::Optimal;
      break;
    case SolveStatus::PrimalInfeasible:
      out.status = OcpStatus::Infeasible;
      return out;
    case SolveStatus::DualInfeasible:
    case SolveStatus::MaxIterations:
      out.status = OcpStatus::NumericalTrouble;
      return out;
  }

  NodePolicy& pol = out.policy;
  pol.tree = built.tree;
  pol.objective = res.objective;
  const int nx = built.vars.nx;
  const int nu = built.vars.nu;
  pol.u.setZero(pol.tree.num_nodes(), nu);
  for (int i = 0; i < pol.tree.num_nodes(); ++i) {
    if (built.vars.u[i] >= 0) {
      for (int k = 0; k < nu; ++k) pol.u(i, k) = res.x[built.vars.u[i] + k];
    }
  }
  // Exact affine propagation from x0, not the solver's x iterate.
  pol.x.setZero(pol.tree.num_nodes(), nx);
  pol.x.row(0) = x0.transpose();
  for (int i = 1; i < pol.tree.num_nodes(); ++i) {
    const TreeNode& node = pol.tree.nodes[i];
    pol.x.row(i) = step(spec.model, pol.x.row(node.ancestor).transpose(),
                        pol.u.row(node.ancestor).transpose(), node.mode)
                       .transpose();
  }
  return out;
}

Eigen::VectorXd extract_control(const NodePolicy& policy) {
  return policy.u.row(0).transpose();
}

}  // namespace rampc
