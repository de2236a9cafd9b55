#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rampc/conic.hpp"
#include "rampc/markov.hpp"

namespace rampc {

// A coherent risk measure over finitely many outcomes, in dual form
// rho[z] = max { mu'z : mu in M } for a polytope M of probability vectors:
//   AVaR(p, delta):        M = { mu in simplex : mu <= p / delta }
//   RobustAVaR(A, delta):  M = { pi in simplex : exists nu in A, delta pi <= nu }
//   MaxExpectation(A):     M = A
struct RiskSpec {
  enum class Kind { AVaR, RobustAVaR, MaxExpectation };
  Kind kind = Kind::MaxExpectation;
  AmbiguitySet set;    // Singleton(p) for AVaR
  double delta = 1.0;  // in (0, 1]; unused by MaxExpectation

  static RiskSpec avar(Eigen::VectorXd p, double delta);
  static RiskSpec robust_avar(AmbiguitySet A, double delta);
  static RiskSpec max_expectation(AmbiguitySet A);

  int dim() const { return set.dim(); }
};

// The feasible set of the dual form as explicit rows
//   E mu + F nu  (cone)  b,   cone rows Zero (==) or Nonneg (<=),
// where nu collects auxiliary lifting variables (l1 absolute values, the
// inner distribution of RobustAVaR).  rho[z] = max { z'mu : rows hold }.
struct ConicRepresentation {
  Eigen::MatrixXd E;        // rows x d
  Eigen::MatrixXd F;        // rows x n_aux (0 columns when no lifting)
  Eigen::VectorXd b;
  std::vector<Cone> cones;  // per row
};

ConicRepresentation conic_representation(const RiskSpec& spec);

// Numeric evaluation: solves the LP over the conic representation.
double risk_value(const RiskSpec& spec, const Eigen::VectorXd& z);
double avar_value(const Eigen::VectorXd& z, const Eigen::VectorXd& p,
                  double delta);
double robust_avar_value(const Eigen::VectorXd& z, const AmbiguitySet& A,
                         double delta);

// Appends to `prog` fresh multiplier variables and linear rows whose joint
// satisfiability (for fixed numeric z, t) is exactly rho[z] <= t.  The z_i
// and t may be arbitrary affine expressions over existing variables.  Each
// risk kind emits the minimal dual system for its ambiguity kind rather than
// the one-size-fits-all dual of the full row list; the equivalence is pinned
// down by the oracle tests.
void append_epigraph_dual(ConicProgram& prog, const RiskSpec& spec,
                          const std::vector<AffineExpr>& z,
                          const AffineExpr& t);

}  // namespace rampc
