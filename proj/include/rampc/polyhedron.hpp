#pragma once

#include <Eigen/Dense>
#include <json.hpp>

namespace rampc {

// Convex polyhedron in H-representation: { x in R^n : G x <= h }.
// The ambient dimension is carried explicitly so row-free (all of R^n) and
// empty representations are both well formed.
struct Polyhedron {
  Eigen::MatrixXd G;  // m x n
  Eigen::VectorXd h;  // m
  int n = 0;

  Polyhedron() = default;
  explicit Polyhedron(int dim) : G(0, dim), h(0), n(dim) {}
  Polyhedron(Eigen::MatrixXd G_, Eigen::VectorXd h_);

  int rows() const { return static_cast<int>(G.rows()); }

  // Appends a single row g'x <= rhs in place.
  void add_row(const Eigen::VectorXd& g, double rhs);

  nlohmann::json to_json() const;
  static Polyhedron from_json(const nlohmann::json& j);
};

// Componentwise Gx <= h + tol.
bool contains(const Polyhedron& P, const Eigen::VectorXd& x, double tol = 1e-9);

// Stacked H-representation; no redundancy removal.
Polyhedron intersect(const Polyhedron& P, const Polyhedron& Q);

// Fourier-Motzkin elimination of coordinate j: the orthogonal projection onto
// the remaining coordinates, ambient dimension P.n - 1.  Rows whose
// coefficient on j is below 1e-12 in magnitude are treated as not involving j.
Polyhedron eliminate_variable(const Polyhedron& P, int j);

// Drops rows implied by the others (one LP per row).  The result has the same
// feasible set up to tol and no removable row.  An empty input collapses to
// the canonical single-row empty polyhedron {0'x <= -1}.
Polyhedron remove_redundancy(const Polyhedron& P, double tol = 1e-9);

// True iff max{ g'x : x in P } <= h + tol for every row (g, h) of Q.
// An empty P is a subset of anything; an unbounded direction yields false.
bool is_subset(const Polyhedron& P, const Polyhedron& Q, double tol = 1e-9);

// Eliminates the listed coordinates one at a time (descending index order so
// indices stay valid), pruning redundant rows after every elimination.
Polyhedron project_out(const Polyhedron& P, std::vector<int> coords,
                       double tol = 1e-9);

enum class LpOutcome { Optimal, Empty, Unbounded };

struct LinearMinimum {
  LpOutcome outcome = LpOutcome::Empty;
  double value = 0.0;      // meaningful only when outcome == Optimal
  Eigen::VectorXd argmin;  // likewise
};

// min c'x over P via the conic solver (nonnegative cone only).  Empty and
// Unbounded are ordinary return cases, not errors; solver breakdown throws.
LinearMinimum minimize_linear(const Polyhedron& P, const Eigen::VectorXd& c);

bool is_empty(const Polyhedron& P);

}  // namespace rampc
