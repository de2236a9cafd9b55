#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rampc {

enum class Cone { Zero, Nonneg, SecondOrder };

struct ConeBlock {
  Cone cone;
  int size;
};

// One affine term sum_i coeff_i * x_{col_i} + constant.  Used by builders that
// splice expressions into constraint rows without materialising dense vectors.
struct AffineExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  AffineExpr() = default;
  explicit AffineExpr(double c) : constant(c) {}
  static AffineExpr variable(int idx, double coeff = 1.0) {
    AffineExpr e;
    e.terms.emplace_back(idx, coeff);
    return e;
  }
  AffineExpr& add(int idx, double coeff) {
    terms.emplace_back(idx, coeff);
    return *this;
  }
};

// Conic feasibility/optimality problem
//   minimize    c'x
//   subject to  b - A x in K,  K a product of Zero / Nonneg / SecondOrder blocks
// stored block-wise in declaration order.  SecondOrder blocks read the first
// row of the block as the cone "t" component.
class ConicProgram {
 public:
  ConicProgram() = default;
  explicit ConicProgram(int num_vars);

  int num_vars() const { return num_vars_; }
  int num_rows() const { return num_rows_; }

  // Appends fresh variables, returning the index of the first one.
  int add_variables(int count);
  void set_objective(int var, double coeff);
  void add_objective(int var, double coeff);
  const Eigen::VectorXd objective() const;

  // Row-building API.  Rows of Zero/Nonneg cones are standalone length-1
  // blocks (adjacent blocks of the same cone are merged).  SecondOrder blocks
  // are opened with begin_second_order_block and span the rows added until
  // end_block().
  int add_row(Cone cone, std::span<const std::pair<int, double>> coeffs, double b);
  int add_row(Cone cone, const AffineExpr& lhs_minus_rhs);  // lhs <= 0 / == 0 encoding
  void begin_second_order_block();
  int add_block_row(std::span<const std::pair<int, double>> coeffs, double b);
  void end_block();

  // b - Ax with expression rows:  row value = b_row - sum coeffs*x.
  // For an AffineExpr e, add_row(cone, e) encodes "e == 0" (Zero) or
  // "e <= 0" (Nonneg): row b = -e.constant, A entries = e.terms.

  const std::vector<Eigen::Triplet<double>>& triplets() const { return triplets_; }
  const std::vector<double>& rhs() const { return b_; }
  double rhs(int row) const { return b_[row]; }
  void set_rhs(int row, double value) { b_[row] = value; }
  const std::vector<ConeBlock>& blocks() const { return blocks_; }

  // Dense views used by small-scale tests and oracles.
  Eigen::MatrixXd dense_matrix() const;
  Eigen::VectorXd dense_rhs() const;

  std::string dump_json() const;
  static ConicProgram load_json(const std::string& text);

 private:
  int num_vars_ = 0;
  int num_rows_ = 0;
  std::vector<std::pair<int, double>> objective_;
  std::vector<Eigen::Triplet<double>> triplets_;
  std::vector<double> b_;
  std::vector<ConeBlock> blocks_;
  bool in_soc_block_ = false;
};

enum class SolveStatus { Optimal, PrimalInfeasible, DualInfeasible, MaxIterations };

std::string to_string(SolveStatus s);

struct SolveResult {
  SolveStatus status = SolveStatus::MaxIterations;
  Eigen::VectorXd x;            // primal solution (Optimal) or unbounded ray (DualInfeasible)
  Eigen::VectorXd y;            // dual vector in original row order; Farkas certificate
                                // when status == PrimalInfeasible (normalised b'y = -1)
  double objective = 0.0;
  int iterations = 0;
  std::string message;
};

struct SolverSettings {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  double cert_tol = 1e-7;
  int max_iter = 200;
  int refine_steps = 2;
  // Static KKT regularisation.  Iterative refinement solves against the true
  // matrix, so accuracy is recovered; larger values trade first-pass accuracy
  // for factorisation robustness on degenerate instances.
  double static_reg = 1e-7;
  // A run that hits the iteration cap is retried at up to this many
  // alternative regularisation levels (degenerate instances are
  // path-sensitive).  0 disables retries.
  int reg_retries = 2;
  bool verbose = false;
};

// Homogeneous self-dual interior-point solver with Nesterov-Todd scalings.
// A Solver instance may be reused across calls; it caches the symbolic
// factorisation of the KKT system and reuses it whenever the sparsity
// pattern of consecutive programs matches (the hot path in closed-loop MPC,
// where only right-hand sides change between solves).
class ConicSolver {
 public:
  SolveResult solve(const ConicProgram& prog, const SolverSettings& settings = {});

  struct Impl;

 private:
  std::shared_ptr<Impl> impl_;
};

SolveResult solve(const ConicProgram& prog, const SolverSettings& settings = {});

// Independent Farkas-certificate check (primal infeasibility):
//   A'y = 0 within cert_tol, b'y < 0, y in the dual cone within cert_tol.
bool verify_certificate(const ConicProgram& prog, const Eigen::VectorXd& y,
                        double cert_tol = 1e-7);

}  // namespace rampc
