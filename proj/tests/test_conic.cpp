#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rampc/conic.hpp"
#include "test_util.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace rampc;
using testutil::uniform;
using testutil::uniform01;
using testutil::uniform_int;

namespace {

std::pair<int, double> term(int j, double v) { return {j, v}; }

// Appends rows G x <= h for a dense matrix.
void add_ineq_rows(ConicProgram& p, const Eigen::MatrixXd& G, const Eigen::VectorXd& h) {
  for (int i = 0; i < G.rows(); ++i) {
    std::vector<std::pair<int, double>> row;
    for (int j = 0; j < G.cols(); ++j)
      if (G(i, j) != 0.0) row.push_back(term(j, G(i, j)));
    p.add_row(Cone::Nonneg, row, h[i]);
  }
}

}  // namespace

TEST_CASE("1-d LP: min x subject to x >= 1") {
  ConicProgram p(1);
  p.set_objective(0, 1.0);
  p.add_row(Cone::Nonneg, std::vector{term(0, -1.0)}, -1.0);  // -x <= -1
  auto r = solve(p);
  CHECK(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("equality-only LP handled (presolve/IPM edge)") {
  ConicProgram p(2);
  p.set_objective(0, 1.0);
  p.set_objective(1, 2.0);
  p.add_row(Cone::Zero, std::vector{term(0, 1.0)}, 3.0);
  p.add_row(Cone::Zero, std::vector{term(0, 1.0), term(1, 1.0)}, 5.0);
  auto r = solve(p);
  CHECK(r.status == SolveStatus::Optimal);
  CHECK(r.x[0] == doctest::Approx(3.0));
  CHECK(r.x[1] == doctest::Approx(2.0));
  CHECK(r.objective == doctest::Approx(7.0));
}

TEST_CASE("SOC: minimize t with (t, 3, 4) in the cone") {
  ConicProgram p(1);
  p.set_objective(0, 1.0);
  p.begin_second_order_block();
  p.add_block_row(std::vector{term(0, -1.0)}, 0.0);  // component = t
  p.add_block_row({}, 3.0);
  p.add_block_row({}, 4.0);
  p.end_block();
  auto r = solve(p);
  CHECK(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(5.0).epsilon(1e-7));
}

TEST_CASE("infeasible box yields a verifiable Farkas certificate") {
  // x >= 1 and x <= 0
  ConicProgram p(1);
  p.set_objective(0, 1.0);
  p.add_row(Cone::Nonneg, std::vector{term(0, -1.0)}, -1.0);
  p.add_row(Cone::Nonneg, std::vector{term(0, 1.0)}, 0.0);
  auto r = solve(p);
  REQUIRE(r.status == SolveStatus::PrimalInfeasible);
  CHECK(verify_certificate(p, r.y));

  // Perturbing the certificate so that ||A'y|| = 10*cert_tol must fail the check.
  Eigen::VectorXd bad = r.y;
  bad[1] += 10e-7;
  CHECK_FALSE(verify_certificate(p, bad, 1e-7));
}

TEST_CASE("unbounded LP detected") {
  // min x over {x <= 0}: x -> -inf
  ConicProgram p(1);
  p.set_objective(0, 1.0);
  p.add_row(Cone::Nonneg, std::vector{term(0, 1.0)}, 0.0);
  auto r = solve(p);
  CHECK(r.status == SolveStatus::DualInfeasible);
  // improving ray: c'x < 0, feasible direction
  CHECK(r.x[0] < 0.0);
}

TEST_CASE("presolve: singleton equality fixes variable and propagates") {
  ConicProgram p(3);
  p.set_objective(1, 1.0);
  p.add_row(Cone::Zero, std::vector{term(0, 2.0)}, 6.0);                   // x0 = 3
  p.add_row(Cone::Nonneg, std::vector{term(0, 1.0), term(1, -1.0)}, 0.0);  // x0 - x1 <= 0
  p.add_row(Cone::Nonneg, std::vector{term(2, 1.0)}, 1.0);
  auto r = solve(p);
  CHECK(r.status == SolveStatus::Optimal);
  CHECK(r.x[0] == doctest::Approx(3.0));
  CHECK(r.objective == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("presolve: contradictory singleton fixes detected as infeasible") {
  ConicProgram p(2);
  p.add_row(Cone::Zero, std::vector{term(0, 1.0)}, 1.0);
  p.add_row(Cone::Zero, std::vector{term(0, 2.0)}, 6.0);
  p.add_row(Cone::Nonneg, std::vector{term(1, 1.0)}, 5.0);
  auto r = solve(p);
  REQUIRE(r.status == SolveStatus::PrimalInfeasible);
  CHECK(verify_certificate(p, r.y));
}

TEST_CASE("presolve: empty nonneg row with negative rhs is infeasible") {
  ConicProgram p(1);
  p.add_row(Cone::Nonneg, {}, -2.0);
  p.add_row(Cone::Nonneg, std::vector{term(0, 1.0)}, 5.0);
  auto r = solve(p);
  REQUIRE(r.status == SolveStatus::PrimalInfeasible);
  CHECK(verify_certificate(p, r.y));
}

TEST_CASE("no rows at all") {
  ConicProgram p(2);
  auto r = solve(p);
  CHECK(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(0.0));
  ConicProgram q(2);
  q.set_objective(0, 1.0);
  auto r2 = solve(q);
  CHECK(r2.status == SolveStatus::DualInfeasible);
}

TEST_CASE("random LPs with constructed optima") {
  // Constructs LPs with known optimal value by choosing a primal-dual pair:
  // pick x*, an active set with duals y* > 0, b_i = a_i'x* on active rows,
  // b_i = a_i'x* + slack elsewhere, c = -A' y*.  Strong duality pins the
  // optimal value at c'x* even when the argmin is not unique.
  std::mt19937_64 rng(20240817ull);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    int n = uniform_int(rng, 1, 8);
    int m_active = uniform_int(rng, 1, n);
    int m_extra = uniform_int(rng, 1, 10);
    int m = m_active + m_extra;
    Eigen::MatrixXd G(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) G(i, j) = uniform(rng, -2.0, 2.0);
    Eigen::VectorXd xstar = testutil::random_vector(rng, n, -3.0, 3.0);
    Eigen::VectorXd h(m);
    Eigen::VectorXd ystar = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < m_active; ++i) {
      h[i] = G.row(i).dot(xstar);
      ystar[i] = uniform(rng, 0.1, 2.0);
    }
    for (int i = m_active; i < m; ++i) h[i] = G.row(i).dot(xstar) + uniform(rng, 0.05, 3.0);
    Eigen::VectorXd c = -G.transpose() * ystar;

    ConicProgram p(n);
    for (int j = 0; j < n; ++j) p.set_objective(j, c[j]);
    add_ineq_rows(p, G, h);
    auto r = solve(p);
    REQUIRE_MESSAGE(r.status == SolveStatus::Optimal, "trial ", trial);
    double expected = c.dot(xstar);
    CHECK_MESSAGE(std::abs(r.objective - expected) <=
                      1e-6 * std::max(1.0, std::abs(expected)),
                  "trial ", trial, " got ", r.objective, " want ", expected);
    // feasibility of the returned point
    CHECK(((G * r.x - h).array() <= 1e-6).all());
    ++checked;
  }
  CHECK(checked == 200);
}

TEST_CASE("random SOCPs: projection onto a box") {
  // min ||x - a||_2 st l <= x <= u has the clamp of a as its solution.
  std::mt19937_64 rng(77120011ull);
  for (int trial = 0; trial < 60; ++trial) {
    int k = uniform_int(rng, 1, 6);
    Eigen::VectorXd a = testutil::random_vector(rng, k, -4.0, 4.0);
    Eigen::VectorXd l = testutil::random_vector(rng, k, -2.0, 0.0);
    Eigen::VectorXd u = testutil::random_vector(rng, k, 0.0, 2.0);
    ConicProgram p(k + 1);
    int t = k;
    p.set_objective(t, 1.0);
    for (int j = 0; j < k; ++j) {
      p.add_row(Cone::Nonneg, std::vector{term(j, 1.0)}, u[j]);
      p.add_row(Cone::Nonneg, std::vector{term(j, -1.0)}, -l[j]);
    }
    p.begin_second_order_block();
    p.add_block_row(std::vector{term(t, -1.0)}, 0.0);
    for (int j = 0; j < k; ++j) p.add_block_row(std::vector{term(j, -1.0)}, -a[j]);
    p.end_block();
    // The argmin is only determined to ~sqrt(gap) tangentially for a norm
    // objective, so solve tighter than the default and compare with an
    // absolute margin derived from that bound.
    SolverSettings st;
    st.feas_tol = 1e-11;
    st.gap_tol = 1e-11;
    auto r = solve(p, st);
    REQUIRE(r.status == SolveStatus::Optimal);
    Eigen::VectorXd clamp = a.cwiseMax(l).cwiseMin(u);
    double expected = (clamp - a).norm();
    CHECK(r.objective == doctest::Approx(expected).epsilon(1e-7));
    for (int j = 0; j < k; ++j)
      CHECK(std::abs(r.x[j] - clamp[j]) < 1e-4);
  }
}

TEST_CASE("quadratic epigraph via rotated-cone encoding") {
  // t >= a^2 encoded as ((t+1)/2, (t-1)/2, a) in SOC; minimize t at a = 3.
  ConicProgram p(2);  // vars: a, t
  p.set_objective(1, 1.0);
  p.add_row(Cone::Zero, std::vector{term(0, 1.0)}, 3.0);
  p.begin_second_order_block();
  p.add_block_row(std::vector{term(1, -0.5)}, 0.5);
  p.add_block_row(std::vector{term(1, -0.5)}, -0.5);
  p.add_block_row(std::vector{term(0, -1.0)}, 0.0);
  p.end_block();
  auto r = solve(p);
  CHECK(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(9.0).epsilon(1e-7));
}

TEST_CASE("determinism: same program twice gives bit-identical results") {
  std::mt19937_64 rng(5150ull);
  Eigen::MatrixXd G(6, 3);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 3; ++j) G(i, j) = uniform(rng, -1.0, 1.0);
  Eigen::VectorXd h = testutil::random_vector(rng, 6, 0.5, 2.0);
  auto build = [&]() {
    ConicProgram p(3);
    for (int j = 0; j < 3; ++j) p.set_objective(j, j + 1.0);
    add_ineq_rows(p, G, h);
    return p;
  };
  auto r1 = solve(build());
  auto r2 = solve(build());
  REQUIRE(r1.status == SolveStatus::Optimal);
  CHECK(r1.status == r2.status);
  CHECK(r1.objective == r2.objective);  // bit-identical
  CHECK((r1.x.array() == r2.x.array()).all());
}

TEST_CASE("solver reuse with changed rhs keeps answers correct") {
  ConicSolver solver;
  for (int k = 0; k < 5; ++k) {
    ConicProgram p(2);
    p.set_objective(0, 1.0);
    p.set_objective(1, 1.0);
    double bound = 1.0 + k;
    p.add_row(Cone::Nonneg, std::vector{term(0, -1.0)}, -bound);
    p.add_row(Cone::Nonneg, std::vector{term(1, -1.0)}, -2.0 * bound);
    auto r = solver.solve(p);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.objective == doctest::Approx(3.0 * bound).epsilon(1e-7));
  }
}

TEST_CASE("json round trip") {
  ConicProgram p(2);
  p.set_objective(0, 1.5);
  p.add_row(Cone::Zero, std::vector{term(0, 1.0), term(1, -2.0)}, 0.25);
  p.add_row(Cone::Nonneg, std::vector{term(1, 1.0)}, 7.0);
  p.begin_second_order_block();
  p.add_block_row(std::vector{term(0, -1.0)}, 0.0);
  p.add_block_row(std::vector{term(1, -1.0)}, 0.5);
  p.end_block();
  std::string text = p.dump_json();
  ConicProgram q = ConicProgram::load_json(text);
  CHECK(q.num_vars() == 2);
  CHECK(q.num_rows() == 4);
  CHECK(q.blocks().size() == 3);
  auto r1 = solve(p);
  auto r2 = solve(q);
  CHECK(r1.status == r2.status);
}

TEST_CASE("degenerate LP: duplicate rows and free variable") {
  ConicProgram p(2);
  p.set_objective(0, 1.0);
  p.add_row(Cone::Nonneg, std::vector{term(0, -1.0)}, -1.0);
  p.add_row(Cone::Nonneg, std::vector{term(0, -1.0)}, -1.0);
  p.add_row(Cone::Nonneg, std::vector{term(0, -1.0)}, -1.0);
  p.add_row(Cone::Zero, std::vector{term(1, 1.0), term(0, 1.0)}, 4.0);
  auto r = solve(p);
  CHECK(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(r.x[1] == doctest::Approx(3.0).epsilon(1e-6));
}
