#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "rampc/polyhedron.hpp"
#include "test_util.hpp"

using namespace rampc;

namespace {

Polyhedron make(const Eigen::MatrixXd& G, const Eigen::VectorXd& h) {
  return Polyhedron(G, h);
}

Polyhedron interval(double lo, double hi) {
  Eigen::MatrixXd G(2, 1);
  G << 1, -1;
  Eigen::VectorXd h(2);
  h << hi, -lo;
  return make(G, h);
}

// Random polyhedron guaranteed nonempty (0 is strictly interior).
Polyhedron random_poly(std::mt19937_64& rng, int n, int m) {
  Eigen::MatrixXd G(m, n);
  Eigen::VectorXd h(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) G(i, j) = testutil::uniform(rng, -1.0, 1.0);
    h[i] = testutil::uniform(rng, 0.2, 1.2);
  }
  return make(G, h);
}

}  // namespace

TEST_CASE("contains: interior, boundary tolerance, dimension check") {
  Eigen::MatrixXd G(1, 1);
  G << 1;
  Eigen::VectorXd h(1);
  h << 1;
  Polyhedron P = make(G, h);
  CHECK(contains(P, Eigen::VectorXd::Zero(1), 0.0));
  Eigen::VectorXd x(1);
  x << 1 + 1e-12;
  CHECK(contains(P, x, 1e-9));
  x << 1 + 1e-6;
  CHECK_FALSE(contains(P, x, 1e-9));
  CHECK_THROWS_AS(contains(P, Eigen::VectorXd::Zero(2), 0.0),
                  std::invalid_argument);
}

TEST_CASE("intersect stacks rows; disjoint intersection is empty") {
  Eigen::MatrixXd Gu(1, 1), Gl(1, 1);
  Gu << 1;
  Gl << -1;
  Eigen::VectorXd hu(1), hl(1);
  hu << 1;
  hl << 0;
  Polyhedron U = make(Gu, hu);  // x <= 1
  Polyhedron L = make(Gl, hl);  // x >= 0
  Polyhedron B = intersect(U, L);
  CHECK(B.rows() == 2);
  Eigen::VectorXd x(1);
  x << 0.5;
  CHECK(contains(B, x));
  x << -0.5;
  CHECK_FALSE(contains(B, x));
  x << 1.5;
  CHECK_FALSE(contains(B, x));

  Polyhedron PP = intersect(U, U);
  CHECK(PP.rows() == 2);
  x << 0.3;
  CHECK(contains(PP, x) == contains(U, x));

  Eigen::VectorXd hl2(1);
  hl2 << -1;  // x >= 1
  Polyhedron L2 = make(Gl, hl2);
  CHECK(is_empty(intersect(U, L2)) == false);  // x in [1, 1] is a point
  Eigen::VectorXd hu2(1);
  hu2 << 0;  // x <= 0
  CHECK(is_empty(intersect(make(Gu, hu2), L2)));

  Polyhedron W(2);
  CHECK_THROWS_AS(intersect(U, W), std::invalid_argument);
}

TEST_CASE("eliminate_variable: witness pairing, untouched rows, contradiction") {
  // {(x,u) : u <= 1, u >= 0, x <= u}  --eliminate u-->  {x <= 1}
  Eigen::MatrixXd G(3, 2);
  // columns: x, u
  G << 0, 1,  // u <= 1
      0, -1,  // -u <= 0
      1, -1;  // x - u <= 0
  Eigen::VectorXd h(3);
  h << 1, 0, 0;
  Polyhedron P = make(G, h);
  Polyhedron Q = eliminate_variable(P, 1);
  CHECK(Q.n == 1);
  Eigen::VectorXd x(1);
  x << 0.999;
  CHECK(contains(Q, x));
  x << 1.001;
  CHECK_FALSE(contains(Q, x));
  x << -5.0;
  CHECK(contains(Q, x));  // projection is unbounded below

  // Rows not involving j survive unchanged with the column dropped.
  Eigen::MatrixXd G2(2, 2);
  G2 << 1, 0, -1, 0;
  Eigen::VectorXd h2(2);
  h2 << 2, 0;
  Polyhedron P2 = make(G2, h2);
  Polyhedron Q2 = eliminate_variable(P2, 1);
  CHECK(Q2.n == 1);
  CHECK(Q2.rows() == 2);
  x << 1.0;
  CHECK(contains(Q2, x));
  x << 3.0;
  CHECK_FALSE(contains(Q2, x));

  // {(x,u): x - u <= 0, u - x <= -1} --eliminate u--> {0 <= -1} (empty)
  Eigen::MatrixXd G3(2, 2);
  G3 << 1, -1, -1, 1;
  Eigen::VectorXd h3(2);
  h3 << 0, -1;
  Polyhedron P3 = make(G3, h3);
  Polyhedron Q3 = eliminate_variable(P3, 1);
  CHECK(is_empty(Q3));
}

TEST_CASE("remove_redundancy drops dominated and duplicated rows") {
  Eigen::MatrixXd G(2, 1);
  G << 1, 1;
  Eigen::VectorXd h(2);
  h << 1, 2;
  Polyhedron P = make(G, h);
  Polyhedron Q = remove_redundancy(P);
  CHECK(Q.rows() == 1);
  CHECK(Q.h[0] == doctest::Approx(1.0));

  Polyhedron single = make(G.topRows(1), h.head(1));
  CHECK(remove_redundancy(single).rows() == 1);

  // FM output with duplicated rows collapses to a single row.
  Eigen::MatrixXd G3(3, 2);
  G3 << 0, 1, 0, -1, 1, -1;
  Eigen::VectorXd h3(3);
  h3 << 1, 0, 0;
  Polyhedron fm = eliminate_variable(make(G3, h3), 1);
  Polyhedron fmr = remove_redundancy(fm);
  CHECK(fmr.rows() == 1);

  CHECK_THROWS_AS(remove_redundancy(P, 0.0), std::invalid_argument);
}

TEST_CASE("remove_redundancy collapses an empty set to its canonical form") {
  Eigen::MatrixXd G(2, 1);
  G << 1, -1;
  Eigen::VectorXd h(2);
  h << 0, -1;  // x <= 0 and x >= 1
  Polyhedron Q = remove_redundancy(make(G, h));
  CHECK(Q.rows() == 1);
  CHECK(is_empty(Q));
}

TEST_CASE("is_subset: intervals and l1-ball polytopes") {
  Polyhedron box = interval(0.0, 1.0);
  Eigen::MatrixXd Gh(1, 1);
  Gh << -1;
  Eigen::VectorXd hh(1);
  hh << 1;  // x >= -1
  Polyhedron half = make(Gh, hh);
  CHECK(is_subset(box, half));
  CHECK_FALSE(is_subset(half, box));

  // l1 balls around simplex points: center (0.6, 0.4) radius 0.1 sits inside
  // center (0.5, 0.5) radius 0.5 (triangle inequality: 0.2 + 0.1 <= 0.5).
  auto l1ball = [](double c1, double c2, double r) {
    // |p1-c1| + |p2-c2| <= r as four sign-pattern rows, plus the simplex.
    Eigen::MatrixXd G(8, 2);
    Eigen::VectorXd h(8);
    int k = 0;
    for (double s1 : {-1.0, 1.0})
      for (double s2 : {-1.0, 1.0}) {
        G.row(k) << s1, s2;
        h[k] = r + s1 * c1 + s2 * c2;
        ++k;
      }
    G.row(4) << 1, 1;
    h[4] = 1;
    G.row(5) << -1, -1;
    h[5] = -1;
    G.row(6) << -1, 0;
    h[6] = 0;
    G.row(7) << 0, -1;
    h[7] = 0;
    return Polyhedron(G, h);
  };
  Polyhedron small = l1ball(0.6, 0.4, 0.1);
  Polyhedron big = l1ball(0.5, 0.5, 0.5);
  CHECK(is_subset(small, big));
  CHECK_FALSE(is_subset(big, small));

  // Unbounded P in a constrained direction is never a subset.
  Polyhedron line(1);
  CHECK_FALSE(is_subset(line, box));

  // Empty P is a subset of anything.
  Eigen::MatrixXd Ge(2, 1);
  Ge << 1, -1;
  Eigen::VectorXd he(2);
  he << 0, -1;
  CHECK(is_subset(make(Ge, he), box));
}

TEST_CASE("minimize_linear: optimum, unbounded, empty") {
  Polyhedron box = interval(0.0, 1.0);
  Eigen::VectorXd c(1);
  c << 1;
  auto lm = minimize_linear(box, c);
  REQUIRE(lm.outcome == LpOutcome::Optimal);
  CHECK(lm.value == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(lm.argmin[0] == doctest::Approx(0.0).epsilon(1e-6));

  // min -x over {x >= 0} is unbounded below.
  Eigen::MatrixXd G(1, 1);
  G << -1;
  Eigen::VectorXd h(1);
  h << 0;
  c << -1;
  CHECK(minimize_linear(make(G, h), c).outcome == LpOutcome::Unbounded);

  Eigen::MatrixXd Ge(2, 1);
  Ge << 1, -1;
  Eigen::VectorXd he(2);
  he << 0, -1;
  CHECK(minimize_linear(make(Ge, he), c).outcome == LpOutcome::Empty);
}

TEST_CASE("json round trip") {
  std::mt19937_64 rng(4101u);
  Polyhedron P = random_poly(rng, 3, 5);
  Polyhedron Q = Polyhedron::from_json(P.to_json());
  CHECK(Q.n == P.n);
  REQUIRE(Q.rows() == P.rows());
  CHECK((Q.G - P.G).cwiseAbs().maxCoeff() == 0.0);
  CHECK((Q.h - P.h).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("property: projection soundness against grid witnesses") {
  std::mt19937_64 rng(90210u);
  int witnesses_seen = 0;
  for (int trial = 0; trial < 25; ++trial) {
    int n = testutil::uniform_int(rng, 2, 3);
    int m = testutil::uniform_int(rng, 3, 10);
    Polyhedron P = random_poly(rng, n, m);
    int j = testutil::uniform_int(rng, 0, n - 1);
    Polyhedron Q = eliminate_variable(P, j);
    for (int it = 0; it < 40; ++it) {
      Eigen::VectorXd xr = testutil::random_vector(rng, n - 1, -2.0, 2.0);
      bool witness = false;
      for (int g = 0; g <= 600 && !witness; ++g) {
        double u = -3.0 + 6.0 * g / 600.0;
        Eigen::VectorXd full(n);
        full.head(j) = xr.head(j);
        full[j] = u;
        full.tail(n - 1 - j) = xr.tail(n - 1 - j);
        witness = contains(P, full, 0.0);
      }
      if (witness) {
        ++witnesses_seen;
        CHECK(contains(Q, xr, 1e-9));  // grid witness implies membership
      } else {
        // No real witness can exist when xr is clearly outside the projection.
        if (!contains(Q, xr, 1e-9)) CHECK_FALSE(witness);
      }
    }
  }
  CHECK(witnesses_seen > 100);  // the check above actually exercised something
}

TEST_CASE("property: redundancy removal preserves membership") {
  std::mt19937_64 rng(555123u);
  for (int trial = 0; trial < 10; ++trial) {
    int n = testutil::uniform_int(rng, 2, 4);
    int m = testutil::uniform_int(rng, 4, 8);
    Polyhedron P = random_poly(rng, n, m);
    // Salt with deliberately dominated copies (same row, larger offset).
    for (int extra = 0; extra < 3; ++extra) {
      int r = testutil::uniform_int(rng, 0, m - 1);
      double scale = testutil::uniform(rng, 1.0, 3.0);
      P.add_row(P.G.row(r).transpose() * scale,
                P.h[r] * scale + testutil::uniform(rng, 0.0, 1.0));
    }
    Polyhedron Q = remove_redundancy(P);
    CHECK(Q.rows() <= P.rows());
    for (int it = 0; it < 100; ++it) {
      Eigen::VectorXd x = testutil::random_vector(rng, n, -3.0, 3.0);
      CHECK(contains(P, x) == contains(Q, x));
    }
  }
}

TEST_CASE("property: is_subset is a partial order on feasible sets") {
  std::mt19937_64 rng(24680u);
  for (int trial = 0; trial < 10; ++trial) {
    int n = testutil::uniform_int(rng, 2, 3);
    Polyhedron P = random_poly(rng, n, testutil::uniform_int(rng, 3, 8));
    CHECK(is_subset(P, P));  // reflexive

    // Same feasible set, different representation: positively rescaled rows
    // plus a redundant one.
    Polyhedron Q = P;
    for (int i = 0; i < Q.rows(); ++i) {
      double s = testutil::uniform(rng, 0.5, 2.0);
      Q.G.row(i) *= s;
      Q.h[i] *= s;
    }
    Q.add_row(P.G.row(0).transpose(), P.h[0] + 1.0);
    CHECK(is_subset(P, Q));
    CHECK(is_subset(Q, P));
    for (int it = 0; it < 50; ++it) {
      Eigen::VectorXd x = testutil::random_vector(rng, n, -3.0, 3.0);
      CHECK(contains(P, x) == contains(Q, x));
    }
  }
}

TEST_CASE("project_out eliminates several coordinates with pruning") {
  // Box in 3 variables; projecting out the last two leaves the first interval.
  Eigen::MatrixXd G(6, 3);
  Eigen::VectorXd h(6);
  G.setZero();
  for (int j = 0; j < 3; ++j) {
    G(2 * j, j) = 1;
    h[2 * j] = j + 1.0;
    G(2 * j + 1, j) = -1;
    h[2 * j + 1] = 0.0;
  }
  Polyhedron P(G, h);
  Polyhedron Q = project_out(P, {1, 2});
  CHECK(Q.n == 1);
  CHECK(Q.rows() == 2);
  Eigen::VectorXd x(1);
  x << 0.5;
  CHECK(contains(Q, x));
  x << 1.5;
  CHECK_FALSE(contains(Q, x));
}
