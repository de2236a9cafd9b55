#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <set>
#include <vector>

#include "rampc/markov.hpp"
#include "rampc/scenario_tree.hpp"
#include "test_util.hpp"

using namespace rampc;

namespace {

// Structural invariants every tree must satisfy: contiguous breadth-first
// stages, ancestor/child duality, leaves exactly at the final stage.
void check_structure(const ScenarioTree& tree) {
  REQUIRE(tree.num_nodes() >= 1);
  REQUIRE(static_cast<int>(tree.stage_offsets.size()) == tree.horizon + 2);
  CHECK(tree.stage_offsets.front() == 0);
  CHECK(tree.stage_offsets.back() == tree.num_nodes());

  int total = 0;
  for (int k = 0; k <= tree.horizon; ++k) {
    CHECK(tree.stage_begin(k) == total);  // contiguous partition
    for (int i = tree.stage_begin(k); i < tree.stage_end(k); ++i) {
      CHECK(tree.nodes[i].stage == k);
    }
    total += tree.stage_size(k);
  }
  CHECK(total == tree.num_nodes());

  CHECK(tree.nodes[0].ancestor == -1);
  for (int i = 0; i < tree.num_nodes(); ++i) {
    const TreeNode& node = tree.nodes[i];
    for (int c : node.children) {
      CHECK(tree.nodes[c].ancestor == i);
      CHECK(tree.nodes[c].stage == node.stage + 1);
    }
    if (i > 0) {
      const auto& sibs = tree.nodes[node.ancestor].children;
      CHECK(std::count(sibs.begin(), sibs.end(), i) == 1);
    }
    CHECK(tree.is_leaf(i) == node.children.empty());
    CHECK(tree.is_leaf(i) == (node.stage == tree.horizon));
  }
}

}  // namespace

TEST_CASE("full tree enumerates every mode sequence") {
  const ScenarioTree tree = build_full(4, 2, 1);
  check_structure(tree);
  CHECK(tree.stage_size(0) == 1);
  CHECK(tree.stage_size(1) == 4);
  CHECK(tree.stage_size(2) == 16);
  CHECK(tree.nodes[0].mode == 1);

  // Walk ancestor chains from the leaves: all 16 (w1, w2) pairs distinct.
  std::set<std::pair<int, int>> seqs;
  for (int i = tree.stage_begin(2); i < tree.stage_end(2); ++i) {
    seqs.insert({tree.nodes[tree.nodes[i].ancestor].mode, tree.nodes[i].mode});
  }
  CHECK(seqs.size() == 16);
}

TEST_CASE("degenerate full trees") {
  const ScenarioTree path = build_full(1, 5, 0);
  check_structure(path);
  CHECK(path.num_nodes() == 6);
  for (const TreeNode& node : path.nodes) CHECK(node.mode == 0);

  const ScenarioTree big = build_full(4, 5, 2);
  check_structure(big);
  CHECK(big.num_nodes() == 1365);  // 1 + 4 + 16 + 64 + 256 + 1024
  for (int k = 0; k <= 5; ++k) {
    CHECK(big.stage_size(k) == static_cast<int>(std::pow(4, k)));
  }
}

TEST_CASE("full tree size cap and preconditions") {
  CHECK_THROWS_AS(build_full(4, 10, 0), std::length_error);  // 4^10 > 1e6
  CHECK_NOTHROW(build_full(2, 3, 0, 8));                     // 2^3 == cap
  CHECK_THROWS_AS(build_full(2, 3, 0, 7), std::length_error);
  CHECK_THROWS_AS(build_full(0, 2, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_full(3, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_full(3, 2, 3), std::invalid_argument);
  CHECK_THROWS_AS(build_full(3, 2, -1), std::invalid_argument);
}

TEST_CASE("support tree of the identity matrix is a path") {
  const ScenarioTree tree =
      build_support(Eigen::MatrixXd::Identity(3, 3), 3, 2);
  check_structure(tree);
  CHECK(tree.num_nodes() == 4);
  for (const TreeNode& node : tree.nodes) {
    CHECK(node.mode == 2);
    CHECK(node.cond_prob == 1.0);
  }
}

TEST_CASE("support tree branches exactly on the positive entries") {
  Eigen::MatrixXd P(4, 4);
  P.setZero();
  P.row(0) << 0.5, 0.5, 0.0, 0.0;
  P.row(1) << 0.0, 1.0, 0.0, 0.0;
  P.row(2) << 0.25, 0.25, 0.25, 0.25;
  P.row(3) << 0.0, 0.0, 0.5, 0.5;
  const ScenarioTree tree = build_support(P, 3, 0);
  check_structure(tree);

  for (int i = 0; i < tree.num_nodes(); ++i) {
    const TreeNode& node = tree.nodes[i];
    if (tree.is_leaf(i)) continue;
    std::vector<int> modes;
    double psum = 0.0;
    for (int c : node.children) {
      modes.push_back(tree.nodes[c].mode);
      CHECK(tree.nodes[c].cond_prob == P(node.mode, tree.nodes[c].mode));
      CHECK(tree.nodes[c].cond_prob > 0.0);
      psum += tree.nodes[c].cond_prob;
    }
    CHECK(psum == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<int> expect;
    for (int m = 0; m < 4; ++m) {
      if (P(node.mode, m) > 0.0) expect.push_back(m);
    }
    CHECK(modes == expect);
  }
}

TEST_CASE("strictly positive matrix reproduces the full-tree shape") {
  const Eigen::MatrixXd P = transition_preset("P_p");
  REQUIRE((P.array() > 0.0).all());
  const ScenarioTree nominal = build_support(P, 2, 1);
  const ScenarioTree full = build_full(4, 2, 1);
  REQUIRE(nominal.num_nodes() == full.num_nodes());
  for (int i = 0; i < full.num_nodes(); ++i) {
    CHECK(nominal.nodes[i].stage == full.nodes[i].stage);
    CHECK(nominal.nodes[i].mode == full.nodes[i].mode);
    CHECK(nominal.nodes[i].ancestor == full.nodes[i].ancestor);
    CHECK(nominal.nodes[i].children == full.nodes[i].children);
  }
}

TEST_CASE("support tree rejects malformed matrices") {
  Eigen::MatrixXd zero_row(2, 2);
  zero_row << 1.0, 0.0, 0.0, 0.0;
  CHECK_THROWS_AS(build_support(zero_row, 2, 0), std::invalid_argument);

  Eigen::MatrixXd bad_sum(2, 2);
  bad_sum << 0.5, 0.4, 0.5, 0.5;
  CHECK_THROWS_AS(build_support(bad_sum, 2, 0), std::invalid_argument);

  Eigen::MatrixXd negative(2, 2);
  negative << 1.2, -0.2, 0.5, 0.5;
  CHECK_THROWS_AS(build_support(negative, 2, 0), std::invalid_argument);

  Eigen::MatrixXd rect(2, 3);
  rect.setConstant(1.0 / 3.0);
  CHECK_THROWS_AS(build_support(rect, 2, 0), std::invalid_argument);
}

TEST_CASE("path probabilities are consistent per stage") {
  std::mt19937_64 rng(0x7ee70001);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 2 + (trial % 3);
    Eigen::MatrixXd P(d, d);
    for (int j = 0; j < d; ++j) {
      Eigen::VectorXd row = testutil::random_simplex(rng, d);
      // Zero out one entry sometimes to exercise pruning.
      if (trial % 2 == 1) {
        int drop = static_cast<int>(testutil::uniform_int(rng, 0, d - 1));
        row[drop] = 0.0;
        row /= row.sum();
      }
      P.row(j) = row;
    }
    const ScenarioTree tree = build_support(P, 4, 0);
    check_structure(tree);
    const std::vector<double> prob = tree.path_probabilities();
    for (int k = 0; k <= tree.horizon; ++k) {
      double total = 0.0;
      for (int i = tree.stage_begin(k); i < tree.stage_end(k); ++i) {
        total += prob[i];
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("json dump round-trips the node data") {
  const ScenarioTree tree = build_full(3, 2, 0);
  const auto doc = nlohmann::json::parse(tree.dump_json());
  CHECK(doc["horizon"] == 2);
  REQUIRE(doc["nodes"].size() == 13);
  CHECK(doc["nodes"][0]["ancestor"] == -1);
  for (int i = 0; i < tree.num_nodes(); ++i) {
    CHECK(doc["nodes"][i]["stage"] == tree.nodes[i].stage);
    CHECK(doc["nodes"][i]["mode"] == tree.nodes[i].mode);
    CHECK(doc["nodes"][i]["ancestor"] == tree.nodes[i].ancestor);
    CHECK(doc["nodes"][i]["children"].get<std::vector<int>>() ==
          tree.nodes[i].children);
  }
}
