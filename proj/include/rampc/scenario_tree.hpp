#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace rampc {

// One node of a scenario tree.  Nodes are stored breadth-first, so the nodes
// of each stage occupy a contiguous index range and children always follow
// their ancestor.
struct TreeNode {
  int stage = 0;
  int mode = 0;
  int ancestor = -1;       // -1 for the root
  double cond_prob = 1.0;  // P[anc mode][mode]; 1.0 for the root / full trees
  std::vector<int> children;
};

struct ScenarioTree {
  std::vector<TreeNode> nodes;
  std::vector<int> stage_offsets;  // size N+2; stage k occupies
                                   // [stage_offsets[k], stage_offsets[k+1])
  int horizon = 0;                 // N

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_stages() const { return horizon + 1; }
  int stage_begin(int k) const { return stage_offsets[k]; }
  int stage_end(int k) const { return stage_offsets[k + 1]; }
  int stage_size(int k) const { return stage_end(k) - stage_begin(k); }
  bool is_leaf(int i) const { return nodes[i].stage == horizon; }

  // Unconditional probability of reaching each node (product of conditional
  // probabilities along the ancestor chain).
  std::vector<double> path_probabilities() const;

  std::string dump_json() const;
};

// Complete d-ary tree of depth N rooted at mode w0: every node branches into
// all d modes.  Throws std::length_error when d^N exceeds `leaf_cap`.
ScenarioTree build_full(int d, int N, int w0,
                        std::int64_t leaf_cap = 1000000);

// Nominal tree: children of a node with mode j are exactly the modes i with
// P(j, i) > 0 (strictly; exact zeros prune), annotated with P(j, i).
ScenarioTree build_support(const Eigen::MatrixXd& P, int N, int w0);

}  // namespace rampc
