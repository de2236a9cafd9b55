#include "rampc/scenario_tree.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>

namespace rampc {
namespace {

constexpr double kRowSumTol = 1e-9;

void check_root(int d, int N, int w0) {
  if (d < 1) throw std::invalid_argument("scenario tree: need at least one mode");
  if (N < 1) throw std::invalid_argument("scenario tree: horizon must be >= 1");
  if (w0 < 0 || w0 >= d) {
    throw std::invalid_argument("scenario tree: root mode " +
                                std::to_string(w0) + " outside [0, " +
                                std::to_string(d) + ")");
  }
}

// Grows a tree level by level; `branch(mode)` returns the (mode, prob) pairs
// of the children of a node with the given mode.
template <typename Branch>
ScenarioTree grow(int N, int w0, Branch&& branch) {
  ScenarioTree tree;
  tree.horizon = N;
  tree.stage_offsets = {0, 1};
  tree.nodes.push_back(TreeNode{0, w0, -1, 1.0, {}});
  for (int k = 0; k < N; ++k) {
    for (int i = tree.stage_begin(k); i < tree.stage_end(k); ++i) {
      for (const auto& [mode, prob] : branch(tree.nodes[i].mode)) {
        tree.nodes[i].children.push_back(tree.num_nodes());
        tree.nodes.push_back(TreeNode{k + 1, mode, i, prob, {}});
      }
    }
    tree.stage_offsets.push_back(tree.num_nodes());
  }
  return tree;
}

}  // namespace

std::vector<double> ScenarioTree::path_probabilities() const {
  std::vector<double> prob(nodes.size());
  for (int i = 0; i < num_nodes(); ++i) {
    const TreeNode& node = nodes[i];
    prob[i] = node.ancestor < 0 ? 1.0 : prob[node.ancestor] * node.cond_prob;
  }
  return prob;
}

std::string ScenarioTree::dump_json() const {
  nlohmann::json doc;
  doc["horizon"] = horizon;
  doc["nodes"] = nlohmann::json::array();
  for (const TreeNode& node : nodes) {
    doc["nodes"].push_back({{"stage", node.stage},
                            {"mode", node.mode},
                            {"ancestor", node.ancestor},
                            {"cond_prob", node.cond_prob},
                            {"children", node.children}});
  }
  return doc.dump(2);
}

ScenarioTree build_full(int d, int N, int w0, std::int64_t leaf_cap) {
  check_root(d, N, w0);
  std::int64_t leaves = 1;
  for (int k = 0; k < N; ++k) {
    leaves *= d;
    if (leaves > leaf_cap) {
      throw std::length_error(
          "scenario tree: full tree would have more than " +
          std::to_string(leaf_cap) + " leaves (" + std::to_string(d) + "^" +
          std::to_string(N) + ")");
    }
  }

  std::vector<std::pair<int, double>> all(d);
  for (int i = 0; i < d; ++i) all[i] = {i, 1.0};
  return grow(N, w0, [&](int) -> const std::vector<std::pair<int, double>>& {
    return all;
  });
}

ScenarioTree build_support(const Eigen::MatrixXd& P, int N, int w0) {
  const int d = static_cast<int>(P.rows());
  if (P.cols() != d) {
    throw std::invalid_argument("scenario tree: transition matrix must be square");
  }
  check_root(d, N, w0);

  std::vector<std::vector<std::pair<int, double>>> support(d);
  for (int j = 0; j < d; ++j) {
    double sum = 0.0;
    for (int i = 0; i < d; ++i) {
      if (P(j, i) < 0.0) {
        throw std::invalid_argument(
            "scenario tree: negative transition probability at row " +
            std::to_string(j));
      }
      sum += P(j, i);
      if (P(j, i) > 0.0) support[j].emplace_back(i, P(j, i));
    }
    if (support[j].empty()) {
      throw std::invalid_argument("scenario tree: mode " + std::to_string(j) +
                                  " has an all-zero transition row");
    }
    if (std::abs(sum - 1.0) > kRowSumTol) {
      throw std::invalid_argument("scenario tree: transition row " +
                                  std::to_string(j) + " sums to " +
                                  std::to_string(sum) + ", expected 1");
    }
  }

  return grow(N, w0,
              [&](int mode) -> const std::vector<std::pair<int, double>>& {
                return support[mode];
              });
}

}  // namespace rampc
