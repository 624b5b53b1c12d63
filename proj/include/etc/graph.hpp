#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace etc {

// Leader is node 0, followers 1..N. edge(i, j) means i receives from j.
class DirectedGraph {
 public:
  DirectedGraph() = default;
  explicit DirectedGraph(const Eigen::MatrixXd& adjacency);

  int size() const { return static_cast<int>(adj_.rows()); }
  int followers() const { return size() - 1; }
  bool edge(int i, int j) const;
  const Eigen::MatrixXi& adjacency() const { return adj_; }

  std::vector<int> neighbors(int i) const;
  // (i, j) with i >= 1 and c_ij = 1, in row-major order.
  std::vector<std::pair<int, int>> follower_edges() const;

 private:
  Eigen::MatrixXi adj_;
};

DirectedGraph build_graph(const Eigen::MatrixXd& adjacency);
std::vector<int> neighbors(const DirectedGraph& g, int i);
bool has_spanning_tree(const DirectedGraph& g);

// Leader -> 1, 1 -> 2, 1 -> 3.
DirectedGraph example1_graph();

}  // namespace etc
