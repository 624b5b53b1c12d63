#include "etc/graph.hpp"

#include <queue>
#include <string>

#include "etc/error.hpp"

namespace etc {

DirectedGraph::DirectedGraph(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw Error(Errc::NonSquare, "adjacency must be square");
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      double v = a(i, j);
      if (v != 0.0 && v != 1.0)
        throw Error(Errc::NonBinaryEntry,
                    "entry (" + std::to_string(i) + "," + std::to_string(j) + ") is not 0/1");
    }
    if (a(i, i) != 0.0) throw Error(Errc::SelfLoop, "self loop at node " + std::to_string(i));
  }
  adj_ = a.cast<int>();
}

bool DirectedGraph::edge(int i, int j) const {
  if (i < 0 || j < 0 || i >= size() || j >= size())
    throw Error(Errc::IndexOutOfRange, "node index out of range");
  return adj_(i, j) == 1;
}

std::vector<int> DirectedGraph::neighbors(int i) const {
  if (i < 0 || i >= size()) throw Error(Errc::IndexOutOfRange, "node " + std::to_string(i));
  std::vector<int> out;
  for (int j = 0; j < size(); ++j)
    if (j != i && adj_(i, j) == 1) out.push_back(j);
  return out;
}

std::vector<std::pair<int, int>> DirectedGraph::follower_edges() const {
  std::vector<std::pair<int, int>> out;
  for (int i = 1; i < size(); ++i)
    for (int j = 0; j < size(); ++j)
      if (adj_(i, j) == 1) out.emplace_back(i, j);
  return out;
}

DirectedGraph build_graph(const Eigen::MatrixXd& adjacency) { return DirectedGraph(adjacency); }

std::vector<int> neighbors(const DirectedGraph& g, int i) { return g.neighbors(i); }

bool has_spanning_tree(const DirectedGraph& g) {
  const int n = g.size();
  if (n <= 1) return true;
  const auto& a = g.adjacency();
  for (int root = 0; root < n; ++root) {
    std::vector<char> seen(n, 0);
    std::queue<int> q;
    q.push(root);
    seen[root] = 1;
    int count = 1;
    while (!q.empty()) {
      int j = q.front();
      q.pop();
      // information flows j -> i when c_ij = 1
      for (int i = 0; i < n; ++i) {
        if (!seen[i] && a(i, j) == 1) {
          seen[i] = 1;
          ++count;
          q.push(i);
        }
      }
    }
    if (count == n) return true;
  }
  return false;
}

DirectedGraph example1_graph() {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(4, 4);
  c(1, 0) = 1;
  c(2, 1) = 1;
  c(3, 1) = 1;
  return DirectedGraph(c);
}

}  // namespace etc
