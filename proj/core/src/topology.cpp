#include "crossway/topology.hpp"

#include <string>

#include "crossway/errors.hpp"

namespace crossway {

comm_graph build_graph(int n, const std::vector<std::pair<int, int>>& edges) {
  if (n < 1) {
    throw validation_error("topology.n", "vehicle count must be >= 1");
  }
  comm_graph g;
  g.n = n;
  g.adjacency.assign(static_cast<std::size_t>(n) * n, 0);
  for (const auto& [i, j] : edges) {
    if (i < 1 || i > n || j < 1 || j > n) {
      throw validation_error("topology.edges",
                             "edge (" + std::to_string(i) + "," +
                                 std::to_string(j) + ") out of range 1.." +
                                 std::to_string(n));
    }
    if (i == j) {
      throw validation_error("topology.edges",
                             "self-edge (" + std::to_string(i) + "," +
                                 std::to_string(j) + ") not allowed");
    }
    g.adjacency[static_cast<std::size_t>(i - 1) * n + (j - 1)] = 1;
    g.adjacency[static_cast<std::size_t>(j - 1) * n + (i - 1)] = 1;
  }
  return g;
}

comm_graph chain_graph(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i < n; ++i) edges.emplace_back(i, i + 1);
  return build_graph(n, edges);
}

comm_graph complete_graph(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i <= n; ++i) {
    for (int j = i + 1; j <= n; ++j) edges.emplace_back(i, j);
  }
  return build_graph(n, edges);
}

std::vector<int> neighbors(const comm_graph& g, int i) {
  if (i < 1 || i > g.n) {
    throw validation_error("vertex", "index " + std::to_string(i) +
                                         " out of range 1.." +
                                         std::to_string(g.n));
  }
  std::vector<int> out;
  for (int j = 1; j <= g.n; ++j) {
    if (g.edge(i, j)) out.push_back(j);
  }
  return out;
}

bool is_connected(const comm_graph& g) {
  if (g.n < 1) return false;
  std::vector<char> seen(static_cast<std::size_t>(g.n) + 1, 0);
  std::vector<int> stack{1};
  seen[1] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int j = 1; j <= g.n; ++j) {
      if (g.edge(v, j) && !seen[j]) {
        seen[j] = 1;
        ++reached;
        stack.push_back(j);
      }
    }
  }
  return reached == g.n;
}

}  // namespace crossway
