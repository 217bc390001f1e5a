#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace crossway {

// Undirected communication graph over vehicles 1..n. Symmetric adjacency,
// zero diagonal, entries in {0, 1}.
struct comm_graph {
  int n = 0;
  std::vector<std::uint8_t> adjacency;  // row-major n*n

  bool edge(int i, int j) const {
    return adjacency[static_cast<std::size_t>(i - 1) * n + (j - 1)] != 0;
  }
};

// Builds the graph from unordered 1-based vertex pairs. Duplicate edges are
// idempotent; self-pairs and out-of-range indices are rejected.
comm_graph build_graph(int n, const std::vector<std::pair<int, int>>& edges);

// Predecessor-follower chain 1-2, 2-3, ..., (n-1)-n.
comm_graph chain_graph(int n);

comm_graph complete_graph(int n);

// { j : a_ij = 1 }, ascending; never contains i.
std::vector<int> neighbors(const comm_graph& g, int i);

// True iff one traversal from vertex 1 reaches every vertex.
bool is_connected(const comm_graph& g);

}  // namespace crossway
