#include <algorithm>
#include <stdexcept>
#include <vector>

#include "hif/preprocess.hpp"

namespace hif {

namespace {

// BFS level structure from root over unvisited vertices; returns the order
// and fills level[] for the reached vertices
std::vector<Index> bfs_levels(Index root, std::span<const Index> off, std::span<const Index> adj,
                              const std::vector<char>& visited, std::vector<Index>& level) {
  std::vector<Index> order{root};
  level[root] = 0;
  for (std::size_t h = 0; h < order.size(); ++h) {
    const Index x = order[h];
    for (Index p = off[x]; p < off[x + 1]; ++p) {
      const Index y = adj[p];
      if (!visited[y] && level[y] < 0) {
        level[y] = level[x] + 1;
        order.push_back(y);
      }
    }
  }
  return order;
}

Index pseudo_peripheral(Index start, std::span<const Index> off, std::span<const Index> adj,
                        const std::vector<char>& visited, std::vector<Index>& level) {
  auto degree = [&](Index x) { return off[x + 1] - off[x]; };
  Index root = start;
  Index ecc = -1;
  for (int iter = 0; iter < 16; ++iter) {
    auto order = bfs_levels(root, off, adj, visited, level);
    const Index depth = level[order.back()];
    Index cand = order.back();
    for (Index x : order)
      if (level[x] == depth && degree(x) < degree(cand)) cand = x;
    for (Index x : order) level[x] = -1;
    if (depth <= ecc) break;
    ecc = depth;
    root = cand;
  }
  return root;
}

}  // namespace

std::vector<Index> rcm_order(Index n, std::span<const Index> off, std::span<const Index> adj) {
  if (Index(off.size()) != n + 1) throw std::invalid_argument("rcm: offsets length mismatch");
  auto degree = [&](Index x) { return off[x + 1] - off[x]; };
  std::vector<char> visited(n, 0);
  std::vector<Index> level(n, -1), order;
  order.reserve(n);
  std::vector<Index> by_degree(n);
  for (Index i = 0; i < n; ++i) by_degree[i] = i;
  std::stable_sort(by_degree.begin(), by_degree.end(),
                   [&](Index a, Index b) { return degree(a) < degree(b); });
  std::vector<Index> nbrs;
  for (Index s : by_degree) {
    if (visited[s]) continue;
    const Index root = pseudo_peripheral(s, off, adj, visited, level);
    std::size_t h = order.size();
    order.push_back(root);
    visited[root] = 1;
    for (; h < order.size(); ++h) {
      const Index x = order[h];
      nbrs.clear();
      for (Index p = off[x]; p < off[x + 1]; ++p)
        if (!visited[adj[p]]) nbrs.push_back(adj[p]);
      std::stable_sort(nbrs.begin(), nbrs.end(),
                       [&](Index a, Index b) { return degree(a) < degree(b); });
      for (Index y : nbrs) {
        visited[y] = 1;
        order.push_back(y);
      }
    }
  }
  std::reverse(order.begin(), order.end());
  return order;
}

}  // namespace hif
