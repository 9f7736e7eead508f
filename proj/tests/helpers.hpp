#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "snakelab/tree.hpp"

// Independent looptree metric: build the loop multigraph explicitly (one cycle
// through each internal vertex and its children, in planar order) and BFS from
// the root. Used as the oracle for looptree_height.
inline std::vector<std::int64_t> looptree_bfs_oracle(const snakelab::LabeledOrderedTree& t) {
  const std::int64_t n = t.n();
  std::vector<std::vector<std::int32_t>> adj(std::size_t(n) + 1);
  for (std::int32_t v = 1; v <= n; ++v) {
    const auto ks = t.children(v);
    if (ks.empty()) continue;
    // cycle v - k1 - k2 - ... - kc - v
    std::int32_t prev = v;
    for (auto u : ks) {
      adj[std::size_t(prev)].push_back(u);
      adj[std::size_t(u)].push_back(prev);
      prev = u;
    }
    adj[std::size_t(prev)].push_back(v);
    adj[std::size_t(v)].push_back(prev);
  }
  std::vector<std::int64_t> dist(std::size_t(n) + 1, -1);
  std::deque<std::int32_t> q;
  dist[std::size_t(t.root())] = 0;
  q.push_back(t.root());
  while (!q.empty()) {
    const std::int32_t v = q.front();
    q.pop_front();
    for (auto u : adj[std::size_t(v)])
      if (dist[std::size_t(u)] < 0) {
        dist[std::size_t(u)] = dist[std::size_t(v)] + 1;
        q.push_back(u);
      }
  }
  return dist;
}
