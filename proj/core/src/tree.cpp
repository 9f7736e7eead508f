#include "snakelab/tree.hpp"

namespace snakelab {

LabeledOrderedTree LabeledOrderedTree::from_child_lists(
    std::int32_t root, const std::vector<std::vector<std::int32_t>>& kids) {
  const std::int64_t n = std::int64_t(kids.size());
  std::vector<std::int64_t> off(std::size_t(n) + 2, 0);
  for (std::int64_t v = 1; v <= n; ++v)
    off[std::size_t(v) + 1] = off[std::size_t(v)] + std::int64_t(kids[std::size_t(v - 1)].size());
  if (off[std::size_t(n) + 1] != n - 1) throw std::invalid_argument("tree: child count != n-1");
  std::vector<std::int32_t> arr(std::size_t(n - 1));
  for (std::int64_t v = 1; v <= n; ++v) {
    const auto& ks = kids[std::size_t(v - 1)];
    for (std::size_t j = 0; j < ks.size(); ++j) arr[std::size_t(off[std::size_t(v)]) + j] = ks[j];
  }
  return from_csr(root, std::move(off), std::move(arr), true);
}

LabeledOrderedTree LabeledOrderedTree::from_csr(std::int32_t root, std::vector<std::int64_t> off,
                                                std::vector<std::int32_t> child_arr,
                                                bool validate) {
  LabeledOrderedTree t;
  t.n_ = std::int64_t(off.size()) - 2;
  t.root_ = root;
  t.off_ = std::move(off);
  t.child_arr_ = std::move(child_arr);
  t.finish(validate);
  return t;
}

void LabeledOrderedTree::finish(bool validate) {
  if (n_ < 1 || root_ < 1 || root_ > n_) throw std::invalid_argument("tree: bad root or size");
  if (std::int64_t(child_arr_.size()) != n_ - 1)
    throw std::invalid_argument("tree: child array size != n-1");
  parent_.assign(std::size_t(n_) + 1, 0);
  child_slot_.assign(std::size_t(n_) + 1, 0);
  for (std::int32_t v = 1; v <= n_; ++v) {
    const auto ks = children(v);
    for (std::size_t j = 0; j < ks.size(); ++j) {
      const std::int32_t u = ks[j];
      if (u < 1 || u > n_ || u == root_) throw std::invalid_argument("tree: bad child label");
      if (parent_[std::size_t(u)] != 0) throw std::invalid_argument("tree: duplicate parent");
      parent_[std::size_t(u)] = v;
      child_slot_[std::size_t(u)] = std::int32_t(j + 1);
    }
  }
  if (validate) {
    // Connectivity: walking up from every vertex must reach the root without cycles.
    // Preorder covers reachability from the root; count suffices since parents are unique.
    std::int64_t seen = 0;
    std::vector<std::int32_t> stack{root_};
    std::vector<char> mark(std::size_t(n_) + 1, 0);
    mark[std::size_t(root_)] = 1;
    while (!stack.empty()) {
      const std::int32_t v = stack.back();
      stack.pop_back();
      ++seen;
      for (auto u : children(v)) {
        if (mark[std::size_t(u)]) throw std::invalid_argument("tree: cycle");
        mark[std::size_t(u)] = 1;
        stack.push_back(u);
      }
    }
    if (seen != n_) throw std::invalid_argument("tree: not connected");
  }
}

std::vector<std::int32_t> LabeledOrderedTree::preorder() const {
  std::vector<std::int32_t> out;
  out.reserve(std::size_t(n_));
  std::vector<std::int32_t> stack;
  stack.push_back(root_);
  while (!stack.empty()) {
    const std::int32_t v = stack.back();
    stack.pop_back();
    out.push_back(v);
    const auto ks = children(v);
    for (std::size_t j = ks.size(); j > 0; --j) stack.push_back(ks[j - 1]);
  }
  return out;
}

DegreeSequence LabeledOrderedTree::degree_sequence() const {
  std::vector<std::int32_t> d(static_cast<std::size_t>(n_));
  for (std::int32_t v = 1; v <= n_; ++v) d[std::size_t(v - 1)] = degree(v);
  return DegreeSequence(std::move(d));
}

}  // namespace snakelab
