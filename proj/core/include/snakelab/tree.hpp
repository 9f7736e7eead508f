#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace snakelab {

// Child counts indexed by vertex label: d[i-1] = number of children of label i.
struct DegreeSequence {
  std::vector<std::int32_t> d;

  DegreeSequence() = default;
  explicit DegreeSequence(std::vector<std::int32_t> deg) : d(std::move(deg)) {}

  std::int64_t n() const { return std::int64_t(d.size()); }
  std::int32_t of(std::int32_t v) const { return d[std::size_t(v) - 1]; }
  std::int64_t sum() const {
    std::int64_t s = 0;
    for (auto k : d) s += k;
    return s;
  }
  // A tree on n vertices has n-1 edges.
  bool valid() const { return n() >= 1 && sum() == n() - 1; }
  bool operator==(const DegreeSequence&) const = default;
};

// One edge drawn as (vertex, child slot): slot c means the c-th child, 1-based.
using EdgeLabel = std::pair<std::int32_t, std::int32_t>;
using EdgeLabelSeq = std::vector<EdgeLabel>;

// Rooted plane tree on labels 1..n, children in planar order.
// Storage is CSR (offsets + flat child array); immutable once built.
class LabeledOrderedTree {
 public:
  LabeledOrderedTree() = default;

  // kids[v-1] lists the children of v left to right. Validates shape.
  static LabeledOrderedTree from_child_lists(std::int32_t root,
                                             const std::vector<std::vector<std::int32_t>>& kids);

  // off has size n+2 with off[1]=0 and off[v+1]-off[v] = degree of v;
  // child_arr has size n-1 with every slot filled.
  static LabeledOrderedTree from_csr(std::int32_t root, std::vector<std::int64_t> off,
                                     std::vector<std::int32_t> child_arr, bool validate = true);

  std::int64_t n() const { return n_; }
  std::int32_t root() const { return root_; }

  std::int32_t degree(std::int32_t v) const {
    return std::int32_t(off_[std::size_t(v) + 1] - off_[std::size_t(v)]);
  }
  std::span<const std::int32_t> children(std::int32_t v) const {
    return {child_arr_.data() + off_[std::size_t(v)],
            std::size_t(off_[std::size_t(v) + 1] - off_[std::size_t(v)])};
  }
  // 1-based child slot.
  std::int32_t child(std::int32_t v, std::int32_t slot) const {
    return child_arr_[std::size_t(off_[std::size_t(v)] + slot - 1)];
  }
  // 0 for the root.
  std::int32_t parent(std::int32_t v) const { return parent_[std::size_t(v)]; }
  // Slot of v among its parent's children (1-based); 0 for the root.
  std::int32_t child_slot(std::int32_t v) const { return child_slot_[std::size_t(v)]; }

  // Flat child-slot index of (v, slot), aligned with per-edge payload arrays.
  std::int64_t edge_index(std::int32_t v, std::int32_t slot) const {
    return off_[std::size_t(v)] + slot - 1;
  }
  std::int64_t edge_offset(std::int32_t v) const { return off_[std::size_t(v)]; }

  // Depth-first, children left to right: v_1, ..., v_n (v_1 = root).
  std::vector<std::int32_t> preorder() const;

  DegreeSequence degree_sequence() const;

  bool operator==(const LabeledOrderedTree&) const = default;

 private:
  void finish(bool validate);

  std::int64_t n_ = 0;
  std::int32_t root_ = 0;
  std::vector<std::int64_t> off_;        // size n+2, labels 1..n
  std::vector<std::int32_t> child_arr_;  // size n-1
  std::vector<std::int32_t> parent_;     // size n+1
  std::vector<std::int32_t> child_slot_;  // size n+1
};

}  // namespace snakelab
