#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snakelab/rng.hpp"
#include "snakelab/tree.hpp"

namespace snakelab {

// Bookkeeping emitted while assembling a tree from an edge-label sequence.
// With pi = ((v_1,c_1),...,(v_{n-1},c_{n-1})):
//   J:      cut positions j_1 < ... < j_{ellStar} = n. Position j is a cut when
//           v_j is the current target or already appeared as a first
//           coordinate; the final cut is n by convention.
//   Jtilde: the subset of cuts where v_j repeats an earlier first coordinate
//           (target hits excluded).
//   M:      targets m_1..m_{ellStar}; path i ends with an edge into m_i.
//   Vhat:   distinct first coordinates in order of first appearance.
//   A:      for m = 1..ellStar-1, the Vhat index of v_{j_m}, the vertex the
//           (m+1)-st path is attached to.
//   F:      flags, aligned with A: 1/2 when the attachment vertex has exactly
//           one earlier first-coordinate occurrence (1 if the new slot is to
//           the left of that occurrence's slot, 2 if to the right), else 0.
//   paths:  vertex runs (v_{j_{i-1}},...,v_{j_i - 1}) for each path (j_0 = 1).
struct ConstructionTrace {
  std::int64_t n = 1;
  std::int32_t ellStar = 0;
  std::vector<std::int64_t> J;
  std::vector<std::int64_t> Jtilde;
  std::vector<std::int32_t> M;
  std::vector<std::int32_t> A;
  std::vector<std::int8_t> F;
  std::vector<std::int32_t> Vhat;
  std::vector<std::vector<std::int32_t>> paths;

  std::string to_json() const;
  static ConstructionTrace from_json(const std::string& text);
  bool operator==(const ConstructionTrace&) const = default;
};

// Assemble the plane tree encoded by pi (n = pi.size()+1 vertices). Validates
// that pi is a permutation of a full child-slot multiset. Inverse of
// deconstruct_tree.
LabeledOrderedTree build_tree(const EdgeLabelSeq& pi, ConstructionTrace* trace = nullptr);

// Peel a tree back into its edge-label sequence: repeatedly route to the
// smallest label not yet reached and emit the slots along the new path.
EdgeLabelSeq deconstruct_tree(const LabeledOrderedTree& t);

// Distinct first coordinates of pi in order of first appearance.
std::vector<std::int32_t> first_appearance_order(const EdgeLabelSeq& pi);

// Random reordering of {0,...,w.size()-1} where each next index is picked with
// probability proportional to its weight among those remaining. Zero-weight
// indices are appended afterwards in uniform random order.
std::vector<std::int32_t> size_biased_reorder(const std::vector<std::int64_t>& w, Rng& rng);

}  // namespace snakelab
