#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "snakelab/tree.hpp"

namespace snakelab {

// Plane tree with one real displacement per child slot and the induced vertex
// locations. disp is flat and aligned with the tree's child slots:
// Y^{(v)}_j = disp[tree.edge_index(v, j)]. Locations satisfy loc[root] = 0 and
// loc[child(v,j)] = loc[v] + Y^{(v)}_j.
struct SpatialTree {
  LabeledOrderedTree tree;
  std::vector<double> disp;  // size n-1
  std::vector<double> loc;   // size n+1, label-indexed

  double entry(std::int32_t v, std::int32_t slot) const {
    return disp[std::size_t(tree.edge_index(v, slot))];
  }
  std::span<const double> vector_of(std::int32_t v) const {
    return {disp.data() + tree.edge_offset(v), std::size_t(tree.degree(v))};
  }
};

SpatialTree make_spatial(LabeledOrderedTree tree, std::vector<double> disp);

// sup_j |Y^{(v)}_j| per label; 0 for leaves.
std::vector<double> vertex_sup_norms(const LabeledOrderedTree& tree, std::span<const double> disp);

}  // namespace snakelab
