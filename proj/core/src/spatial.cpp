#include "snakelab/spatial.hpp"

#include <stdexcept>

namespace snakelab {

SpatialTree make_spatial(LabeledOrderedTree tree, std::vector<double> disp) {
  if (std::int64_t(disp.size()) != tree.n() - 1)
    throw std::invalid_argument("spatial: displacement size != n-1");
  SpatialTree s;
  s.loc.assign(std::size_t(tree.n()) + 1, 0.0);
  // Locations in preorder so parents come first.
  std::vector<std::int32_t> stack{tree.root()};
  while (!stack.empty()) {
    const std::int32_t v = stack.back();
    stack.pop_back();
    const auto ks = tree.children(v);
    for (std::size_t j = ks.size(); j > 0; --j) {
      const std::int32_t u = ks[j - 1];
      s.loc[std::size_t(u)] =
          s.loc[std::size_t(v)] + disp[std::size_t(tree.edge_offset(v)) + j - 1];
      stack.push_back(u);
    }
  }
  s.tree = std::move(tree);
  s.disp = std::move(disp);
  return s;
}

std::vector<double> vertex_sup_norms(const LabeledOrderedTree& tree,
                                     std::span<const double> disp) {
  std::vector<double> sup(std::size_t(tree.n()) + 1, 0.0);
  for (std::int32_t v = 1; v <= tree.n(); ++v) {
    double m = 0.0;
    const auto o = tree.edge_offset(v);
    for (std::int32_t j = 0; j < tree.degree(v); ++j)
      m = std::max(m, std::abs(disp[std::size_t(o + j)]));
    sup[std::size_t(v)] = m;
  }
  return sup;
}

}  // namespace snakelab
