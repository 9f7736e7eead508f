#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "snakelab/spatial.hpp"
#include "snakelab/tree.hpp"

namespace snakelab {

// Discrete encoding processes of a plane tree (and its spatial labels).
// Conventions, with v_1,...,v_n the depth-first order and n = |T|:
//   W[0] = 0, W[i] = sum_{j<=i} (c(v_j) - 1)          (so W[n] = -1)
//   H[i] = |v_{i+1}| for 0 <= i <= n-1, H[n] = 0
//   Hloop[i] = sum of min{slot, c(parent)+1-slot} over the root path of v_{i+1},
//              Hloop[n] = 0  (graph distance root -> v in the loop multigraph)
//   contour w_0,...,w_{2n-2}: each vertex visited 1 + c(v) times; Htilde[i] = |w_i|
//   R[i] = loc(v_{i+1}) for i <= n-1, R[n] = 0;  Rtilde[i] = loc(w_i)
struct EncodedPaths {
  std::vector<std::int32_t> order;    // v_1..v_n
  std::vector<std::int64_t> W;        // size n+1
  std::vector<std::int32_t> H;        // size n+1
  std::vector<std::int64_t> Hloop;    // size n+1
  std::vector<std::int32_t> contour;  // size 2n-1
  std::vector<std::int32_t> Htilde;   // size 2n-1
  std::vector<double> R;              // size n+1 when spatial, else empty
  std::vector<double> Rtilde;         // size 2n-1 when spatial, else empty
};

std::vector<std::int64_t> lukasiewicz(const LabeledOrderedTree& t);
std::vector<std::int32_t> height_process(const LabeledOrderedTree& t);
std::vector<std::int64_t> looptree_height(const LabeledOrderedTree& t);

struct ContourPaths {
  std::vector<std::int32_t> vertices;  // w_0..w_{2n-2}
  std::vector<std::int32_t> depth;     // |w_i|
};
ContourPaths contour_process(const LabeledOrderedTree& t);

// a1*H[i] - (2/a2)*W[i] on 0..n-1, final entry 0. With iid-free displacements
// Y^{(v)}_j = a1 - (2/a2)(c(v)-j) this equals the snake head R exactly.
std::vector<double> combine_height_luka(double a1, double a2, std::span<const std::int64_t> W,
                                        std::span<const std::int32_t> H);

EncodedPaths encode_all(const LabeledOrderedTree& t);
EncodedPaths encode_all(const SpatialTree& s);

// CSV with header index,W,H,R,Hloop (R blank when absent).
void write_paths_csv(const std::string& path, const EncodedPaths& p);
// CSV with header index,vertex,Htilde,Rtilde (Rtilde blank when absent).
// pad_to_2n appends one zero row so the file has 2n rows.
void write_contour_csv(const std::string& path, const EncodedPaths& p, bool pad_to_2n = false);

}  // namespace snakelab
