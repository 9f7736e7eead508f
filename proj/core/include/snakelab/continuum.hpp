#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "snakelab/rng.hpp"

namespace snakelab {

// Brownian tree with spatial locations, evaluated at the finitely many
// breakpoints of the line-breaking construction. Leaf m is the tip of the
// m-th glued segment (J_{m-1}, J_m]; segment m+1 attaches at A_m <= J_m.
struct ContinuumTree {
  int k = 0;
  std::vector<double> J;        // jump times, strictly increasing
  std::vector<double> A;        // attachment points, size k-1
  std::vector<int> sides;       // 0 = left of the existing branch, 1 = right
  std::vector<double> h;        // heights at the leaves J_1..J_k
  std::vector<double> l;        // labels at the leaves
  std::vector<double> hAttach;  // heights at A_1..A_{k-1}
  std::vector<double> lAttach;  // labels at A_1..A_{k-1}
  std::vector<int> tau;         // planar order: tau[i] = (i+1)-th leaf seen
};

// J_m = sqrt(2(E_1+...+E_m)): jump times of a Poisson process with intensity
// t dt, listed increasingly.
std::vector<double> sample_jump_times(int k, Rng& rng);

// Left-to-right leaf order of the glued tree; depends on the attachment
// positions and side bits only.
std::vector<int> planar_leaf_order(const std::vector<double>& J, const std::vector<double>& A,
                                   const std::vector<int>& sides);

// Full line-breaking state with Brownian labels evaluated exactly at the
// breakpoints (increments past the frontier, bridges at interior points).
ContinuumTree build_continuum_tree(int k, Rng& rng);

// (height, label) at the k leaves in planar order; distributed as
// (2 e_{U_(i)}, sqrt(2) r_{U_(i)}) for the head (e, r) of the Brownian snake.
std::vector<std::pair<double, double>> bsbe_rfdds(int k, Rng& rng);

// Jump intensity on (0,infty)^2 \ {0} for the large-displacement limit:
// either mass a+ q x^{-q-1} dx on the x-axis plus a- q y^{-q-1} dy on the
// y-axis, or mass c x^{-q-1} dx along the ray (x, rho x). eta = 4 - q in [0,2).
struct PiMeasureSpec {
  enum class Kind { axes, ray };
  Kind kind = Kind::axes;
  double aPlus = 0.0, aMinus = 0.0;
  double c = 0.0, rho = 0.0;
  double q = 4.0;

  static PiMeasureSpec axes(double aPlus, double aMinus, double q);
  static PiMeasureSpec ray(double c, double rho, double q);

  double eta() const { return 4.0 - q; }
  // pi{ (x,y) : max(x,y) > gamma }; finite for gamma > 0.
  double mass_above(double gamma) const;
  // One point from the normalized restriction to { max(x,y) > gamma }.
  std::pair<double, double> sample_above(double gamma, Rng& rng) const;
  // P(max coordinate > s) under that restriction.
  double max_coord_sf(double s, double gamma) const;
};

// One atom of the limit point process: time t in [0,1], hair extents (x, y).
struct Hair {
  double t = 0.0, x = 0.0, y = 0.0;
};

// Poisson(mass_above(gamma)) many points, times uniform on [0,1], extents iid
// from the normalized restriction of pi.
std::vector<Hair> sample_hairy_ppp(const PiMeasureSpec& spec, double gamma, Rng& rng);

// Graph of a grid function on [0,1] together with vertical hair segments
// [(t, f(t)-y), (t, f(t)+x)], discretized at resolution eps.
struct HairySet {
  std::vector<double> ts;  // strictly increasing grid
  std::vector<double> fs;  // f on the grid
  std::vector<Hair> hairs;
  double eps = 1e-3;

  double base_at(double t) const;  // linear interpolation, clamped at the ends
  std::vector<std::pair<double, double>> points() const;
  std::string to_csv() const;  // rows t,lo,hi: grid samples then hair segments
};

HairySet hairy_union(std::vector<double> ts, std::vector<double> fs, std::vector<Hair> hairs,
                     double eps = 1e-3);

// Max of the two directed sup-min Euclidean distances between finite point
// sets. Throws on empty input.
double hausdorff_distance(const std::vector<std::pair<double, double>>& a,
                          const std::vector<std::pair<double, double>>& b);

}  // namespace snakelab
