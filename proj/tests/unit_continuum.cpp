#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "snakelab/continuum.hpp"
#include "snakelab/rng.hpp"

using namespace snakelab;

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

double var_of(const std::vector<double>& v) {
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / double(v.size() - 1);
}

// O(nm) reference for the pruned implementation.
double hausdorff_brute(const std::vector<std::pair<double, double>>& a,
                       const std::vector<std::pair<double, double>>& b) {
  auto directed = [](const std::vector<std::pair<double, double>>& from,
                     const std::vector<std::pair<double, double>>& to) {
    double worst = 0.0;
    for (const auto& p : from) {
      double best = 1e300;
      for (const auto& q : to) {
        double dx = p.first - q.first, dy = p.second - q.second;
        best = std::min(best, dx * dx + dy * dy);
      }
      worst = std::max(worst, best);
    }
    return std::sqrt(worst);
  };
  return std::max(directed(a, b), directed(b, a));
}

}  // namespace

TEST_CASE("jump times are increasing with the exponential-gap law") {
  Rng rng(11, 1);
  // J_m = sqrt(2 * Gamma(m,1)), so J_k^2 / 2 has mean k and variance k.
  const int reps = 40000;
  std::vector<double> j1(reps), g3(reps);
  for (int r = 0; r < reps; ++r) {
    auto J = sample_jump_times(3, rng);
    REQUIRE(J.size() == 3);
    CHECK(J[0] > 0.0);
    CHECK(J[1] > J[0]);
    CHECK(J[2] > J[1]);
    j1[std::size_t(r)] = J[0];
    g3[std::size_t(r)] = 0.5 * J[2] * J[2];
  }
  CHECK(std::fabs(mean_of(j1) - std::sqrt(std::asin(1.0))) < 0.015);  // E J_1 = sqrt(pi/2)
  CHECK(std::fabs(mean_of(g3) - 3.0) < 0.04);
  CHECK(std::fabs(var_of(g3) - 3.0) < 0.2);
  CHECK_THROWS_AS(sample_jump_times(0, rng), std::invalid_argument);
}

TEST_CASE("planar leaf order on hand-built attachment data") {
  std::vector<double> J{1.0, 2.0, 3.0};

  // Segment 2 hangs left off segment 1 at 0.5; segment 3 hangs right off
  // segment 2 at 1.5.  Contour: up past 0.5 into leaf 2, down its right side
  // into leaf 3, then finish leaf 1.
  CHECK(planar_leaf_order(J, {0.5, 1.5}, {0, 1}) == std::vector<int>{2, 3, 1});

  // Mirror the sides: leaf 1 is reached first, then the right subtree.
  CHECK(planar_leaf_order(J, {0.5, 1.5}, {1, 0}) == std::vector<int>{1, 3, 2});

  // Both children on segment 1, left side: ascending attachment height.
  CHECK(planar_leaf_order(J, {0.5, 0.25}, {0, 0}) == std::vector<int>{3, 2, 1});

  // Both on the right: visited on the way down, descending height.
  CHECK(planar_leaf_order(J, {0.5, 0.25}, {1, 1}) == std::vector<int>{1, 2, 3});

  CHECK(planar_leaf_order({1.0}, {}, {}) == std::vector<int>{1});
  CHECK_THROWS_AS(planar_leaf_order(J, {0.5}, {0, 1}), std::invalid_argument);
}

TEST_CASE("continuum tree fields satisfy the structural identities") {
  Rng rng(23, 2);
  for (int r = 0; r < 200; ++r) {
    ContinuumTree t = build_continuum_tree(4, rng);
    REQUIRE(t.k == 4);
    REQUIRE(t.J.size() == 4);
    REQUIRE(t.A.size() == 3);
    REQUIRE(t.h.size() == 4);
    REQUIRE(t.l.size() == 4);
    CHECK(t.h[0] == t.J[0]);
    for (int m = 0; m < 3; ++m) {
      CHECK(t.A[std::size_t(m)] > 0.0);
      CHECK(t.A[std::size_t(m)] < t.J[std::size_t(m)]);
      CHECK(t.hAttach[std::size_t(m)] >= 0.0);
      // Leaf m+2 sits J_{m+2} - J_{m+1} above its attachment point.
      CHECK(t.h[std::size_t(m) + 1] ==
            doctest::Approx(t.hAttach[std::size_t(m)] + t.J[std::size_t(m) + 1] - t.J[std::size_t(m)])
                .epsilon(1e-12));
      CHECK(t.h[std::size_t(m) + 1] > 0.0);
    }
    std::vector<int> tau = t.tau;
    std::sort(tau.begin(), tau.end());
    CHECK(tau == std::vector<int>{1, 2, 3, 4});
  }
  CHECK_THROWS_AS(build_continuum_tree(0, rng), std::invalid_argument);
}

TEST_CASE("continuum tree for k = 2 attaches directly on the spine") {
  Rng rng(31, 3);
  ContinuumTree t = build_continuum_tree(2, rng);
  CHECK(t.hAttach[0] == t.A[0]);
  CHECK(t.h[1] == doctest::Approx(t.A[0] + t.J[1] - t.J[0]).epsilon(1e-12));
}

TEST_CASE("labels are centered Gaussian with the branch length as variance") {
  Rng rng(47, 4);
  const int reps = 40000;
  // l / sqrt(h) is standard normal for every leaf, whatever the tree shape.
  std::vector<double> z1(reps), z2(reps), cross(reps), attach(reps);
  for (int r = 0; r < reps; ++r) {
    ContinuumTree t = build_continuum_tree(2, rng);
    z1[std::size_t(r)] = t.l[0] * t.l[0] / t.h[0];
    z2[std::size_t(r)] = t.l[1] * t.l[1] / t.h[1];
    cross[std::size_t(r)] = t.l[0] * t.l[1];
    attach[std::size_t(r)] = t.A[0];
  }
  CHECK(std::fabs(mean_of(z1) - 1.0) < 0.04);
  CHECK(std::fabs(mean_of(z2) - 1.0) < 0.04);
  // Shared Brownian stretch: Cov(l_1, l_2 | tree) is the attachment height.
  CHECK(std::fabs(mean_of(cross) - mean_of(attach)) < 0.1);
}

TEST_CASE("leaf vector matches the tree read off in planar order") {
  Rng rA(99, 5), rB(99, 5);
  ContinuumTree t = build_continuum_tree(5, rA);
  auto pairs = bsbe_rfdds(5, rB);
  REQUIRE(pairs.size() == 5);
  for (int i = 0; i < 5; ++i) {
    int leaf = t.tau[std::size_t(i)];
    CHECK(pairs[std::size_t(i)].first == t.h[std::size_t(leaf) - 1]);
    CHECK(pairs[std::size_t(i)].second == t.l[std::size_t(leaf) - 1]);
  }
}

TEST_CASE("jump measure on the axes: mass, tail, and sampling") {
  auto spec = PiMeasureSpec::axes(0.5, 0.5, 4.0);
  CHECK(spec.eta() == 0.0);
  CHECK(spec.mass_above(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(spec.mass_above(2.0) == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(spec.max_coord_sf(0.5, 1.0) == 1.0);
  CHECK(spec.max_coord_sf(2.0, 1.0) == doctest::Approx(0.0625).epsilon(1e-12));
  CHECK_THROWS_AS(spec.mass_above(0.0), std::domain_error);
  CHECK_THROWS_AS(PiMeasureSpec::axes(0.5, 0.5, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(PiMeasureSpec::axes(0.5, 0.5, 4.5), std::invalid_argument);
  CHECK_THROWS_AS(PiMeasureSpec::axes(-0.1, 0.5, 4.0), std::invalid_argument);

  Rng rng(7, 6);
  int onX = 0, beyond2 = 0;
  const int reps = 20000;
  for (int r = 0; r < reps; ++r) {
    auto [x, y] = spec.sample_above(1.0, rng);
    CHECK(std::max(x, y) > 1.0);
    CHECK(std::min(x, y) == 0.0);
    if (x > 0.0) ++onX;
    if (std::max(x, y) > 2.0) ++beyond2;
  }
  CHECK(std::fabs(double(onX) / reps - 0.5) < 0.015);
  CHECK(std::fabs(double(beyond2) / reps - 0.0625) < 0.01);
}

TEST_CASE("jump measure on a ray keeps the fixed slope") {
  auto spec = PiMeasureSpec::ray(2.0, 0.5, 3.0);
  CHECK(spec.eta() == doctest::Approx(1.0));
  // max(x, x/2) = x, so the cut is at gamma and the mass is (c/q) gamma^-q.
  CHECK(spec.mass_above(1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  auto steep = PiMeasureSpec::ray(2.0, 2.0, 3.0);
  // Here the y coordinate dominates: the x cut drops to gamma / rho.
  CHECK(steep.mass_above(1.0) == doctest::Approx(16.0 / 3.0).epsilon(1e-12));

  Rng rng(13, 7);
  for (int r = 0; r < 2000; ++r) {
    auto [x, y] = spec.sample_above(1.0, rng);
    CHECK(y == doctest::Approx(0.5 * x).epsilon(1e-12));
    CHECK(std::max(x, y) > 1.0);
  }

  auto empty = PiMeasureSpec::axes(0.0, 0.0, 4.0);
  CHECK(empty.mass_above(1.0) == 0.0);
  CHECK(empty.mass_above(0.0) == 0.0);
  CHECK_THROWS_AS(empty.sample_above(1.0, rng), std::domain_error);
}

TEST_CASE("hairy Poisson samples have the right count law and marks") {
  auto spec = PiMeasureSpec::axes(0.5, 0.5, 4.0);
  Rng rng(17, 8);
  const int reps = 20000;
  std::vector<double> counts(reps);
  for (int r = 0; r < reps; ++r) {
    auto hairs = sample_hairy_ppp(spec, 1.0, rng);
    counts[std::size_t(r)] = double(hairs.size());
    for (const auto& h : hairs) {
      CHECK(h.t >= 0.0);
      CHECK(h.t <= 1.0);
      CHECK(std::max(h.x, h.y) > 1.0);
    }
  }
  CHECK(std::fabs(mean_of(counts) - 1.0) < 0.03);
  CHECK(std::fabs(var_of(counts) - 1.0) < 0.06);

  auto none = PiMeasureSpec::axes(0.0, 0.0, 4.0);
  CHECK(sample_hairy_ppp(none, 1.0, rng).empty());
}

TEST_CASE("hairy set interpolation, point cloud, and CSV form") {
  HairySet s = hairy_union({0.0, 0.5, 1.0}, {0.0, 1.0, 0.0}, {}, 0.1);
  CHECK(s.base_at(0.25) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.base_at(-1.0) == 0.0);
  CHECK(s.base_at(2.0) == 0.0);
  CHECK(s.points().size() == 3);

  HairySet withHair = hairy_union({0.0, 1.0}, {0.0, 0.0}, {{0.5, 0.2, 0.1}}, 0.05);
  auto pts = withHair.points();
  bool sawTop = false, sawBottom = false;
  for (const auto& p : pts) {
    if (p.first == 0.5) {
      CHECK(p.second >= -0.1 - 1e-12);
      CHECK(p.second <= 0.2 + 1e-12);
      if (std::fabs(p.second - 0.2) < 1e-12) sawTop = true;
      if (std::fabs(p.second + 0.1) < 1e-12) sawBottom = true;
    }
  }
  CHECK(sawTop);
  CHECK(sawBottom);

  std::istringstream csv(withHair.to_csv());
  std::string line;
  std::getline(csv, line);
  CHECK(line == "t,lo,hi");
  std::getline(csv, line);
  CHECK(line == "0,0,0");
  std::getline(csv, line);
  CHECK(line == "1,0,0");
  std::getline(csv, line);
  CHECK(line == "0.5,-0.10000000000000001,0.20000000000000001");

  CHECK_THROWS_AS(hairy_union({}, {}, {}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(hairy_union({0.0, 0.0}, {0.0, 1.0}, {}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(hairy_union({0.0, 1.0}, {0.0}, {}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(hairy_union({0.0, 1.0}, {0.0, 0.0}, {}, 0.0), std::invalid_argument);
}

TEST_CASE("hausdorff distance pins and brute-force agreement") {
  using P = std::vector<std::pair<double, double>>;
  P a{{0.0, 0.0}};
  CHECK(hausdorff_distance(a, a) == 0.0);
  CHECK(hausdorff_distance(a, P{{0.0, 1.0}}) == doctest::Approx(1.0).epsilon(1e-15));
  // Directed distances differ: the far point of b has nothing near it in a.
  CHECK(hausdorff_distance(a, P{{0.0, 1.0}, {5.0, 0.0}}) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK_THROWS_AS(hausdorff_distance(P{}, a), std::invalid_argument);
  CHECK_THROWS_AS(hausdorff_distance(a, P{}), std::invalid_argument);

  Rng rng(29, 9);
  for (int r = 0; r < 50; ++r) {
    P x(40), y(60);
    for (auto& p : x) p = {rng.uniform01(), rng.uniform01()};
    for (auto& p : y) p = {rng.uniform01(), rng.uniform01()};
    double fast = hausdorff_distance(x, y);
    CHECK(std::fabs(fast - hausdorff_brute(x, y)) < 1e-12);
    CHECK(std::fabs(fast - hausdorff_distance(y, x)) < 1e-15);
  }
}
