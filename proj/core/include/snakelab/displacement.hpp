#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "snakelab/offspring.hpp"
#include "snakelab/rng.hpp"
#include "snakelab/tree.hpp"

namespace snakelab {

// Real displacement law used for iid-per-child models: finite atoms plus
// optional exact two-sided Pareto tails,
//   P(Y > y) = aPlus * y^-q,  P(Y < -y) = aMinus * y^-q   for y >= y0.
struct IidLaw {
  std::vector<std::pair<double, double>> atoms;  // (value, prob)
  double q = 0.0, aPlus = 0.0, aMinus = 0.0, y0 = 1.0;

  bool has_tail() const { return aPlus + aMinus > 0.0; }
  double tail_mass() const { return has_tail() ? (aPlus + aMinus) * std::pow(y0, -q) : 0.0; }

  double sample(Rng& rng) const;
  double mean() const;
  double m2() const;                    // infinite if q <= 2 (throws)
  double mean_trunc(double tau) const;  // E[Y 1{|Y| <= tau}]
  double m2_trunc(double tau) const;    // E[Y^2 1{|Y| <= tau}]
  double cdf_abs(double tau) const;     // P(|Y| <= tau)

  // Atoms at +-y0/2 with masses solved so the total law has mean exactly 0.
  static IidLaw heavy(double q, double aPlus, double aMinus, double y0);
  static IidLaw two_atoms(double value);  // +-value with mass 1/2 each
};

enum class DispKind { iid, deterministic_spread, looptree, exchangeable_custom };

// Per-vertex displacement vector model. deterministic_spread and looptree are
// deterministic functions of the child count:
//   spread:   Y_{k,j} = sigma - (2/sigma)(k - j)
//   looptree: Y_{k,j} = c - min{j, k+1-j}
struct DisplacementModel {
  DispKind kind = DispKind::deterministic_spread;
  double sigma = 1.0;
  double c = 1.0;
  IidLaw iid;
  std::function<void(std::int32_t, std::span<double>, Rng&)> custom;

  static DisplacementModel deterministic_spread(double sigma);
  static DisplacementModel looptree(double c);
  static DisplacementModel iid_law(IidLaw law);
  static DisplacementModel exchangeable(std::function<void(std::int32_t, std::span<double>, Rng&)> fn);

  // Entries for a vertex with k children into out[0..k-1].
  void fill(std::int32_t k, std::span<double> out, Rng& rng) const;
  std::string name() const;
};

// Flat displacement array aligned with the tree's child slots (label order).
std::vector<double> sample_displacements(const LabeledOrderedTree& t,
                                         const DisplacementModel& model, Rng& rng);

// Moments of Y_{xi-bar, U}: pick a size-biased child count, then a uniform
// coordinate. mean must vanish for a centered spatial model; beta2 is the
// variance scale of the head process.
struct GlobalMoments {
  double mean = 0.0;
  double beta2 = 0.0;
};
GlobalMoments global_moments(const DisplacementModel& m, const OffspringLaw& law);
// Same moments for the vector-level truncated model Y * 1{||Y||_inf <= tau}.
GlobalMoments truncated_global_moments(const DisplacementModel& m, const OffspringLaw& law,
                                       double tau);

// Closed forms used to pin the numeric moments.
double spread_beta2(const OffspringLaw& law, double sigma);
double looptree_cstar(const OffspringLaw& law);
double looptree_beta2(const OffspringLaw& law, double c);

// Truncation thresholds: typical ||Y|| <= n^{1/(4-eta) - delta}; large
// ||Y|| > gamma * n^{1/(4-eta)}; mid-range in between.
struct TruncationBands {
  double tauTyp = 0.0;
  double tauLarge = 0.0;
};
TruncationBands make_bands(std::int64_t n, double delta, double gamma, double eta);

// Whole-vector gating by per-vertex sup norm; the three parts sum to disp.
struct BandSplit {
  std::vector<double> typ, mid, large;
};
BandSplit split_bands(const LabeledOrderedTree& t, std::span<const double> disp,
                      const TruncationBands& bands);

// Per-vertex pairs (max_j Y_j^+, max_j Y_j^-) for vertices with sup norm above
// the threshold, sorted by max coordinate descending, then min coordinate
// descending, then vertex label ascending.
std::vector<std::pair<double, double>> large_jump_ordering(const LabeledOrderedTree& t,
                                                           std::span<const double> disp,
                                                           double thresh);

}  // namespace snakelab
