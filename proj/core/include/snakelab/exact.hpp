#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "snakelab/linebreak.hpp"
#include "snakelab/offspring.hpp"
#include "snakelab/rational.hpp"
#include "snakelab/tree.hpp"

namespace snakelab {

// Outcome of one exact-law check: an enumeration-side probability and a
// closed-form probability per support row. exact means rational arithmetic end
// to end, in which case maxAbsDiff is 0 or the check failed.
struct ExactLawReport {
  std::string lawName;
  std::vector<std::string> support;
  std::vector<double> computedProbabilities;
  std::vector<double> formulaProbabilities;
  double maxAbsDiff = 0.0;
  bool exact = false;
  std::int64_t excludedRows = 0;  // formula rows skipped by range restriction
  bool pass = false;
  std::string detail;

  std::string to_json() const;
};

// All (n-1)! orderings of the slot multiset of d, each exactly once. n <= 9.
void enumerate_Pd(const DegreeSequence& d, const std::function<void(const EdgeLabelSeq&)>& fn);

// First-appearance order of the first coordinates vs the sequential
// size-biased product law. Exact integer cross-multiplication. n <= 9.
ExactLawReport check_sb_order_law(const DegreeSequence& d);

// Conditional survival laws of the repeat times J~_1 and J~_{i+1} - J~_i given
// the appearance order (and earlier repeat times), vs the product with factors
// (n-1-T_{p-i})/(n-1-p) where T_j sums the first j appearing degrees. n <= 8.
ExactLawReport check_repeat_laws(const DegreeSequence& d);

// Root-degree law of the conditioned tree by exhaustive weighted enumeration
// of preorder degree sequences, vs n/(n-1) * P(S_{n-1}=n-1-k)/P(S_n=n-1) * k mu_k.
ExactLawReport check_kemperman(const OffspringLaw& law, std::int64_t n);

// Measure change for the first m entries of the size-biased reordered degree
// sequence; 0 when sum k > n-1.
double theta_n(const OffspringLaw& law, std::int64_t n, std::span<const std::int64_t> k);

// Prefixed variant: positions 1..r hold fixed degrees summing to s, the rest
// are iid conditioned to total n-1-s; 0 when sum k > n-1-s.
double theta_general(const OffspringLaw& law, std::int64_t n, std::int64_t r, std::int64_t s,
                     std::span<const std::int64_t> prefixDegrees,
                     std::span<const std::int64_t> k);

// Joint identity E[f(D^_1..D^_m) 1{N>=m}] = E[f(xi~_1..xi~_m) Theta^n] over all
// m-vectors, by tree enumeration; includes the total-mass row
// E[Theta^n] = P(N_n >= m).
ExactLawReport check_theta_identity(const OffspringLaw& law, std::int64_t n, int m);

// Same for the prefixed reordering with the indicator 1{tau_r > m}.
ExactLawReport check_theta_general_identity(const OffspringLaw& law, std::int64_t n,
                                            std::span<const std::int64_t> prefixDegrees, int m);

// Conditional law of a tiny two-valued spatial tree given its pruned output:
// exact enumeration of every (shape, displacement) configuration vs the
// uniform leaf-grafting reconstruction set.
ExactLawReport check_prune_graft();

// Monte Carlo twin of check_prune_graft: draws from the full configuration
// law, conditions on the richest cut group, and chi-squares the reconstruction
// frequencies against uniform. pass means p >= 1e-3.
ExactLawReport sample_prune_graft(std::int64_t reps, std::uint64_t seed);

struct AncestralBoundResult {
  double empirical = 0.0;
  double bound = 0.0;
  double stderr_ = 0.0;
  bool applicable = true;
  bool pass = false;
};

// Monte Carlo P(min distance between ancestrally related marked vertices <= b)
// against K(1 - (1 - K*Delta/(n-1-b*Delta))^b).
AncestralBoundResult check_ancestral_bound(const DegreeSequence& d,
                                           std::span<const std::int32_t> marked, std::int32_t b,
                                           std::int64_t reps, std::uint64_t seed);

}  // namespace snakelab
