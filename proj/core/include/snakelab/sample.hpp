#pragma once

#include <cstdint>
#include <stdexcept>

#include "snakelab/offspring.hpp"
#include "snakelab/rng.hpp"
#include "snakelab/tree.hpp"

namespace snakelab {

// Rejection sampling ran past its trial budget (10^4 * sqrt(n)); the requested
// size is unreachable or astronomically unlikely under the law.
struct SampleBudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Degree vector (D_1,...,D_n): iid mu conditioned on sum = n-1.
// Exact O(n) paths for the builtins; rejection with a trial budget otherwise.
DegreeSequence sample_degree_sequence(const OffspringLaw& law, std::int64_t n, Rng& rng);

// Uniform shuffle of the full child-slot multiset {(v,c): 1<=c<=d_v}.
EdgeLabelSeq uniform_edge_perm(const DegreeSequence& d, Rng& rng);

// Size-conditioned tree via the edge-sequence construction:
// degrees, then a uniform slot permutation, then build_tree.
LabeledOrderedTree sample_tree(const OffspringLaw& law, std::int64_t n, Rng& rng);

// Independent sampler used for cross-checks: degrees, uniform arrangement,
// cycle-lemma rotation to an excursion, uniform random relabeling.
LabeledOrderedTree sample_conditioned_tree_cyclelemma(const OffspringLaw& law, std::int64_t n,
                                                      Rng& rng);

}  // namespace snakelab
