#include "snakelab/sample.hpp"

#include <algorithm>
#include <cmath>

#include "snakelab/linebreak.hpp"

namespace snakelab {

namespace {

// Scatter m = n-1 ones into the vector at k uniformly chosen distinct
// positions out of p slots, by sequential selection (sorted, O(p)).
void place_uniform_subset(std::vector<std::int32_t>& bits, std::int64_t p, std::int64_t k,
                          Rng& rng) {
  std::int64_t need = k;
  for (std::int64_t t = 0; t < p && need > 0; ++t) {
    // P(include t) = need / (p - t)
    if (std::int64_t(rng.below(std::uint64_t(p - t))) < need) {
      bits[std::size_t(t)] = 1;
      --need;
    }
  }
}

DegreeSequence degrees_poisson1(std::int64_t n, Rng& rng) {
  // Conditioned Poisson(1) degrees are Multinomial(n-1; uniform over n cells).
  std::vector<std::int32_t> d(std::size_t(n), 0);
  for (std::int64_t i = 0; i < n - 1; ++i) ++d[std::size_t(rng.below(std::uint64_t(n)))];
  return DegreeSequence(std::move(d));
}

DegreeSequence degrees_geometric_half(std::int64_t n, Rng& rng) {
  // All vectors with the right sum are equally likely: uniform composition of
  // n-1 into n parts, i.e. stars and bars with n-1 bars among 2n-2 slots.
  const std::int64_t slots = 2 * n - 2;
  std::vector<std::int32_t> bars(std::size_t(slots), 0);
  place_uniform_subset(bars, slots, n - 1, rng);
  std::vector<std::int32_t> d(std::size_t(n), 0);
  std::int64_t part = 0;
  std::int32_t run = 0;
  for (std::int64_t t = 0; t < slots; ++t) {
    if (bars[std::size_t(t)]) {
      d[std::size_t(part++)] = run;
      run = 0;
    } else {
      ++run;
    }
  }
  d[std::size_t(part)] = run;
  return DegreeSequence(std::move(d));
}

DegreeSequence degrees_binary(std::int64_t n, Rng& rng) {
  // Uniform placement of (n-1)/2 twos among n slots.
  std::vector<std::int32_t> d(std::size_t(n), 0);
  place_uniform_subset(d, n, (n - 1) / 2, rng);
  for (auto& x : d) x *= 2;
  return DegreeSequence(std::move(d));
}

DegreeSequence degrees_rejection(const OffspringLaw& law, std::int64_t n, Rng& rng) {
  // Inversion sampling from the pmf; restart whenever the partial sum leaves
  // the feasible range.
  std::vector<double> cdf(law.pmf());
  for (std::size_t k = 1; k < cdf.size(); ++k) cdf[k] += cdf[k - 1];
  const std::int64_t budget = std::int64_t(1e4 * std::sqrt(double(n))) + 1;
  std::vector<std::int32_t> d(std::size_t(n), 0);
  for (std::int64_t trial = 0; trial < budget; ++trial) {
    std::int64_t sum = 0;
    bool ok = true;
    for (std::int64_t i = 0; i < n; ++i) {
      const double u = rng.uniform01();
      std::size_t k = 0;
      while (k + 1 < cdf.size() && u >= cdf[k]) ++k;
      d[std::size_t(i)] = std::int32_t(k);
      sum += k;
      if (sum > n - 1) {
        ok = false;
        break;
      }
    }
    if (ok && sum == n - 1) return DegreeSequence(std::move(d));
  }
  throw SampleBudgetError("degree sequence rejection budget exhausted");
}

}  // namespace

DegreeSequence sample_degree_sequence(const OffspringLaw& law, std::int64_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  if (!law.admits_size(n))
    throw std::invalid_argument("sample: size " + std::to_string(n) +
                                " impossible under " + law.name());
  if (n == 1) return DegreeSequence({0});
  switch (law.kind()) {
    case LawKind::poisson1: return degrees_poisson1(n, rng);
    case LawKind::geometric_half: return degrees_geometric_half(n, rng);
    case LawKind::binary: return degrees_binary(n, rng);
    case LawKind::custom: return degrees_rejection(law, n, rng);
  }
  throw std::logic_error("unreachable");
}

EdgeLabelSeq uniform_edge_perm(const DegreeSequence& d, Rng& rng) {
  if (!d.valid()) throw std::invalid_argument("uniform_edge_perm: degree sum != n-1");
  EdgeLabelSeq pi;
  pi.reserve(std::size_t(d.n() - 1));
  for (std::int32_t v = 1; v <= d.n(); ++v)
    for (std::int32_t c = 1; c <= d.of(v); ++c) pi.emplace_back(v, c);
  for (std::size_t i = pi.size(); i > 1; --i)
    std::swap(pi[i - 1], pi[std::size_t(rng.below(i))]);
  return pi;
}

LabeledOrderedTree sample_tree(const OffspringLaw& law, std::int64_t n, Rng& rng) {
  const auto d = sample_degree_sequence(law, n, rng);
  const auto pi = uniform_edge_perm(d, rng);
  return build_tree(pi);
}

LabeledOrderedTree sample_conditioned_tree_cyclelemma(const OffspringLaw& law, std::int64_t n,
                                                      Rng& rng) {
  const auto ds = sample_degree_sequence(law, n, rng);
  std::vector<std::int32_t> deg(ds.d);
  for (std::size_t i = deg.size(); i > 1; --i)
    std::swap(deg[i - 1], deg[std::size_t(rng.below(i))]);

  // Unique rotation making the walk an excursion: start after the first
  // prefix-sum minimum.
  std::int64_t sum = 0, minSum = 0;
  std::size_t minAt = deg.size();  // position *after* which the excursion starts
  for (std::size_t i = 0; i < deg.size(); ++i) {
    sum += deg[i] - 1;
    if (sum < minSum) {
      minSum = sum;
      minAt = i;
    }
  }
  std::vector<std::int32_t> rot;
  rot.reserve(deg.size());
  for (std::size_t i = 0; i < deg.size(); ++i)
    rot.push_back(deg[(minAt + 1 + i) % deg.size()]);

  // Preorder degrees -> tree on positions, with a uniform relabeling.
  std::vector<std::int32_t> label(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) label[std::size_t(i)] = std::int32_t(i + 1);
  for (std::size_t i = label.size(); i > 1; --i)
    std::swap(label[i - 1], label[std::size_t(rng.below(i))]);

  std::vector<std::vector<std::int32_t>> kids(static_cast<std::size_t>(n));
  std::vector<std::pair<std::int32_t, std::int32_t>> stack;  // (position, children left)
  stack.emplace_back(0, rot[0]);
  for (std::int64_t p = 1; p < n; ++p) {
    while (!stack.empty() && stack.back().second == 0) stack.pop_back();
    if (stack.empty()) throw std::logic_error("cycle lemma: walk not an excursion");
    auto& top = stack.back();
    kids[std::size_t(label[std::size_t(top.first)] - 1)].push_back(label[std::size_t(p)]);
    --top.second;
    stack.emplace_back(std::int32_t(p), rot[std::size_t(p)]);
  }
  return LabeledOrderedTree::from_child_lists(label[0], kids);
}

}  // namespace snakelab
