#include "snakelab/linebreak.hpp"

#include <json.hpp>
#include <stdexcept>

namespace snakelab {

namespace {

// Degrees implied by pi; throws unless pi is exactly the child-slot multiset
// {(v,1..d_v)} of some degree sequence on [n].
std::vector<std::int32_t> degrees_of(const EdgeLabelSeq& pi, std::int64_t n) {
  std::vector<std::int32_t> deg(std::size_t(n) + 1, 0);
  std::vector<std::int32_t> maxc(std::size_t(n) + 1, 0);
  for (const auto& [v, c] : pi) {
    if (v < 1 || v > n || c < 1) throw std::invalid_argument("pi: label out of range");
    ++deg[std::size_t(v)];
    maxc[std::size_t(v)] = std::max(maxc[std::size_t(v)], c);
  }
  for (std::int32_t v = 1; v <= n; ++v)
    if (maxc[std::size_t(v)] != deg[std::size_t(v)])
      throw std::invalid_argument("pi: child slots of a vertex must be 1..d exactly");
  // Together with max slot == count, slot distinctness pins slots to {1..d_v}.
  std::vector<char> used(pi.size(), 0);
  std::vector<std::int64_t> off(std::size_t(n) + 1, 0);
  for (std::int32_t v = 1; v <= n; ++v) off[std::size_t(v)] = (v == 1 ? 0 : off[std::size_t(v) - 1] + deg[std::size_t(v) - 1]);
  for (const auto& [v, c] : pi) {
    auto& slot = used[std::size_t(off[std::size_t(v)] + c - 1)];
    if (slot) throw std::invalid_argument("pi: duplicate pair");
    slot = 1;
  }
  return deg;
}

}  // namespace

LabeledOrderedTree build_tree(const EdgeLabelSeq& pi, ConstructionTrace* trace) {
  const std::int64_t n = std::int64_t(pi.size()) + 1;
  if (trace) {
    *trace = ConstructionTrace{};
    trace->n = n;
  }
  if (n == 1) {
    if (trace) trace->paths.clear();
    return LabeledOrderedTree::from_csr(1, {0, 0, 0}, {}, false);
  }
  const auto deg = degrees_of(pi, n);

  const std::int32_t root = pi[0].first;
  if (deg[std::size_t(root)] == 0) throw std::invalid_argument("pi: root cannot be a leaf");

  std::vector<std::int64_t> firstSeen(std::size_t(n) + 1, 0);  // position of first occurrence
  std::vector<std::int32_t> firstSlot(std::size_t(n) + 1, 0);  // its child slot
  std::vector<std::int32_t> occCount(std::size_t(n) + 1, 0);
  std::vector<char> isTarget(std::size_t(n) + 1, 0);
  std::vector<std::int32_t> vhatIndex(std::size_t(n) + 1, 0);

  std::vector<std::int64_t> J, Jtilde;
  std::vector<std::int32_t> M, A, Vhat;
  std::vector<std::int8_t> F;

  // m_1: smallest label different from the root.
  std::int32_t cand = (root == 1) ? 2 : 1;
  M.push_back(cand);
  isTarget[std::size_t(cand)] = 1;

  std::vector<char> isCut(std::size_t(n) + 1, 0);  // position -> ends a path

  for (std::int64_t j = 1; j <= n - 1; ++j) {
    const std::int32_t v = pi[std::size_t(j - 1)].first;
    const std::int32_t c = pi[std::size_t(j - 1)].second;

    const bool pureRepeat = j >= 2 && firstSeen[std::size_t(v)] != 0;
    const bool targetHit = j >= 2 && isTarget[std::size_t(v)] != 0;
    const std::int32_t priorOcc = occCount[std::size_t(v)];

    if (firstSeen[std::size_t(v)] == 0) {
      firstSeen[std::size_t(v)] = j;
      firstSlot[std::size_t(v)] = c;
      Vhat.push_back(v);
      vhatIndex[std::size_t(v)] = std::int32_t(Vhat.size());
    }
    ++occCount[std::size_t(v)];

    if (pureRepeat || targetHit) {
      J.push_back(j);
      isCut[std::size_t(j)] = 1;
      if (pureRepeat) Jtilde.push_back(j);
      A.push_back(vhatIndex[std::size_t(v)]);
      if (priorOcc == 1)
        F.push_back(c < firstSlot[std::size_t(v)] ? 1 : 2);
      else
        F.push_back(0);
      // next target: smallest label beyond the previous one that has not
      // appeared as a first coordinate among positions 1..j
      while (cand <= n && (firstSeen[std::size_t(cand)] != 0 || isTarget[std::size_t(cand)]))
        ++cand;
      if (cand > n) throw std::invalid_argument("pi: ran out of target labels");
      M.push_back(cand);
      isTarget[std::size_t(cand)] = 1;
    }
  }
  J.push_back(n);

  const std::int32_t ellStar = std::int32_t(J.size());
  // Edges: position i connects v_i to either v_{i+1} or, across a cut, to the
  // pending target of the path that ends there.
  std::vector<std::int64_t> off(std::size_t(n) + 2, 0);
  for (std::int32_t v = 1; v <= n; ++v) off[std::size_t(v) + 1] = off[std::size_t(v)] + deg[std::size_t(v)];
  std::vector<std::int32_t> childArr(std::size_t(n - 1), 0);
  std::vector<char> filled(std::size_t(n - 1), 0);
  std::int32_t cut = 0;
  for (std::int64_t i = 1; i <= n - 1; ++i) {
    const std::int32_t v = pi[std::size_t(i - 1)].first;
    const std::int32_t c = pi[std::size_t(i - 1)].second;
    std::int32_t u;
    if (i + 1 == J[std::size_t(cut)]) {
      u = M[std::size_t(cut)];
      ++cut;
    } else {
      u = pi[std::size_t(i)].first;
    }
    const std::size_t slot = std::size_t(off[std::size_t(v)] + c - 1);
    if (filled[slot]) throw std::invalid_argument("pi: slot assigned twice");
    filled[slot] = 1;
    childArr[slot] = u;
  }

  auto tree = LabeledOrderedTree::from_csr(root, std::move(off), std::move(childArr), true);

  if (trace) {
    trace->ellStar = ellStar;
    trace->J = std::move(J);
    trace->Jtilde = std::move(Jtilde);
    trace->M = std::move(M);
    trace->A = std::move(A);
    trace->F = std::move(F);
    trace->Vhat = std::move(Vhat);
    trace->paths.resize(std::size_t(ellStar));
    std::int64_t start = 1;
    for (std::int32_t p = 0; p < ellStar; ++p) {
      for (std::int64_t j = start; j < trace->J[std::size_t(p)]; ++j)
        trace->paths[std::size_t(p)].push_back(pi[std::size_t(j - 1)].first);
      start = trace->J[std::size_t(p)];
    }
  }
  return tree;
}

EdgeLabelSeq deconstruct_tree(const LabeledOrderedTree& t) {
  const std::int64_t n = t.n();
  EdgeLabelSeq pi;
  if (n == 1) return pi;
  pi.reserve(std::size_t(n - 1));
  std::vector<char> inTree(std::size_t(n) + 1, 0);
  inTree[std::size_t(t.root())] = 1;
  std::vector<std::int32_t> chain;
  for (std::int32_t y = 1; y <= n; ++y) {
    if (inTree[std::size_t(y)]) continue;
    chain.clear();
    std::int32_t u = y;
    while (!inTree[std::size_t(u)]) {
      chain.push_back(u);
      u = t.parent(u);
    }
    // u is the attachment vertex; emit slots from it down to y.
    std::int32_t up = u;
    for (std::size_t k = chain.size(); k > 0; --k) {
      const std::int32_t w = chain[k - 1];
      pi.emplace_back(up, t.child_slot(w));
      inTree[std::size_t(w)] = 1;
      up = w;
    }
  }
  return pi;
}

std::vector<std::int32_t> first_appearance_order(const EdgeLabelSeq& pi) {
  std::int32_t maxv = 0;
  for (const auto& [v, c] : pi) maxv = std::max(maxv, v);
  std::vector<char> seen(std::size_t(maxv) + 1, 0);
  std::vector<std::int32_t> out;
  for (const auto& [v, c] : pi)
    if (!seen[std::size_t(v)]) {
      seen[std::size_t(v)] = 1;
      out.push_back(v);
    }
  return out;
}

std::vector<std::int32_t> size_biased_reorder(const std::vector<std::int64_t>& w, Rng& rng) {
  const std::size_t N = w.size();
  std::vector<std::int32_t> idx;
  std::vector<std::int32_t> zeros;
  std::int64_t total = 0;
  for (std::size_t i = 0; i < N; ++i) {
    if (w[i] < 0) throw std::invalid_argument("size_biased_reorder: negative weight");
    if (w[i] == 0)
      zeros.push_back(std::int32_t(i));
    else {
      idx.push_back(std::int32_t(i));
      total += w[i];
    }
  }
  std::vector<std::int32_t> out;
  out.reserve(N);
  std::vector<std::int64_t> rem(w);
  while (!idx.empty()) {
    std::int64_t r = std::int64_t(rng.below(std::uint64_t(total)));
    std::size_t pick = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      r -= rem[std::size_t(idx[i])];
      if (r < 0) {
        pick = i;
        break;
      }
    }
    const std::int32_t chosen = idx[pick];
    out.push_back(chosen);
    total -= rem[std::size_t(chosen)];
    idx.erase(idx.begin() + std::ptrdiff_t(pick));
  }
  // zero-weight entries in uniform random order
  for (std::size_t i = zeros.size(); i > 1; --i)
    std::swap(zeros[i - 1], zeros[std::size_t(rng.below(i))]);
  for (auto z : zeros) out.push_back(z);
  return out;
}

std::string ConstructionTrace::to_json() const {
  nlohmann::json j;
  j["n"] = n;
  j["ellStar"] = ellStar;
  j["J"] = J;
  j["Jtilde"] = Jtilde;
  j["M"] = M;
  j["A"] = A;
  j["F"] = F;
  j["Vhat"] = Vhat;
  j["paths"] = paths;
  return j.dump(2);
}

ConstructionTrace ConstructionTrace::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ConstructionTrace t;
  t.n = j.at("n").get<std::int64_t>();
  t.ellStar = j.at("ellStar").get<std::int32_t>();
  t.J = j.at("J").get<std::vector<std::int64_t>>();
  t.Jtilde = j.at("Jtilde").get<std::vector<std::int64_t>>();
  t.M = j.at("M").get<std::vector<std::int32_t>>();
  t.A = j.at("A").get<std::vector<std::int32_t>>();
  t.F = j.at("F").get<std::vector<std::int8_t>>();
  t.Vhat = j.at("Vhat").get<std::vector<std::int32_t>>();
  t.paths = j.at("paths").get<std::vector<std::vector<std::int32_t>>>();
  return t;
}

}  // namespace snakelab
