#include "snakelab/encodings.hpp"

#include <algorithm>

#include "snakelab/csv.hpp"

namespace snakelab {

namespace {

std::vector<std::int32_t> depths(const LabeledOrderedTree& t) {
  std::vector<std::int32_t> dep(std::size_t(t.n()) + 1, 0);
  std::vector<std::int32_t> stack{t.root()};
  while (!stack.empty()) {
    const std::int32_t v = stack.back();
    stack.pop_back();
    for (auto u : t.children(v)) {
      dep[std::size_t(u)] = dep[std::size_t(v)] + 1;
      stack.push_back(u);
    }
  }
  return dep;
}

}  // namespace

std::vector<std::int64_t> lukasiewicz(const LabeledOrderedTree& t) {
  const auto order = t.preorder();
  std::vector<std::int64_t> W(std::size_t(t.n()) + 1, 0);
  for (std::size_t i = 0; i < order.size(); ++i)
    W[i + 1] = W[i] + t.degree(order[i]) - 1;
  return W;
}

std::vector<std::int32_t> height_process(const LabeledOrderedTree& t) {
  const auto order = t.preorder();
  const auto dep = depths(t);
  std::vector<std::int32_t> H(std::size_t(t.n()) + 1, 0);
  for (std::size_t i = 0; i < order.size(); ++i) H[i] = dep[std::size_t(order[i])];
  return H;
}

std::vector<std::int64_t> looptree_height(const LabeledOrderedTree& t) {
  // Loop distance accumulates min{slot, c(parent)+1-slot} along root paths.
  std::vector<std::int64_t> dist(std::size_t(t.n()) + 1, 0);
  std::vector<std::int32_t> stack{t.root()};
  while (!stack.empty()) {
    const std::int32_t v = stack.back();
    stack.pop_back();
    const auto ks = t.children(v);
    const std::int64_t c = std::int64_t(ks.size());
    for (std::size_t j = 0; j < ks.size(); ++j) {
      const std::int64_t slot = std::int64_t(j) + 1;
      dist[std::size_t(ks[j])] =
          dist[std::size_t(v)] + std::min(slot, c + 1 - slot);
      stack.push_back(ks[j]);
    }
  }
  const auto order = t.preorder();
  std::vector<std::int64_t> HL(std::size_t(t.n()) + 1, 0);
  for (std::size_t i = 0; i < order.size(); ++i) HL[i] = dist[std::size_t(order[i])];
  return HL;
}

ContourPaths contour_process(const LabeledOrderedTree& t) {
  const auto dep = depths(t);
  ContourPaths c;
  c.vertices.reserve(std::size_t(2 * t.n() - 1));
  c.depth.reserve(std::size_t(2 * t.n() - 1));
  const auto emit = [&](std::int32_t v) {
    c.vertices.push_back(v);
    c.depth.push_back(dep[std::size_t(v)]);
  };
  // (vertex, children already explored)
  std::vector<std::pair<std::int32_t, std::int32_t>> stack;
  stack.emplace_back(t.root(), 0);
  emit(t.root());
  while (!stack.empty()) {
    auto& top = stack.back();
    if (top.second < t.degree(top.first)) {
      ++top.second;
      const std::int32_t u = t.child(top.first, top.second);
      emit(u);
      stack.emplace_back(u, 0);
    } else {
      stack.pop_back();
      if (!stack.empty()) emit(stack.back().first);
    }
  }
  return c;
}

std::vector<double> combine_height_luka(double a1, double a2, std::span<const std::int64_t> W,
                                        std::span<const std::int32_t> H) {
  const std::size_t n1 = W.size();  // n+1
  std::vector<double> out(n1, 0.0);
  for (std::size_t i = 0; i + 1 < n1; ++i)
    out[i] = a1 * double(H[i]) - (2.0 / a2) * double(W[i]);
  return out;
}

namespace {

EncodedPaths encode_impl(const LabeledOrderedTree& t, const SpatialTree* s) {
  EncodedPaths p;
  p.order = t.preorder();
  p.W = lukasiewicz(t);
  p.H = height_process(t);
  p.Hloop = looptree_height(t);
  auto c = contour_process(t);
  p.contour = std::move(c.vertices);
  p.Htilde = std::move(c.depth);
  if (s) {
    const std::int64_t n = t.n();
    p.R.assign(std::size_t(n) + 1, 0.0);
    for (std::int64_t i = 0; i < n; ++i)
      p.R[std::size_t(i)] = s->loc[std::size_t(p.order[std::size_t(i)])];
    p.Rtilde.resize(p.contour.size());
    for (std::size_t i = 0; i < p.contour.size(); ++i)
      p.Rtilde[i] = s->loc[std::size_t(p.contour[i])];
  }
  return p;
}

}  // namespace

EncodedPaths encode_all(const LabeledOrderedTree& t) { return encode_impl(t, nullptr); }

EncodedPaths encode_all(const SpatialTree& s) { return encode_impl(s.tree, &s); }

void write_paths_csv(const std::string& path, const EncodedPaths& p) {
  CsvFile f(path);
  f.raw("index,W,H,R,Hloop\n");
  std::string line;
  for (std::size_t i = 0; i < p.W.size(); ++i) {
    line.clear();
    line += std::to_string(i);
    line += ',';
    line += std::to_string(p.W[i]);
    line += ',';
    line += std::to_string(p.H[i]);
    line += ',';
    if (!p.R.empty()) line += fmt_double(p.R[i]);
    line += ',';
    line += std::to_string(p.Hloop[i]);
    line += '\n';
    f.raw(line);
  }
}

void write_contour_csv(const std::string& path, const EncodedPaths& p, bool pad_to_2n) {
  CsvFile f(path);
  f.raw("index,vertex,Htilde,Rtilde\n");
  std::string line;
  const std::size_t m = p.contour.size();
  for (std::size_t i = 0; i < m + (pad_to_2n ? 1 : 0); ++i) {
    const bool pad = i >= m;
    line.clear();
    line += std::to_string(i);
    line += ',';
    line += pad ? "0" : std::to_string(p.contour[i]);
    line += ',';
    line += pad ? "0" : std::to_string(p.Htilde[i]);
    line += ',';
    if (!p.Rtilde.empty()) line += pad ? fmt_double(0.0) : fmt_double(p.Rtilde[i]);
    line += '\n';
    f.raw(line);
  }
}

}  // namespace snakelab
