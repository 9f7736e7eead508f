#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <string>

#include "snakelab/encodings.hpp"
#include "snakelab/linebreak.hpp"
#include "snakelab/offspring.hpp"
#include "snakelab/sample.hpp"

using namespace snakelab;

namespace {

// P(D_1 = k | S_n = n-1) by direct convolution of the stored pmf.
std::vector<double> conditional_first_degree(const OffspringLaw& law, std::int64_t n) {
  const auto& pmf = law.pmf();
  const std::size_t m = std::size_t(n);
  std::vector<double> s{1.0};  // pmf of S_j restricted to 0..n-1
  std::vector<std::vector<double>> partial(m + 1);
  partial[0] = s;
  for (std::size_t j = 1; j <= m; ++j) {
    std::vector<double> next(std::size_t(n), 0.0);
    for (std::size_t a = 0; a < s.size(); ++a)
      for (std::size_t k = 0; k < pmf.size() && a + k < std::size_t(n); ++k)
        next[a + k] += s[a] * pmf[k];
    s = std::move(next);
    partial[j] = s;
  }
  const double z = partial[m][std::size_t(n - 1)];
  std::vector<double> out(pmf.size(), 0.0);
  for (std::size_t k = 0; k < pmf.size() && k <= std::size_t(n - 1); ++k)
    out[k] = pmf[k] * partial[m - 1][std::size_t(n - 1) - k] / z;
  return out;
}

std::string shape_code(const LabeledOrderedTree& t, std::int32_t v) {
  std::string s = "(";
  for (auto u : t.children(v)) s += shape_code(t, u);
  s += ")";
  return s;
}

}  // namespace

TEST_CASE("offspring law moments") {
  const auto bin = OffspringLaw::binary();
  CHECK(bin.mean() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bin.sigma2() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bin.m3() == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(bin.p_odd() == 0.0);
  CHECK(bin.gcd_support() == 2);
  CHECK(bin.admits_size(7));
  CHECK(!bin.admits_size(8));
  REQUIRE(bin.rational_pmf().has_value());

  const auto poi = OffspringLaw::poisson1();
  CHECK(poi.mean() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(poi.sigma2() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(poi.m2() == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(poi.m3() == doctest::Approx(5.0).epsilon(1e-10));
  CHECK(poi.p_odd() == doctest::Approx((1.0 - std::exp(-2.0)) / 2.0).epsilon(1e-10));
  CHECK(poi.gcd_support() == 1);

  const auto geo = OffspringLaw::geometric_half();
  CHECK(geo.mean() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(geo.sigma2() == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(geo.m3() == doctest::Approx(13.0).epsilon(1e-10));
  CHECK(geo.p_odd() == doctest::Approx(1.0 / 3.0).epsilon(1e-10));

  CHECK_THROWS(OffspringLaw::custom({0.5, 0.5}));        // subcritical-degenerate
  CHECK_THROWS(OffspringLaw::custom({0.0, 0.0, 1.0}));   // mu_0 = 0
  CHECK_THROWS(OffspringLaw::custom({0.6, 0.0, 0.25}));  // not a pmf
}

TEST_CASE("degree sequences: sum, support, conditional marginal") {
  Rng rng(2024);
  for (const auto& law :
       {OffspringLaw::binary(), OffspringLaw::poisson1(), OffspringLaw::geometric_half()}) {
    const std::int64_t n = law.kind() == LawKind::binary ? 401 : 400;
    for (int rep = 0; rep < 20; ++rep) {
      const auto d = sample_degree_sequence(law, n, rng);
      CHECK(d.n() == n);
      CHECK(d.sum() == n - 1);
    }
  }

  // Marginal of D_1 against the exact conditional pmf, n small, many reps.
  for (const auto& law :
       {OffspringLaw::binary(), OffspringLaw::poisson1(), OffspringLaw::geometric_half()}) {
    const std::int64_t n = law.kind() == LawKind::binary ? 9 : 8;
    const auto exact = conditional_first_degree(law, n);
    const int reps = 200000;
    std::vector<std::int64_t> count(exact.size(), 0);
    for (int rep = 0; rep < reps; ++rep) {
      const auto d = sample_degree_sequence(law, n, rng);
      ++count[std::size_t(d.of(1))];
    }
    for (std::size_t k = 0; k < exact.size(); ++k) {
      const double se = std::sqrt(std::max(exact[k] * (1 - exact[k]) / reps, 1e-12));
      CHECK(std::abs(double(count[k]) / reps - exact[k]) < 5 * se + 1e-3);
    }
  }
}

TEST_CASE("rejection path matches binary fast path in law") {
  // Same conditioned law via the custom (rejection) route.
  Rng rng(7);
  const auto fast = OffspringLaw::binary();
  const auto slow = OffspringLaw::custom({0.5, 0.0, 0.5});
  const std::int64_t n = 9;
  const auto exact = conditional_first_degree(fast, n);
  const int reps = 100000;
  std::vector<std::int64_t> count(exact.size(), 0);
  for (int rep = 0; rep < reps; ++rep) {
    const auto d = sample_degree_sequence(slow, n, rng);
    CHECK(d.sum() == n - 1);
    ++count[std::size_t(d.of(1))];
  }
  for (std::size_t k = 0; k < exact.size(); ++k) {
    const double se = std::sqrt(std::max(exact[k] * (1 - exact[k]) / reps, 1e-12));
    CHECK(std::abs(double(count[k]) / reps - exact[k]) < 5 * se + 2e-3);
  }
}

TEST_CASE("impossible sizes rejected") {
  Rng rng(3);
  CHECK_THROWS_AS((void)sample_degree_sequence(OffspringLaw::binary(), 4, rng),
                  std::invalid_argument);
}

TEST_CASE("pipeline produces the uniform labeled law (binary, n=5)") {
  // 240 labeled trees, all equally likely under the conditioned law.
  Rng rng(99);
  std::map<std::string, int> freq;
  const int reps = 240000;
  const auto law = OffspringLaw::binary();
  for (int i = 0; i < reps; ++i) {
    const auto t = sample_tree(law, 5, rng);
    std::string code = std::to_string(t.root()) + shape_code(t, t.root());
    for (auto v : t.preorder()) code += "." + std::to_string(v);
    ++freq[code];
  }
  CHECK(freq.size() == 240);
  const double expect = double(reps) / 240.0;
  for (const auto& [code, cnt] : freq)
    CHECK(std::abs(cnt - expect) < 6.5 * std::sqrt(expect));
}

TEST_CASE("cycle-lemma sampler agrees on unlabeled shape law (binary, n=7)") {
  // 5 plane binary shapes on 7 vertices, uniform under the conditioned law.
  Rng rng(100);
  std::map<std::string, int> direct, cyclem;
  const int reps = 100000;
  const auto law = OffspringLaw::binary();
  for (int i = 0; i < reps; ++i) {
    const auto a = sample_tree(law, 7, rng);
    ++direct[shape_code(a, a.root())];
    const auto b = sample_conditioned_tree_cyclelemma(law, 7, rng);
    ++cyclem[shape_code(b, b.root())];
    const auto W = lukasiewicz(b);
    for (std::size_t j = 0; j + 1 < W.size(); ++j) REQUIRE(W[j] >= 0);
  }
  CHECK(direct.size() == 5);
  CHECK(cyclem.size() == 5);
  for (const auto& [code, cnt] : direct) {
    const double pa = double(cnt) / reps;
    const double pb = double(cyclem[code]) / reps;
    CHECK(pa == doctest::Approx(0.2).epsilon(0.05));
    CHECK(pb == doctest::Approx(0.2).epsilon(0.05));
  }
}
