#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "snakelab/displacement.hpp"
#include "snakelab/encodings.hpp"
#include "snakelab/offspring.hpp"
#include "snakelab/sample.hpp"
#include "snakelab/spatial.hpp"

using namespace snakelab;

TEST_CASE("deterministic spread centers and matches the closed-form variance") {
  struct Case {
    OffspringLaw law;
    double beta2;
  };
  const Case cases[] = {
      {OffspringLaw::binary(), 1.0},
      {OffspringLaw::poisson1(), 7.0 / 3.0},
      {OffspringLaw::geometric_half(), 4.0},
  };
  for (const auto& c : cases) {
    double sigma = std::sqrt(c.law.sigma2());
    auto m = DisplacementModel::deterministic_spread(sigma);
    GlobalMoments gm = global_moments(m, c.law);
    CHECK(std::abs(gm.mean) < 1e-10);
    CHECK(gm.beta2 == doctest::Approx(spread_beta2(c.law, sigma)).epsilon(1e-9));
    CHECK(gm.beta2 == doctest::Approx(c.beta2).epsilon(1e-9));
  }
}

TEST_CASE("looptree displacement centers at c* and matches the closed-form variance") {
  auto bin = OffspringLaw::binary();
  auto geo = OffspringLaw::geometric_half();
  auto poi = OffspringLaw::poisson1();

  CHECK(looptree_cstar(bin) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(looptree_cstar(geo) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK(looptree_cstar(poi) == doctest::Approx(1.0 + (1.0 - std::exp(-2.0)) / 8.0).epsilon(1e-12));

  for (const auto* law : {&bin, &geo, &poi}) {
    double c = looptree_cstar(*law);
    GlobalMoments gm = global_moments(DisplacementModel::looptree(c), *law);
    CHECK(std::abs(gm.mean) < 1e-10);
    CHECK(gm.beta2 == doctest::Approx(looptree_beta2(*law, c)).epsilon(1e-9));
  }
  CHECK(std::abs(looptree_beta2(bin, 1.0)) < 1e-12);
  CHECK(looptree_beta2(geo, 4.0 / 3.0) == doctest::Approx(4.0 / 9.0).epsilon(1e-10));
}

TEST_CASE("heavy-tail iid law: exact moments and tail frequencies") {
  IidLaw law = IidLaw::heavy(4.0, 0.5, 0.5, 1.5);
  CHECK(std::abs(law.mean()) < 1e-14);
  // E[Y^2] = atoms * (y0/2)^2 + 2 * q/(q-2) * a * y0^{-2}
  double pTail = law.tail_mass();
  double m2Expect = (1.0 - pTail) * 0.75 * 0.75 + 2.0 * 2.0 * 0.5 * std::pow(1.5, -2.0);
  CHECK(law.m2() == doctest::Approx(m2Expect).epsilon(1e-12));

  Rng rng(20260814, 1);
  const int N = 400000;
  double sum = 0.0, sum2 = 0.0;
  int above2 = 0, above3 = 0, absLe1 = 0;
  for (int i = 0; i < N; ++i) {
    double y = law.sample(rng);
    sum += y;
    sum2 += y * y;
    if (y > 2.0) ++above2;
    if (y > 3.0) ++above3;
    if (std::abs(y) <= 1.0) ++absLe1;
  }
  double se = std::sqrt(law.m2() / N);
  CHECK(std::abs(sum / N) < 6.0 * se);
  CHECK(sum2 / N == doctest::Approx(law.m2()).epsilon(0.05));
  auto binom_ok = [&](int count, double p) {
    double sd = std::sqrt(p * (1.0 - p) * N);
    return std::abs(count - p * N) < 6.0 * sd + 3.0;
  };
  CHECK(binom_ok(above2, 0.5 * std::pow(2.0, -4.0)));
  CHECK(binom_ok(above3, 0.5 * std::pow(3.0, -4.0)));
  CHECK(binom_ok(absLe1, law.cdf_abs(1.0)));

  // Truncated moments against direct Monte Carlo.
  double mtNum = 0.0, m2tNum = 0.0;
  Rng rng2(20260814, 2);
  for (int i = 0; i < N; ++i) {
    double y = law.sample(rng2);
    if (std::abs(y) <= 2.5) {
      mtNum += y;
      m2tNum += y * y;
    }
  }
  CHECK(std::abs(mtNum / N - law.mean_trunc(2.5)) < 6.0 * se);
  CHECK(m2tNum / N == doctest::Approx(law.m2_trunc(2.5)).epsilon(0.05));
}

TEST_CASE("heavy-tail law rejects impossible parameters") {
  CHECK_THROWS_AS(IidLaw::heavy(4.0, 10.0, 10.0, 1.0), std::invalid_argument);
  IidLaw infVar = IidLaw::heavy(1.5, 0.1, 0.1, 4.0);
  CHECK_THROWS_AS(infVar.m2(), std::domain_error);
}

TEST_CASE("displacement array is aligned with child slots") {
  auto law = OffspringLaw::poisson1();
  Rng rng(7, 0);
  auto t = sample_tree(law, 201, rng);
  auto m = DisplacementModel::deterministic_spread(2.0);
  auto disp = sample_displacements(t, m, rng);
  REQUIRE(disp.size() == static_cast<std::size_t>(t.n() - 1));
  for (std::int32_t v = 1; v <= t.n(); ++v) {
    std::int32_t k = t.degree(v);
    for (std::int32_t s = 1; s <= k; ++s)
      CHECK(disp[t.edge_index(v, s)] == doctest::Approx(2.0 - (k - s)).epsilon(1e-15));
  }
}

TEST_CASE("head process equals the height/walk combination exactly") {
  // R(i) = sigma * H(i) - (2/sigma) * W(i) holds path by path for the spread model.
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Rng rng(seed, 9);
    auto law = OffspringLaw::geometric_half();
    double sigma = std::sqrt(law.sigma2());
    auto t = sample_tree(law, 500, rng);
    auto disp = sample_displacements(t, DisplacementModel::deterministic_spread(sigma), rng);
    auto st = make_spatial(t, std::move(disp));
    EncodedPaths p = encode_all(st);
    auto combo = combine_height_luka(sigma, sigma, p.W, p.H);
    REQUIRE(p.R.size() == combo.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < combo.size(); ++i)
      worst = std::max(worst, std::abs(p.R[i] - combo[i]));
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("band split gates whole vertex vectors by sup norm") {
  // Root 1 with children 2,3; vertex 2 with children 4,5.
  auto t = LabeledOrderedTree::from_child_lists(1, {{2, 3}, {4, 5}, {}, {}, {}});
  std::vector<double> disp(4, 0.0);
  disp[t.edge_index(1, 1)] = 0.5;
  disp[t.edge_index(1, 2)] = -4.0;  // sup 4 -> large band
  disp[t.edge_index(2, 1)] = 0.2;
  disp[t.edge_index(2, 2)] = -1.0;  // sup 1 -> typical band
  TruncationBands bands{1.0, 3.0};
  BandSplit bs = split_bands(t, disp, bands);
  CHECK(bs.large[t.edge_index(1, 1)] == 0.5);
  CHECK(bs.large[t.edge_index(1, 2)] == -4.0);
  CHECK(bs.typ[t.edge_index(2, 2)] == -1.0);
  CHECK(bs.mid == std::vector<double>(4, 0.0));
  for (std::size_t i = 0; i < 4; ++i) CHECK(bs.typ[i] + bs.mid[i] + bs.large[i] == disp[i]);

  // Boundary is inclusive on the typical side.
  TruncationBands tight{4.0, 5.0};
  BandSplit bs2 = split_bands(t, disp, tight);
  CHECK(bs2.typ == disp);
}

TEST_CASE("large jump ordering sorts by max then min coordinate then label") {
  auto t =
      LabeledOrderedTree::from_child_lists(1, {{2, 3, 4}, {5}, {6}, {7}, {}, {}, {}});
  std::vector<double> disp(6, 0.0);
  // vertex 1: entries 5, -2, 0 -> (5, 2)
  disp[t.edge_index(1, 1)] = 5.0;
  disp[t.edge_index(1, 2)] = -2.0;
  // vertex 2: entry -5 -> (0, 5): same max as vertex 1, smaller min coordinate
  disp[t.edge_index(2, 1)] = -5.0;
  // vertex 3: entry 3 -> (3, 0)
  disp[t.edge_index(3, 1)] = 3.0;
  // vertex 4: entry 0.5 -> below threshold
  disp[t.edge_index(4, 1)] = 0.5;
  auto ord = large_jump_ordering(t, disp, 1.0);
  REQUIRE(ord.size() == 3);
  CHECK(ord[0] == std::pair<double, double>(5.0, 2.0));
  CHECK(ord[1] == std::pair<double, double>(0.0, 5.0));
  CHECK(ord[2] == std::pair<double, double>(3.0, 0.0));
}

TEST_CASE("truncation bands use the eta-dependent exponent") {
  TruncationBands b0 = make_bands(10000, 0.05, 2.0, 0.0);
  CHECK(b0.tauTyp == doctest::Approx(std::pow(10000.0, 0.2)).epsilon(1e-12));
  CHECK(b0.tauLarge == doctest::Approx(2.0 * 10.0).epsilon(1e-12));
  TruncationBands b1 = make_bands(10000, 0.0, 1.0, 1.0);
  CHECK(b1.tauLarge == doctest::Approx(std::pow(10000.0, 1.0 / 3.0)).epsilon(1e-12));
  CHECK_THROWS_AS(make_bands(100, 0.1, 1.0, 2.0), std::invalid_argument);
}

TEST_CASE("truncated moments: deterministic gating and iid closed forms") {
  auto law = OffspringLaw::geometric_half();
  double sigma = std::sqrt(law.sigma2());
  auto spread = DisplacementModel::deterministic_spread(sigma);
  GlobalMoments full = global_moments(spread, law);
  GlobalMoments wide = truncated_global_moments(spread, law, 1e9);
  CHECK(std::abs(wide.mean - full.mean) < 1e-12);
  CHECK(wide.beta2 == doctest::Approx(full.beta2).epsilon(1e-9));
  // sup norm for k children is max(sigma, (2/sigma)(k-1) - sigma); tau below
  // sigma kills every vector.
  GlobalMoments none = truncated_global_moments(spread, law, sigma / 2.0);
  CHECK(none.mean == 0.0);
  CHECK(none.beta2 == 0.0);

  // iid law: compare against vector-level Monte Carlo under the size-biased
  // child count.
  IidLaw iid = IidLaw::heavy(4.0, 0.5, 0.5, 1.5);
  auto model = DisplacementModel::iid_law(iid);
  double tau = 2.0;
  GlobalMoments tg = truncated_global_moments(model, law, tau);
  const auto& sb = law.size_biased_pmf();
  std::vector<double> cdf;
  double acc = 0.0;
  for (double p : sb) {
    acc += p;
    cdf.push_back(acc);
  }
  Rng rng(99, 3);
  const int N = 300000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < N; ++i) {
    double u = rng.uniform01() * acc;
    std::size_t k = 0;
    while (k + 1 < cdf.size() && u >= cdf[k]) ++k;
    std::vector<double> y(k);
    double sup = 0.0;
    for (auto& v : y) {
      v = iid.sample(rng);
      sup = std::max(sup, std::abs(v));
    }
    if (sup <= tau && k > 0) {
      double pick = y[rng.below(k)];
      s1 += pick;
      s2 += pick * pick;
    }
  }
  double seMean = std::sqrt(iid.m2() / N);
  CHECK(std::abs(s1 / N - tg.mean) < 6.0 * seMean);
  CHECK(s2 / N == doctest::Approx(tg.beta2 + tg.mean * tg.mean).epsilon(0.05));
}
