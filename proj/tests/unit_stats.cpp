#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "snakelab/continuum.hpp"
#include "snakelab/displacement.hpp"
#include "snakelab/offspring.hpp"
#include "snakelab/rng.hpp"
#include "snakelab/stats.hpp"

using namespace snakelab;

namespace {

// Exact null law of the two-sided two-sample statistic for continuous data:
// every interleaving of the pooled ranks is equally likely.
double ks_p_by_enumeration(int n1, int n2, double dObs) {
  const int tot = n1 + n2;
  std::uint64_t hits = 0, all = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << tot); ++mask) {
    if (std::popcount(mask) != n1) continue;
    ++all;
    int i = 0, j = 0;
    double d = 0.0;
    for (int p = 0; p < tot; ++p) {
      if (mask >> p & 1)
        ++i;
      else
        ++j;
      d = std::max(d, std::fabs(double(i) / n1 - double(j) / n2));
    }
    if (d >= dObs - 1e-12) ++hits;
  }
  return double(hits) / double(all);
}

bool has_row(const StatsReport& rep, const std::string& name) {
  for (const auto& t : rep.tests)
    if (t.name.find(name) != std::string::npos) return true;
  return false;
}

// Everything except the config echo, which legitimately reflects the worker
// count; the numeric rows themselves must not depend on it.
std::string rows_signature(const StatsReport& rep) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& t : rep.tests)
    os << t.name << '|' << t.statistic << '|' << t.pValue << '|' << t.pass << '|' << t.note << '\n';
  return os.str();
}

}  // namespace

TEST_CASE("two-sample KS p-value matches exhaustive rank enumeration") {
  // Fully separated samples first: D = 1 with a closed-form count.
  auto tiny = ks_two_sample({1.0}, {2.0});
  CHECK(tiny.statistic == doctest::Approx(1.0));
  CHECK(tiny.exact);
  CHECK(tiny.pValue == doctest::Approx(1.0));

  auto sep = ks_two_sample({1.0, 2.0}, {3.0, 4.0});
  CHECK(sep.statistic == doctest::Approx(1.0));
  CHECK(sep.pValue == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  Rng rng(5, 11);
  const std::pair<int, int> shapes[] = {{1, 1}, {2, 2}, {3, 4}, {5, 5},
                                        {4, 7}, {6, 3}, {8, 2}, {5, 8}};
  for (auto [n1, n2] : shapes) {
    for (int rep = 0; rep < 5; ++rep) {
      std::vector<double> a(static_cast<std::size_t>(n1)), b(static_cast<std::size_t>(n2));
      for (auto& v : a) v = rng.uniform01();
      for (auto& v : b) v = rng.uniform01();
      auto r = ks_two_sample(a, b);
      REQUIRE(r.exact);
      double want = ks_p_by_enumeration(n1, n2, r.statistic);
      CHECK(std::fabs(r.pValue - want) < 1e-12);
    }
  }
}

TEST_CASE("two-sample KS ties and degenerate cases") {
  // Ties within one sample keep the exact path; the statistic is still D = 1.
  auto r = ks_two_sample({1.0, 1.0, 2.0}, {3.0, 3.0});
  CHECK(r.statistic == doctest::Approx(1.0));
  CHECK(r.exact);
  CHECK(r.pValue == doctest::Approx(0.2).epsilon(1e-12));

  // A value shared across the samples forces the asymptotic fallback.
  auto crossTied = ks_two_sample({1.0, 2.0}, {2.0, 3.0});
  CHECK_FALSE(crossTied.exact);

  auto same = ks_two_sample({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0});
  CHECK(same.statistic == 0.0);
  CHECK(same.pValue == 1.0);

  CHECK_THROWS_AS(ks_two_sample({}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(ks_two_sample({1.0}, {}), std::invalid_argument);
}

TEST_CASE("one-sample KS statistic pin and Rayleigh fit of the first jump time") {
  auto one = ks_one_sample({0.5}, [](double x) { return std::clamp(x, 0.0, 1.0); });
  CHECK(one.statistic == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(one.pValue > 0.0);
  CHECK(one.pValue < 1.0);

  Rng rng(41, 12);
  std::vector<double> j1(3000);
  for (auto& v : j1) v = sample_jump_times(1, rng)[0];
  auto ray = ks_one_sample(j1, [](double x) { return x <= 0.0 ? 0.0 : 1.0 - std::exp(-0.5 * x * x); });
  CHECK(ray.pValue > 1e-3);
}

TEST_CASE("regularized upper incomplete gamma pins") {
  CHECK(gamma_q(1.0, 2.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
  CHECK(gamma_q(2.0, 3.0) == doctest::Approx(4.0 * std::exp(-3.0)).epsilon(1e-12));
  CHECK(gamma_q(0.5, 1.0) == doctest::Approx(std::erfc(1.0)).epsilon(1e-10));
  CHECK(gamma_q(3.0, 0.0) == 1.0);
  CHECK(gamma_q(0.5, 40.0) < 1e-15);
  CHECK_THROWS_AS(gamma_q(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(gamma_q(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("chi-square GOF merging, overflow cell, and p pins") {
  auto flat = chi_square_gof({10, 10, 10, 10, 10, 10},
                             {1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6});
  CHECK(flat.statistic == doctest::Approx(0.0));
  CHECK(flat.dof == 5);
  CHECK(flat.pValue == doctest::Approx(1.0));

  // (55-50)^2/50 + (45-50)^2/50 = 1 on one degree of freedom.
  auto coin = chi_square_gof({55, 45}, {0.5, 0.5});
  CHECK(coin.statistic == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(coin.dof == 1);
  CHECK(coin.pValue == doctest::Approx(std::erfc(std::sqrt(0.5))).epsilon(1e-9));

  // The sparse cell merges into its neighbour; a single bin carries no test.
  auto merged = chi_square_gof({50, 1}, {0.98, 0.02});
  CHECK(merged.bins == 1);
  CHECK(merged.dof == 0);
  CHECK(merged.pValue == 1.0);

  // Probabilities short of 1 get an implicit overflow cell with zero count.
  auto over = chi_square_gof({90, 10}, {0.5, 0.3});
  CHECK(over.bins == 3);
  CHECK(over.dof == 2);
  CHECK(over.pValue < 1e-9);

  CHECK_THROWS_AS(chi_square_gof({1, 2}, {0.5}), std::invalid_argument);
  CHECK_THROWS_AS(chi_square_gof({1, 2}, {-0.1, 1.1}), std::invalid_argument);
  CHECK_THROWS_AS(chi_square_gof({1, 2}, {0.6, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(chi_square_gof({-1, 2}, {0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(chi_square_gof({0, 0}, {0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("energy statistic pins and input validation") {
  using VV = std::vector<std::vector<double>>;
  VV x{{0.0}}, y{{1.0}};
  CHECK(energy_statistic(x, y) == doctest::Approx(1.0).epsilon(1e-12));
  VV z{{0.3, -0.2}, {1.0, 0.5}, {-2.0, 0.1}};
  CHECK(std::fabs(energy_statistic(z, z)) < 1e-12);
  CHECK_THROWS_AS(energy_statistic(VV{}, y), std::invalid_argument);
  CHECK_THROWS_AS(energy_statistic(x, VV{{1.0, 2.0}}), std::invalid_argument);
}

TEST_CASE("parallel_for covers every index once and propagates exceptions") {
  for (int workers : {1, 4}) {
    std::vector<std::int64_t> hits(997, 0);
    std::atomic<std::int64_t> sum{0};
    parallel_for(997, workers, [&](std::int64_t i) {
      hits[std::size_t(i)] += 1;
      sum += i;
    });
    CHECK(sum == 997 * 996 / 2);
    CHECK(std::all_of(hits.begin(), hits.end(), [](std::int64_t h) { return h == 1; }));
  }
  CHECK_THROWS_AS(parallel_for(100, 4,
                               [](std::int64_t i) {
                                 if (i == 57) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}

TEST_CASE("report verdict only counts verdict rows") {
  StatsReport rep;
  TestResult info;
  info.name = "per-seed diagnostic";
  info.pass = false;
  info.verdict = false;
  rep.add(info);
  CHECK(rep.pass);

  TestResult good;
  good.name = "verdict row";
  good.pass = true;
  rep.add(good);
  CHECK(rep.pass);

  TestResult bad;
  bad.name = "failing verdict";
  bad.pass = false;
  rep.add(bad);
  CHECK_FALSE(rep.pass);

  std::string js = rep.to_json();
  CHECK(js.find("\"tests\"") != std::string::npos);
  CHECK(js.find("failing verdict") != std::string::npos);
}

TEST_CASE("main limit verifier passes on a centered model and rejects a drifting one") {
  Experiment e(OffspringLaw::binary(), DisplacementModel::deterministic_spread(1.0));
  e.n = 2001;
  e.reps = 150;
  e.k = 2;
  e.seed = 20240812;
  auto rep = verify_main_theorem(e);
  CHECK(rep.pass);
  CHECK(has_row(rep, "height rfdd"));
  CHECK(has_row(rep, "energy distance"));
  CHECK(rep.config.find("binary") != std::string::npos);

  IidLaw drift;
  drift.atoms = {{1.0, 1.0}};
  Experiment off(OffspringLaw::binary(), DisplacementModel::iid_law(drift));
  off.n = 201;
  off.reps = 20;
  CHECK_THROWS_AS(verify_main_theorem(off), std::invalid_argument);
}

TEST_CASE("main limit verifier handles a degenerate zero displacement") {
  Experiment e(OffspringLaw::binary(), DisplacementModel::iid_law(IidLaw::two_atoms(0.0)));
  e.n = 201;
  e.reps = 60;
  e.k = 2;
  e.seeds = 1;
  e.seed = 7;
  auto rep = verify_main_theorem(e);
  CHECK(rep.pass);
}

TEST_CASE("height-Luka combination verifier passes and is deterministic") {
  Experiment e(OffspringLaw::binary(), DisplacementModel::deterministic_spread(1.0));
  e.n = 2001;
  e.reps = 200;
  e.seed = 31;
  auto rep = verify_cor_height_luka(e);
  CHECK(rep.pass);
  CHECK(has_row(rep, "identity"));
  CHECK(has_row(rep, "tightness"));
  REQUIRE(rep.samples.size() >= 2);
  CHECK(rep.samples[0].second.size() == std::size_t(e.reps));
  CHECK(rep.samples_csv().substr(0, 17) == "series,rep,value\n");

  Experiment d(OffspringLaw::geometric_half(), DisplacementModel::deterministic_spread(1.0));
  d.n = 501;
  d.reps = 60;
  d.seeds = 1;
  d.seed = 99;
  d.workers = 1;
  std::string first = rows_signature(verify_cor_height_luka(d));
  std::string again = rows_signature(verify_cor_height_luka(d));
  d.workers = 4;
  std::string wide = rows_signature(verify_cor_height_luka(d));
  CHECK(first == again);
  CHECK(first == wide);
}

TEST_CASE("looptree verifier passes for a law with nondegenerate spread") {
  Experiment e(OffspringLaw::geometric_half(), DisplacementModel::deterministic_spread(1.0));
  e.n = 2000;
  e.reps = 200;
  e.seed = 77;
  auto rep = verify_looptree(e);
  CHECK(rep.pass);
  CHECK(has_row(rep, "unary chain"));

  // Binary trees make the looptree correction exact: all combos vanish.
  Experiment b(OffspringLaw::binary(), DisplacementModel::deterministic_spread(1.0));
  b.n = 2001;
  b.reps = 50;
  b.seeds = 1;
  b.seed = 3;
  CHECK(verify_looptree(b).pass);
}

TEST_CASE("hairy verifier passes on an exact two-sided Pareto tail") {
  IidLaw law = IidLaw::heavy(4.0, 0.5, 0.5, 1.5);
  Experiment e(OffspringLaw::binary(), DisplacementModel::iid_law(law));
  e.n = 2001;
  e.reps = 400;
  e.seed = 61;
  auto spec = PiMeasureSpec::axes(0.5, 0.5, 4.0);
  auto rep = verify_hairy(e, spec, 1.0);
  CHECK(rep.pass);
  CHECK(has_row(rep, "count"));
  CHECK(has_row(rep, "band"));

  CHECK_THROWS_AS(verify_hairy(e, PiMeasureSpec::axes(0.5, 0.5, 3.0), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(verify_hairy(e, spec, 0.0), std::invalid_argument);
  Experiment plain(OffspringLaw::binary(), DisplacementModel::deterministic_spread(1.0));
  CHECK_THROWS_AS(verify_hairy(plain, spec, 1.0), std::invalid_argument);
}

TEST_CASE("hairy verifier stays sane when the threshold empties the jump set") {
  IidLaw law = IidLaw::heavy(4.0, 0.5, 0.5, 1.5);
  Experiment e(OffspringLaw::binary(), DisplacementModel::iid_law(law));
  e.n = 2001;
  e.reps = 200;
  e.seeds = 1;
  e.seed = 19;
  auto spec = PiMeasureSpec::axes(0.5, 0.5, 4.0);
  auto rep = verify_hairy(e, spec, 1e3);
  CHECK(rep.pass);
}

TEST_CASE("hairy verifier exposes the max-functional rows for eta > 0") {
  IidLaw law;
  law.atoms = {{0.005, 0.49998}, {-0.005, 0.49998}};
  law.q = 3.0;
  law.aPlus = 2e-5;
  law.aMinus = 2e-5;
  law.y0 = 1.0;
  Experiment e(OffspringLaw::binary(), DisplacementModel::iid_law(law));
  e.n = 40001;
  e.reps = 100;
  e.seeds = 1;
  e.seed = 5;
  e.eta = 1.0;
  auto spec = PiMeasureSpec::axes(2e-5, 2e-5, 3.0);
  auto rep = verify_hairy(e, spec, 1.0);
  CHECK(has_row(rep, "max head"));
  CHECK(has_row(rep, "count"));
}

TEST_CASE("tail diagnostic reports monotone envelopes on a spread model") {
  Experiment e(OffspringLaw::binary(), DisplacementModel::deterministic_spread(1.0));
  e.n = 2001;
  e.reps = 1500;
  e.seeds = 1;
  e.seed = 101;
  auto rep = tail_bound_diagnostic(e, {1.5, 1.8, 2.1});
  CHECK(has_row(rep, "monotone"));
  CHECK(has_row(rep, "slope"));
  for (const auto& t : rep.tests)
    if (t.name.find("monotone") != std::string::npos) CHECK(t.pass);

  CHECK_THROWS_AS(tail_bound_diagnostic(e, {}), std::invalid_argument);
  CHECK_THROWS_AS(tail_bound_diagnostic(e, {-1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("figure export is deterministic with pinned endpoints") {
  Experiment e(OffspringLaw::poisson1(), DisplacementModel::deterministic_spread(1.0));
  e.n = 251;
  e.seed = 4242;
  std::string csv = figure_head(e);
  CHECK(csv == figure_head(e));

  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "index,t,contour,head,contour_scaled,head_scaled");
  std::vector<std::string> rows;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(line);
  REQUIRE(rows.size() == std::size_t(2 * 251 - 1));
  // The contour walk starts and ends at the root with label zero.
  CHECK(rows.front().substr(0, 8) == "0,0,0,0,");
  CHECK(rows.back().find(",1,0,") != std::string::npos);
}
