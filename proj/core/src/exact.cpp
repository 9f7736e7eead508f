#include "snakelab/exact.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "snakelab/displacement.hpp"
#include "snakelab/rng.hpp"
#include "snakelab/sample.hpp"
#include "snakelab/stats.hpp"

namespace snakelab {

namespace {

std::int64_t factorial(std::int64_t n) {
  std::int64_t f = 1;
  for (std::int64_t i = 2; i <= n; ++i) f *= i;
  return f;
}

std::string vec_key(std::span<const std::int32_t> v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

std::string vec_key64(std::span<const std::int64_t> v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

void finalize(ExactLawReport& rep, double tol) {
  double worst = 0.0;
  for (std::size_t i = 0; i < rep.computedProbabilities.size(); ++i)
    worst = std::max(worst,
                     std::abs(rep.computedProbabilities[i] - rep.formulaProbabilities[i]));
  rep.maxAbsDiff = worst;
  rep.pass = worst <= tol;
}

}  // namespace

std::string ExactLawReport::to_json() const {
  nlohmann::json j;
  j["lawName"] = lawName;
  j["support"] = support;
  j["computedProbabilities"] = computedProbabilities;
  j["formulaProbabilities"] = formulaProbabilities;
  j["maxAbsDiff"] = maxAbsDiff;
  j["exact"] = exact;
  j["excludedRows"] = excludedRows;
  j["pass"] = pass;
  j["detail"] = detail;
  return j.dump(2);
}

void enumerate_Pd(const DegreeSequence& d, const std::function<void(const EdgeLabelSeq&)>& fn) {
  if (!d.valid()) throw std::invalid_argument("enumerate_Pd: invalid degree sequence");
  if (d.n() > 9) throw std::invalid_argument("enumerate_Pd: n > 9");
  EdgeLabelSeq pi;
  for (std::int32_t v = 1; v <= d.n(); ++v)
    for (std::int32_t c = 1; c <= d.of(v); ++c) pi.emplace_back(v, c);
  std::sort(pi.begin(), pi.end());
  do {
    fn(pi);
  } while (std::next_permutation(pi.begin(), pi.end()));
}

ExactLawReport check_sb_order_law(const DegreeSequence& d) {
  ExactLawReport rep;
  rep.lawName = "sb_order_law";
  rep.exact = true;
  const std::int64_t n = d.n();
  const std::int64_t total = factorial(n - 1);

  std::map<std::vector<std::int32_t>, std::int64_t> counts;
  std::int64_t seen = 0;
  enumerate_Pd(d, [&](const EdgeLabelSeq& pi) {
    ++seen;
    ++counts[first_appearance_order(pi)];
  });
  if (seen != total) {
    rep.detail = "enumeration size mismatch";
    rep.pass = false;
    return rep;
  }

  bool allEqual = true;
  for (const auto& [ord, cnt] : counts) {
    Rat formula(1);
    std::int64_t used = 0;
    for (std::int32_t v : ord) {
      formula *= Rat(d.of(v), n - 1 - used);
      used += d.of(v);
    }
    Rat computed(cnt, total);
    rep.support.push_back(vec_key(ord));
    rep.computedProbabilities.push_back(computed.to_double());
    rep.formulaProbabilities.push_back(formula.to_double());
    if (computed != formula) allEqual = false;
  }
  finalize(rep, 0.0);
  rep.pass = rep.pass && allEqual;
  rep.detail = std::to_string(counts.size()) + " appearance orders over " +
               std::to_string(total) + " sequences";
  return rep;
}

ExactLawReport check_repeat_laws(const DegreeSequence& d) {
  ExactLawReport rep;
  rep.lawName = "repeat_laws";
  rep.exact = true;
  const std::int64_t n = d.n();
  if (n > 8) throw std::invalid_argument("check_repeat_laws: n > 8");

  // Group sequences by appearance order plus prior repeat positions; count
  // survivals of the next repeat time.
  struct Cell {
    std::int64_t total = 0;
    std::map<std::int64_t, std::int64_t> nextRepeatAt;  // position, count (n = none)
  };
  // key: (order, repeats prefix)
  std::map<std::pair<std::vector<std::int32_t>, std::vector<std::int64_t>>, Cell> cells;

  enumerate_Pd(d, [&](const EdgeLabelSeq& pi) {
    auto ord = first_appearance_order(pi);
    std::vector<bool> seenV(static_cast<std::size_t>(n) + 1, false);
    std::vector<std::int64_t> repeats;
    for (std::size_t j = 0; j < pi.size(); ++j) {
      std::int32_t v = pi[j].first;
      if (seenV[static_cast<std::size_t>(v)])
        repeats.push_back(static_cast<std::int64_t>(j) + 1);
      else
        seenV[static_cast<std::size_t>(v)] = true;
    }
    for (std::size_t i = 0; i <= repeats.size(); ++i) {
      std::vector<std::int64_t> prefix(repeats.begin(),
                                       repeats.begin() + static_cast<std::ptrdiff_t>(i));
      Cell& cell = cells[{ord, prefix}];
      ++cell.total;
      ++cell.nextRepeatAt[i < repeats.size() ? repeats[i] : n];
    }
  });

  bool allEqual = true;
  for (const auto& [key, cell] : cells) {
    const auto& ord = key.first;
    const auto& prefix = key.second;
    const std::int64_t i = static_cast<std::int64_t>(prefix.size());
    const std::int64_t base = i == 0 ? 1 : prefix.back();
    const std::int64_t N = static_cast<std::int64_t>(ord.size());
    // Prefix sums of appearing degrees.
    std::vector<std::int64_t> T(static_cast<std::size_t>(N) + 1, 0);
    for (std::int64_t j = 1; j <= N; ++j)
      T[static_cast<std::size_t>(j)] =
          T[static_cast<std::size_t>(j - 1)] + d.of(ord[static_cast<std::size_t>(j - 1)]);

    for (std::int64_t k = 1; base + k <= n; ++k) {
      std::int64_t survived = 0;
      for (const auto& [pos, cnt] : cell.nextRepeatAt)
        if (pos > base + k) survived += cnt;
      // Product of (n-1-T_{p-i})/(n-1-p) over positions p = base..base+k-1.
      bool defined = true;
      Rat formula(1);
      for (std::int64_t p = base; p < base + k; ++p) {
        if (p - i < 0 || p - i > N || p >= n - 1) {
          defined = false;
          break;
        }
        formula *= Rat(n - 1 - T[static_cast<std::size_t>(p - i)], n - 1 - p);
      }
      std::string row = vec_key(ord) + "|i=" + std::to_string(i) +
                        (i ? ",at=" + vec_key64(prefix) : std::string()) +
                        "|k=" + std::to_string(k);
      if (!defined) {
        // Beyond the reachable range the survival must vanish.
        ++rep.excludedRows;
        if (survived != 0) {
          allEqual = false;
          rep.support.push_back(row + " (out of range, nonzero mass)");
          rep.computedProbabilities.push_back(static_cast<double>(survived) / cell.total);
          rep.formulaProbabilities.push_back(0.0);
        }
        continue;
      }
      Rat computed(survived, cell.total);
      rep.support.push_back(row);
      rep.computedProbabilities.push_back(computed.to_double());
      rep.formulaProbabilities.push_back(formula.to_double());
      if (computed != formula) allEqual = false;
    }
  }
  finalize(rep, 0.0);
  rep.pass = rep.pass && allEqual;
  rep.detail = std::to_string(cells.size()) + " conditioning cells";
  return rep;
}

namespace {

// Exhaustive weighted enumeration of preorder degree sequences (c_1..c_n):
// c_i in supp(mu), partial sums of (c_i - 1) stay >= 0 before the end and
// finish at -1. Calls fn(degrees, weight queried per entry).
template <class T, class Pmf>
void enumerate_trees(const Pmf& pmf, std::int64_t n, std::vector<std::int32_t>& c, T w,
                     std::int64_t sum, const std::function<void(const std::vector<std::int32_t>&, T)>& fn) {
  std::int64_t j = static_cast<std::int64_t>(c.size());
  if (j == n) {
    fn(c, w);
    return;
  }
  std::int64_t maxk = static_cast<std::int64_t>(pmf.size()) - 1;
  for (std::int64_t k = 0; k <= maxk; ++k) {
    const auto pk = pmf[static_cast<std::size_t>(k)];
    if (pk == T(0)) continue;
    std::int64_t s = sum + k;
    // prefix: s - (j+1) >= 0 until the last step; total must reach n-1.
    if (j + 1 < n && s < j + 1) continue;
    if (s > n - 1) break;
    if (j + 1 == n && s != n - 1) continue;
    c.push_back(static_cast<std::int32_t>(k));
    enumerate_trees(pmf, n, c, w * pk, s, fn);
    c.pop_back();
  }
}

std::vector<Rat> rational_pmf_of(const OffspringLaw& law) {
  std::vector<Rat> out;
  if (!law.rational_pmf()) return out;
  for (const auto& [num, den] : *law.rational_pmf()) out.emplace_back(num, den);
  return out;
}

// pmf of X_1 + ... + X_m, entries 0..cap.
template <class T>
std::vector<T> convolve_pmf(const std::vector<T>& pmf, std::int64_t m, std::int64_t cap) {
  std::vector<T> cur(static_cast<std::size_t>(cap) + 1, T(0));
  cur[0] = T(1);
  for (std::int64_t i = 0; i < m; ++i) {
    std::vector<T> nxt(static_cast<std::size_t>(cap) + 1, T(0));
    for (std::int64_t s = 0; s <= cap; ++s) {
      if (cur[static_cast<std::size_t>(s)] == T(0)) continue;
      for (std::int64_t k = 0; k < static_cast<std::int64_t>(pmf.size()) && s + k <= cap; ++k) {
        if (pmf[static_cast<std::size_t>(k)] == T(0)) continue;
        nxt[static_cast<std::size_t>(s + k)] +=
            cur[static_cast<std::size_t>(s)] * pmf[static_cast<std::size_t>(k)];
      }
    }
    cur = std::move(nxt);
  }
  return cur;
}

template <class T>
ExactLawReport kemperman_impl(const OffspringLaw& law, std::int64_t n, const std::vector<T>& pmf,
                              bool exact, double tol) {
  ExactLawReport rep;
  rep.lawName = "kemperman";
  rep.exact = exact;

  std::vector<T> byRoot(pmf.size(), T(0));
  T total(0);
  std::vector<std::int32_t> c;
  std::function<void(const std::vector<std::int32_t>&, T)> fn =
      [&](const std::vector<std::int32_t>& deg, T w) {
        byRoot[static_cast<std::size_t>(deg[0])] += w;
        total += w;
      };
  enumerate_trees(pmf, n, c, T(1), 0, fn);
  if (total == T(0)) throw std::domain_error("kemperman: size has zero probability");

  auto Sn = convolve_pmf(pmf, n, n - 1);
  auto Sn1 = convolve_pmf(pmf, n - 1, n - 1);
  bool allEqual = true;
  for (std::int64_t k = 1; k < static_cast<std::int64_t>(pmf.size()) && k <= n - 1; ++k) {
    if (pmf[static_cast<std::size_t>(k)] == T(0)) continue;
    T lhs = byRoot[static_cast<std::size_t>(k)] / total;
    T rhs = T(n) / T(n - 1) * Sn1[static_cast<std::size_t>(n - 1 - k)] /
            Sn[static_cast<std::size_t>(n - 1)] * T(k) * pmf[static_cast<std::size_t>(k)];
    rep.support.push_back(std::to_string(k));
    if constexpr (std::is_same_v<T, Rat>) {
      rep.computedProbabilities.push_back(lhs.to_double());
      rep.formulaProbabilities.push_back(rhs.to_double());
      if (lhs != rhs) allEqual = false;
    } else {
      rep.computedProbabilities.push_back(lhs);
      rep.formulaProbabilities.push_back(rhs);
    }
  }
  finalize(rep, tol);
  if constexpr (std::is_same_v<T, Rat>) rep.pass = rep.pass && allEqual;
  rep.detail = "root-degree law, n=" + std::to_string(n);
  return rep;
}

}  // namespace

ExactLawReport check_kemperman(const OffspringLaw& law, std::int64_t n) {
  if (n < 2 || n > 12) throw std::invalid_argument("check_kemperman: need 2 <= n <= 12");
  if (!law.admits_size(n)) throw std::domain_error("check_kemperman: P(S_n = n-1) = 0");
  auto rpmf = rational_pmf_of(law);
  if (!rpmf.empty()) return kemperman_impl<Rat>(law, n, rpmf, true, 0.0);
  std::vector<double> pmf = law.pmf();
  if (static_cast<std::int64_t>(pmf.size()) > n) pmf.resize(static_cast<std::size_t>(n));
  return kemperman_impl<double>(law, n, pmf, false, 1e-12);
}

double theta_n(const OffspringLaw& law, std::int64_t n, std::span<const std::int64_t> k) {
  std::int64_t m = static_cast<std::int64_t>(k.size());
  if (m < 0 || m > n) throw std::invalid_argument("theta_n: bad m");
  std::int64_t sum = 0;
  for (std::int64_t v : k) sum += v;
  if (sum > n - 1) return 0.0;
  const auto& pmf = law.pmf();
  auto Sn = convolve_pmf(pmf, n, n - 1);
  auto Srest = convolve_pmf(pmf, n - m, n - 1);
  if (Sn[static_cast<std::size_t>(n - 1)] == 0.0)
    throw std::domain_error("theta_n: P(S_n = n-1) = 0");
  double theta = Srest[static_cast<std::size_t>(n - 1 - sum)] /
                 Sn[static_cast<std::size_t>(n - 1)];
  std::int64_t partial = 0;
  for (std::int64_t i = 1; i <= m; ++i) {
    theta *= static_cast<double>(n - i + 1) / static_cast<double>(n - 1 - partial);
    partial += k[static_cast<std::size_t>(i - 1)];
  }
  return theta;
}

double theta_general(const OffspringLaw& law, std::int64_t n, std::int64_t r, std::int64_t s,
                     std::span<const std::int64_t> prefixDegrees,
                     std::span<const std::int64_t> k) {
  if (r != static_cast<std::int64_t>(prefixDegrees.size()))
    throw std::invalid_argument("theta_general: r != |prefixDegrees|");
  std::int64_t psum = 0;
  for (std::int64_t v : prefixDegrees) {
    if (v <= 0) throw std::invalid_argument("theta_general: prefix degrees must be positive");
    psum += v;
  }
  if (psum != s) throw std::invalid_argument("theta_general: sum prefixDegrees != s");
  std::int64_t m = static_cast<std::int64_t>(k.size());
  if (m > n - r) throw std::invalid_argument("theta_general: m > n - r");
  std::int64_t sum = 0;
  for (std::int64_t v : k) sum += v;
  if (sum > n - 1 - s) return 0.0;
  const auto& pmf = law.pmf();
  auto Sfull = convolve_pmf(pmf, n - r, n - 1 - s);
  auto Srest = convolve_pmf(pmf, n - r - m, n - 1 - s);
  if (Sfull[static_cast<std::size_t>(n - 1 - s)] == 0.0)
    throw std::domain_error("theta_general: zero denominator");
  double theta = Srest[static_cast<std::size_t>(n - 1 - s - sum)] /
                 Sfull[static_cast<std::size_t>(n - 1 - s)];
  theta *= std::pow(law.mean(), static_cast<double>(m));
  std::int64_t partial = 0;
  for (std::int64_t i = 1; i <= m; ++i) {
    theta *= static_cast<double>(n - r - i + 1) / static_cast<double>(n - 1 - partial);
    partial += k[static_cast<std::size_t>(i - 1)];
  }
  return theta;
}

namespace {

// Joint law of the first m size-biased picks from a weight vector z (positive
// entries only, positions restricted to fromPos..), accumulated into pmf keyed
// by the picked values. Probability of an ordered tuple is
// prod z_{i_j} / (total - partial).
template <class T>
void accumulate_reorder_pmf(const std::vector<std::int32_t>& z, std::size_t fromPos,
                            std::int64_t total, int m, T weight,
                            std::map<std::string, T>& pmf) {
  std::vector<std::size_t> picks;
  std::vector<std::int64_t> kvec;
  std::function<void(T, std::int64_t)> rec = [&](T p, std::int64_t used) {
    if (static_cast<int>(picks.size()) == m) {
      pmf[vec_key64(kvec)] += p;
      return;
    }
    for (std::size_t i = fromPos; i < z.size(); ++i) {
      if (z[i] <= 0) continue;
      if (std::find(picks.begin(), picks.end(), i) != picks.end()) continue;
      picks.push_back(i);
      kvec.push_back(z[i]);
      rec(p * T(z[i]) / T(total - used), used + z[i]);
      kvec.pop_back();
      picks.pop_back();
    }
  };
  rec(weight, 0);
}

}  // namespace

ExactLawReport check_theta_identity(const OffspringLaw& law, std::int64_t n, int m) {
  if (n > 9) throw std::invalid_argument("check_theta_identity: n > 9");
  ExactLawReport rep;
  rep.lawName = "theta_identity_m" + std::to_string(m);
  rep.exact = false;
  const auto& pmfFull = law.pmf();
  std::vector<double> pmf = pmfFull;
  if (static_cast<std::int64_t>(pmf.size()) > n) pmf.resize(static_cast<std::size_t>(n));

  // Enumeration side: trees weighted by prod mu_deg, then the reorder prefix.
  std::map<std::string, double> lhs;
  double total = 0.0, totalWithN = 0.0;
  std::vector<std::int32_t> c;
  std::function<void(const std::vector<std::int32_t>&, double)> fn =
      [&](const std::vector<std::int32_t>& deg, double w) {
        total += w;
        std::int64_t positive = 0;
        for (std::int32_t k : deg) positive += k > 0;
        if (positive >= m) {
          totalWithN += w;
          accumulate_reorder_pmf(deg, 0, n - 1, m, w, lhs);
        }
      };
  enumerate_trees(pmf, n, c, 1.0, 0, fn);
  if (total == 0.0) throw std::domain_error("check_theta_identity: impossible size");

  // Formula side over every m-vector of positive supported values.
  std::map<std::string, double> rhs;
  std::vector<std::int64_t> kvec(static_cast<std::size_t>(m));
  std::function<void(int, double)> rec = [&](int pos, double sbw) {
    if (pos == m) {
      double t = theta_n(law, n, kvec);
      if (t > 0.0) rhs[vec_key64(kvec)] = sbw * t;
      return;
    }
    for (std::int64_t k = 1; k < static_cast<std::int64_t>(pmfFull.size()); ++k) {
      if (pmfFull[static_cast<std::size_t>(k)] == 0.0) continue;
      kvec[static_cast<std::size_t>(pos)] = k;
      rec(pos + 1, sbw * static_cast<double>(k) * pmfFull[static_cast<std::size_t>(k)]);
    }
  };
  rec(0, 1.0);

  std::set<std::string> keys;
  for (const auto& [key, p] : lhs) keys.insert(key);
  for (const auto& [key, p] : rhs) keys.insert(key);
  double lhsMass = 0.0, rhsMass = 0.0;
  for (const auto& key : keys) {
    double a = lhs.count(key) ? lhs.at(key) / total : 0.0;
    double b = rhs.count(key) ? rhs.at(key) : 0.0;
    rep.support.push_back(key);
    rep.computedProbabilities.push_back(a);
    rep.formulaProbabilities.push_back(b);
    lhsMass += a;
    rhsMass += b;
  }
  // Total-mass identity E[Theta] = P(N_n >= m).
  rep.support.push_back("total:P(N>=m)");
  rep.computedProbabilities.push_back(totalWithN / total);
  rep.formulaProbabilities.push_back(rhsMass);
  finalize(rep, 1e-12);
  rep.detail = std::to_string(keys.size()) + " degree vectors; lhs mass " +
               std::to_string(lhsMass);
  return rep;
}

ExactLawReport check_theta_general_identity(const OffspringLaw& law, std::int64_t n,
                                            std::span<const std::int64_t> prefixDegrees, int m) {
  if (n > 7) throw std::invalid_argument("check_theta_general_identity: n > 7");
  ExactLawReport rep;
  std::int64_t r = static_cast<std::int64_t>(prefixDegrees.size());
  std::int64_t s = 0;
  for (std::int64_t v : prefixDegrees) s += v;
  rep.lawName = "theta_general_identity_r" + std::to_string(r) + "_s" + std::to_string(s) +
                "_m" + std::to_string(m);
  rep.exact = false;
  const auto& pmfFull = law.pmf();
  std::int64_t cap = n - 1 - s;
  std::vector<double> pmf = pmfFull;
  if (static_cast<std::int64_t>(pmf.size()) > cap + 1)
    pmf.resize(static_cast<std::size_t>(cap) + 1);

  // Enumerate X vectors (n - r iid entries conditioned to sum cap).
  std::map<std::string, double> lhs;
  double total = 0.0;
  std::vector<std::int32_t> z(static_cast<std::size_t>(n), 0);
  for (std::int64_t i = 0; i < r; ++i)
    z[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(prefixDegrees[static_cast<std::size_t>(i)]);
  std::function<void(std::int64_t, std::int64_t, double)> rec =
      [&](std::int64_t pos, std::int64_t left, double w) {
        if (pos == n) {
          if (left != 0) return;
          total += w;
          accumulate_reorder_pmf(z, static_cast<std::size_t>(r), n - 1, m, w, lhs);
          return;
        }
        for (std::int64_t k = 0; k < static_cast<std::int64_t>(pmf.size()) && k <= left; ++k) {
          if (pmf[static_cast<std::size_t>(k)] == 0.0) continue;
          z[static_cast<std::size_t>(pos)] = static_cast<std::int32_t>(k);
          rec(pos + 1, left - k, w * pmf[static_cast<std::size_t>(k)]);
        }
        z[static_cast<std::size_t>(pos)] = 0;
      };
  rec(r, cap, 1.0);
  if (total == 0.0) throw std::domain_error("check_theta_general_identity: impossible sum");

  // Formula side with size-biased weights k mu_k / E[X].
  std::map<std::string, double> rhs;
  std::vector<std::int64_t> kvec(static_cast<std::size_t>(m));
  std::function<void(int, double)> recR = [&](int pos, double sbw) {
    if (pos == m) {
      double t = theta_general(law, n, r, s, prefixDegrees, kvec);
      if (t > 0.0) rhs[vec_key64(kvec)] = sbw * t;
      return;
    }
    for (std::int64_t k = 1; k < static_cast<std::int64_t>(pmfFull.size()); ++k) {
      if (pmfFull[static_cast<std::size_t>(k)] == 0.0) continue;
      kvec[static_cast<std::size_t>(pos)] = k;
      recR(pos + 1,
           sbw * static_cast<double>(k) * pmfFull[static_cast<std::size_t>(k)] / law.mean());
    }
  };
  recR(0, 1.0);

  std::set<std::string> keys;
  for (const auto& [key, p] : lhs) keys.insert(key);
  for (const auto& [key, p] : rhs) keys.insert(key);
  for (const auto& key : keys) {
    rep.support.push_back(key);
    rep.computedProbabilities.push_back(lhs.count(key) ? lhs.at(key) / total : 0.0);
    rep.formulaProbabilities.push_back(rhs.count(key) ? rhs.at(key) : 0.0);
  }
  finalize(rep, 1e-12);
  rep.detail = std::to_string(keys.size()) + " value vectors";
  return rep;
}

namespace {

// Spatial shape encoding used by the prune/graft check: displacements from a
// finite set, rendered recursively in planar order.
struct TinyTree {
  // children[v] and disp[v] aligned; vertex 0 is the root.
  std::vector<std::vector<int>> children;
  std::vector<std::vector<int>> disp;  // indexes into the value table
};

std::string encode_tiny(const TinyTree& t, int v) {
  std::string s = "(";
  for (std::size_t j = 0; j < t.children[static_cast<std::size_t>(v)].size(); ++j) {
    s += std::to_string(t.disp[static_cast<std::size_t>(v)][j]);
    s += encode_tiny(t, t.children[static_cast<std::size_t>(v)][j]);
  }
  s += ")";
  return s;
}

// All plane shapes with n vertices and degrees in {0, 2} plus displacement
// assignments are enumerated through preorder degree sequences.
void tiny_from_preorder(const std::vector<std::int32_t>& deg, TinyTree& t) {
  int n = static_cast<int>(deg.size());
  t.children.assign(static_cast<std::size_t>(n), {});
  t.disp.assign(static_cast<std::size_t>(n), {});
  std::vector<int> stack;
  stack.push_back(0);
  std::vector<int> want(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) want[static_cast<std::size_t>(i)] = deg[static_cast<std::size_t>(i)];
  for (int v = 1; v < n; ++v) {
    while (static_cast<int>(t.children[static_cast<std::size_t>(stack.back())].size()) ==
           want[static_cast<std::size_t>(stack.back())])
      stack.pop_back();
    t.children[static_cast<std::size_t>(stack.back())].push_back(v);
    stack.push_back(v);
  }
}

struct TinyCut {
  std::string pruned;
  std::vector<std::string> subs;  // sorted encodings of cut sub-walks
};

// Minimal vertices whose displacement vector leaves [-tau, tau], DFS order.
// Cut vertices become ordinary unmarked leaves: the pair (pruned, multiset)
// deliberately forgets where the cuts happened.
TinyCut tiny_extract(const TinyTree& t, const std::vector<double>& values, double tau) {
  TinyCut out;
  std::vector<std::string> subs;
  std::function<std::string(int)> walk = [&](int v) -> std::string {
    bool big = false;
    for (int idx : t.disp[static_cast<std::size_t>(v)])
      if (std::abs(values[static_cast<std::size_t>(idx)]) > tau) big = true;
    if (big) {
      subs.push_back(encode_tiny(t, v));
      return "()";
    }
    std::string s = "(";
    for (std::size_t j = 0; j < t.children[static_cast<std::size_t>(v)].size(); ++j) {
      s += std::to_string(t.disp[static_cast<std::size_t>(v)][j]);
      s += walk(t.children[static_cast<std::size_t>(v)][j]);
    }
    s += ")";
    return s;
  };
  out.pruned = walk(0);
  out.subs = subs;  // DFS order; sort for the multiset key
  std::sort(out.subs.begin(), out.subs.end());
  return out;
}

// Rebuild encodings obtainable by grafting the multiset subs onto the leaf
// slots of the pruned encoding: choose an ordered DFS leaf subset and a
// distinct arrangement of the multiset.
std::set<std::string> tiny_graft_all(const std::string& pruned, std::vector<std::string> subs) {
  // Grafting replaces a leaf's "()" by a sub encoding; every leaf is eligible.
  std::string base = pruned;
  // Find leaf positions "()" in base.
  std::vector<std::size_t> leafPos;
  for (std::size_t i = 0; i + 1 < base.size(); ++i)
    if (base[i] == '(' && base[i + 1] == ')') leafPos.push_back(i);
  std::sort(subs.begin(), subs.end());
  std::set<std::string> results;
  std::size_t m = subs.size();
  if (m == 0) {
    results.insert(base);
    return results;
  }
  if (leafPos.size() < m) return results;
  // Ordered leaf subsets in DFS order x distinct multiset arrangements.
  std::vector<std::size_t> idx(m);
  std::function<void(std::size_t, std::size_t)> chooseLeaves = [&](std::size_t pos,
                                                                   std::size_t from) {
    if (pos == m) {
      std::vector<std::string> arr = subs;
      std::sort(arr.begin(), arr.end());
      do {
        std::string s = base;
        // Replace from the rightmost leaf to keep earlier positions valid.
        for (std::size_t j = m; j-- > 0;) {
          std::size_t p = leafPos[idx[j]];
          s = s.substr(0, p) + arr[j] + s.substr(p + 2);
        }
        results.insert(s);
      } while (std::next_permutation(arr.begin(), arr.end()));
      return;
    }
    for (std::size_t i = from; i < leafPos.size(); ++i) {
      idx[pos] = i;
      chooseLeaves(pos + 1, i + 1);
    }
  };
  chooseLeaves(0, 0);
  return results;
}

// The fixed tiny instance shared by the exact and the sampled prune/graft
// checks: binary offspring, displacement values +-0.5 with mass 2/5 each and
// +-2.0 with mass 1/10 each; threshold 1 makes the cut nontrivial.
const std::vector<double> kTinyValues = {0.5, -0.5, 2.0, -2.0};
const double kTinyTau = 1.0;
const std::int64_t kTinyN = 7;

struct TinyConfig {
  std::string full;
  TinyCut cut;
  Rat weight;
};

std::string tiny_cut_key(const TinyCut& cut) {
  std::string key = cut.pruned + "|";
  for (const auto& s : cut.subs) key += s + ";";
  return key;
}

// Every (shape, displacement) configuration of the instance with its exact
// probability; weights sum to 1 over the conditioned tree law.
std::vector<TinyConfig> tiny_all_configs() {
  // Shape weights are equal across binary shapes of fixed size, so the
  // conditional law given the cut output is driven by counting; keep the
  // rational weights anyway to verify equality exactly.
  const std::vector<Rat> valueMass = {Rat(2, 5), Rat(2, 5), Rat(1, 10), Rat(1, 10)};
  std::vector<Rat> pmf = {Rat(1, 2), Rat(0), Rat(1, 2)};

  std::vector<TinyConfig> configs;
  std::vector<std::int32_t> c;
  std::function<void(const std::vector<std::int32_t>&, Rat)> fn =
      [&](const std::vector<std::int32_t>& deg, Rat w) {
        TinyTree t;
        tiny_from_preorder(deg, t);
        // Assign displacement value indexes to the n-1 edges.
        std::vector<std::pair<int, int>> slots;  // (vertex, child index)
        for (int v = 0; v < static_cast<int>(kTinyN); ++v) {
          t.disp[static_cast<std::size_t>(v)].assign(
              t.children[static_cast<std::size_t>(v)].size(), 0);
          for (std::size_t j = 0; j < t.children[static_cast<std::size_t>(v)].size(); ++j)
            slots.emplace_back(v, static_cast<int>(j));
        }
        std::function<void(std::size_t, Rat)> assign = [&](std::size_t e, Rat dw) {
          if (e == slots.size()) {
            configs.push_back({encode_tiny(t, 0), tiny_extract(t, kTinyValues, kTinyTau), dw});
            return;
          }
          for (int idx = 0; idx < 4; ++idx) {
            t.disp[static_cast<std::size_t>(slots[e].first)][static_cast<std::size_t>(
                slots[e].second)] = idx;
            assign(e + 1, dw * valueMass[static_cast<std::size_t>(idx)]);
          }
        };
        assign(0, w);
      };
  enumerate_trees(pmf, kTinyN, c, Rat(1), 0, fn);
  return configs;
}

// The richest nontrivial cut group, chosen deterministically (most
// reconstructions, ties broken by key order).
std::string tiny_richest_cut(const std::map<std::string, std::map<std::string, Rat>>& byCut,
                             const std::map<std::string, TinyCut>& cutParts) {
  std::string target;
  std::size_t best = 0;
  for (const auto& [key, group] : byCut) {
    if (cutParts.at(key).subs.empty()) continue;
    if (group.size() > best || (group.size() == best && key < target)) {
      best = group.size();
      target = key;
    }
  }
  return best < 2 ? std::string() : target;
}

}  // namespace

ExactLawReport check_prune_graft() {
  ExactLawReport rep;
  rep.lawName = "prune_graft";
  rep.exact = true;

  const std::vector<double>& values = kTinyValues;
  const auto configs = tiny_all_configs();

  // Group by cut output.
  std::map<std::string, std::map<std::string, Rat>> byCut;
  std::map<std::string, TinyCut> cutParts;
  for (const auto& cfg : configs) {
    std::string key = tiny_cut_key(cfg.cut);
    byCut[key][cfg.full] += cfg.weight;
    cutParts[key] = cfg.cut;
  }

  std::string target = tiny_richest_cut(byCut, cutParts);
  std::size_t best = target.empty() ? 0 : byCut[target].size();
  if (best < 2) {
    rep.pass = false;
    rep.detail = "no nontrivial cut group found";
    return rep;
  }

  const auto& group = byCut[target];
  auto expected = tiny_graft_all(cutParts[target].pruned, cutParts[target].subs);

  // (a) reconstruction sets agree; (b) conditional weights are equal.
  bool setsAgree = expected.size() == group.size();
  for (const auto& [enc, w] : group)
    if (!expected.count(enc)) setsAgree = false;
  Rat first = group.begin()->second;
  bool uniform = true;
  for (const auto& [enc, w] : group) {
    rep.support.push_back(enc);
    rep.computedProbabilities.push_back((w / (first * Rat(static_cast<std::int64_t>(group.size())))).to_double());
    rep.formulaProbabilities.push_back(1.0 / static_cast<double>(group.size()));
    if (w != first) uniform = false;
  }

  // (c) every configuration reappears among the grafts of its own cut output.
  bool roundTripOk = true;
  for (const auto& cfg : configs) {
    auto set = tiny_graft_all(cfg.cut.pruned, cfg.cut.subs);
    if (!set.count(cfg.full)) {
      roundTripOk = false;
      break;
    }
  }

  // (d) tau larger than everything: extraction is the identity.
  bool identityOk = true;
  {
    TinyTree t;
    tiny_from_preorder({2, 2, 0, 0, 2, 0, 0}, t);
    t.disp[0] = {2, 3};
    t.disp[1] = {0, 1};
    t.disp[4] = {1, 0};
    TinyCut wide = tiny_extract(t, values, 10.0);
    if (!wide.subs.empty() || wide.pruned != encode_tiny(t, 0)) identityOk = false;
  }

  finalize(rep, 0.0);
  rep.pass = rep.pass && setsAgree && uniform && roundTripOk && identityOk;
  rep.detail = "target cut " + target + "; " + std::to_string(group.size()) +
               " reconstructions, expected " + std::to_string(expected.size());
  return rep;
}

ExactLawReport sample_prune_graft(std::int64_t reps, std::uint64_t seed) {
  if (reps < 1) throw std::invalid_argument("sample_prune_graft: reps >= 1 required");
  ExactLawReport rep;
  rep.lawName = "prune_graft_sampled";
  rep.exact = false;

  const auto configs = tiny_all_configs();
  std::map<std::string, std::map<std::string, Rat>> byCut;
  std::map<std::string, TinyCut> cutParts;
  for (const auto& cfg : configs) {
    std::string key = tiny_cut_key(cfg.cut);
    byCut[key][cfg.full] += cfg.weight;
    cutParts[key] = cfg.cut;
  }
  const std::string target = tiny_richest_cut(byCut, cutParts);
  if (target.empty()) {
    rep.pass = false;
    rep.detail = "no nontrivial cut group found";
    return rep;
  }
  const auto& group = byCut[target];
  const std::size_t m = group.size();
  std::map<std::string, std::size_t> rowOf;
  for (const auto& [enc, w] : group) {
    rowOf.emplace(enc, rowOf.size());
    rep.support.push_back(enc);
  }

  // Inverse-cdf sampling over the full configuration law; only draws whose
  // cut output hits the target group feed the conditional counts.
  std::vector<double> cum(configs.size());
  std::vector<std::int64_t> row(configs.size(), -1);
  double acc = 0.0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    acc += configs[i].weight.to_double();
    cum[i] = acc;
    if (tiny_cut_key(configs[i].cut) == target)
      row[i] = static_cast<std::int64_t>(rowOf.at(configs[i].full));
  }

  Rng rng(seed, 701);
  std::vector<std::int64_t> counts(m, 0);
  std::int64_t inGroup = 0;
  for (std::int64_t r = 0; r < reps; ++r) {
    const double u = rng.uniform01() * acc;
    const std::size_t i = static_cast<std::size_t>(
        std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
    const std::int64_t k = row[std::min(i, configs.size() - 1)];
    if (k >= 0) {
      ++counts[static_cast<std::size_t>(k)];
      ++inGroup;
    }
  }

  const std::vector<double> uniformProbs(m, 1.0 / static_cast<double>(m));
  double maxDiff = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double freq = inGroup ? static_cast<double>(counts[k]) / static_cast<double>(inGroup) : 0.0;
    rep.computedProbabilities.push_back(freq);
    rep.formulaProbabilities.push_back(uniformProbs[k]);
    maxDiff = std::max(maxDiff, std::fabs(freq - uniformProbs[k]));
  }
  rep.maxAbsDiff = maxDiff;

  if (inGroup == 0) {
    rep.pass = false;
    rep.detail = "no draw reached the target cut group";
    return rep;
  }
  const auto c2 = chi_square_gof(counts, uniformProbs);
  rep.pass = c2.pValue >= 1e-3;
  std::ostringstream os;
  os << "target cut " << target << "; " << m << " reconstructions, " << inGroup << "/" << reps
     << " conditioned draws, chi2=" << c2.statistic << " dof=" << c2.dof << " p=" << c2.pValue;
  rep.detail = os.str();
  return rep;
}

AncestralBoundResult check_ancestral_bound(const DegreeSequence& d,
                                           std::span<const std::int32_t> marked, std::int32_t b,
                                           std::int64_t reps, std::uint64_t seed) {
  AncestralBoundResult out;
  const std::int64_t n = d.n();
  std::int64_t delta = 0;
  for (std::int32_t v = 1; v <= n; ++v) delta = std::max<std::int64_t>(delta, d.of(v));
  const std::int64_t K = static_cast<std::int64_t>(marked.size());
  if (n - 1 - static_cast<std::int64_t>(b) * delta <= 0) {
    out.applicable = false;
    return out;
  }
  out.bound = static_cast<double>(K) *
              (1.0 - std::pow(1.0 - static_cast<double>(K * delta) /
                                        static_cast<double>(n - 1 - b * delta),
                              static_cast<double>(b)));

  Rng rng(seed, 700);
  std::int64_t hits = 0;
  std::vector<std::int32_t> depth(static_cast<std::size_t>(n) + 1);
  for (std::int64_t rep = 0; rep < reps; ++rep) {
    auto pi = uniform_edge_perm(d, rng);
    auto t = build_tree(pi);
    for (std::int32_t v = 1; v <= n; ++v) {
      if (v == t.root()) {
        depth[static_cast<std::size_t>(v)] = 0;
        continue;
      }
      depth[static_cast<std::size_t>(v)] = -1;
    }
    for (std::int32_t v : t.preorder()) {
      if (v == t.root()) continue;
      depth[static_cast<std::size_t>(v)] = depth[static_cast<std::size_t>(t.parent(v))] + 1;
    }
    bool hit = false;
    for (std::size_t a = 0; a < marked.size() && !hit; ++a) {
      for (std::size_t c2 = 0; c2 < marked.size() && !hit; ++c2) {
        if (a == c2) continue;
        std::int32_t u = marked[a], w = marked[c2];
        if (depth[static_cast<std::size_t>(u)] >= depth[static_cast<std::size_t>(w)]) continue;
        std::int32_t dist = 0;
        std::int32_t x = w;
        while (depth[static_cast<std::size_t>(x)] > depth[static_cast<std::size_t>(u)]) {
          x = t.parent(x);
          ++dist;
        }
        if (x == u && dist <= b && dist > 0) hit = true;
      }
    }
    hits += hit;
  }
  out.empirical = static_cast<double>(hits) / static_cast<double>(reps);
  out.stderr_ = std::sqrt(out.empirical * (1.0 - out.empirical) / static_cast<double>(reps));
  out.pass = out.empirical <= out.bound + 3.0 * out.stderr_;
  return out;
}

}  // namespace snakelab
