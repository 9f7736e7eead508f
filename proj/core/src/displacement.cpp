#include "snakelab/displacement.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace snakelab {

namespace {

void check_tail(const IidLaw& law) {
  if (!law.has_tail()) return;
  if (law.q <= 0.0 || law.y0 <= 0.0 || law.aPlus < 0.0 || law.aMinus < 0.0)
    throw std::invalid_argument("iid law: bad tail parameters");
  if (law.tail_mass() >= 1.0) throw std::invalid_argument("iid law: tail mass >= 1");
}

}  // namespace

double IidLaw::sample(Rng& rng) const {
  double u = rng.uniform01();
  if (has_tail()) {
    double pPlus = aPlus * std::pow(y0, -q);
    double pMinus = aMinus * std::pow(y0, -q);
    if (u < pPlus) return y0 * std::pow(rng.uniform_pos(), -1.0 / q);
    u -= pPlus;
    if (u < pMinus) return -y0 * std::pow(rng.uniform_pos(), -1.0 / q);
    u -= pMinus;
  }
  for (const auto& [v, p] : atoms) {
    if (u < p) return v;
    u -= p;
  }
  return atoms.empty() ? 0.0 : atoms.back().first;
}

double IidLaw::mean() const {
  double s = 0.0;
  for (const auto& [v, p] : atoms) s += v * p;
  if (has_tail()) {
    if (q <= 1.0) throw std::domain_error("iid law: tail mean diverges");
    s += q / (q - 1.0) * std::pow(y0, 1.0 - q) * (aPlus - aMinus);
  }
  return s;
}

double IidLaw::m2() const {
  double s = 0.0;
  for (const auto& [v, p] : atoms) s += v * v * p;
  if (has_tail()) {
    if (q <= 2.0) throw std::domain_error("iid law: second moment diverges");
    s += q / (q - 2.0) * std::pow(y0, 2.0 - q) * (aPlus + aMinus);
  }
  return s;
}

double IidLaw::mean_trunc(double tau) const {
  double s = 0.0;
  for (const auto& [v, p] : atoms)
    if (std::abs(v) <= tau) s += v * p;
  if (has_tail() && tau > y0)
    s += q / (q - 1.0) * (std::pow(y0, 1.0 - q) - std::pow(tau, 1.0 - q)) * (aPlus - aMinus);
  return s;
}

double IidLaw::m2_trunc(double tau) const {
  double s = 0.0;
  for (const auto& [v, p] : atoms)
    if (std::abs(v) <= tau) s += v * v * p;
  if (has_tail() && tau > y0) {
    double piece = (q == 2.0) ? q * (std::log(tau) - std::log(y0))
                              : q / (q - 2.0) * (std::pow(y0, 2.0 - q) - std::pow(tau, 2.0 - q));
    s += piece * (aPlus + aMinus);
  }
  return s;
}

double IidLaw::cdf_abs(double tau) const {
  if (tau < 0.0) return 0.0;
  double above = 0.0;
  for (const auto& [v, p] : atoms)
    if (std::abs(v) > tau) above += p;
  if (has_tail()) above += (aPlus + aMinus) * std::pow(std::max(tau, y0), -q);
  return std::max(0.0, 1.0 - above);
}

IidLaw IidLaw::heavy(double q, double aPlus, double aMinus, double y0) {
  IidLaw law;
  law.q = q;
  law.aPlus = aPlus;
  law.aMinus = aMinus;
  law.y0 = y0;
  check_tail(law);
  if (q <= 1.0) throw std::invalid_argument("iid law: need q > 1 to center");
  double atomMass = 1.0 - law.tail_mass();
  double tailMean = q / (q - 1.0) * std::pow(y0, 1.0 - q) * (aPlus - aMinus);
  double b = y0 / 2.0;
  double wPlus = (atomMass - tailMean / b) / 2.0;
  double wMinus = (atomMass + tailMean / b) / 2.0;
  if (wPlus < 0.0 || wMinus < 0.0)
    throw std::invalid_argument("iid law: cannot center with atoms at +-y0/2");
  law.atoms = {{b, wPlus}, {-b, wMinus}};
  return law;
}

IidLaw IidLaw::two_atoms(double value) {
  IidLaw law;
  law.atoms = {{value, 0.5}, {-value, 0.5}};
  return law;
}

DisplacementModel DisplacementModel::deterministic_spread(double sigma) {
  if (sigma <= 0.0) throw std::invalid_argument("spread: sigma must be positive");
  DisplacementModel m;
  m.kind = DispKind::deterministic_spread;
  m.sigma = sigma;
  return m;
}

DisplacementModel DisplacementModel::looptree(double c) {
  DisplacementModel m;
  m.kind = DispKind::looptree;
  m.c = c;
  return m;
}

DisplacementModel DisplacementModel::iid_law(IidLaw law) {
  check_tail(law);
  DisplacementModel m;
  m.kind = DispKind::iid;
  m.iid = std::move(law);
  return m;
}

DisplacementModel DisplacementModel::exchangeable(
    std::function<void(std::int32_t, std::span<double>, Rng&)> fn) {
  DisplacementModel m;
  m.kind = DispKind::exchangeable_custom;
  m.custom = std::move(fn);
  return m;
}

void DisplacementModel::fill(std::int32_t k, std::span<double> out, Rng& rng) const {
  switch (kind) {
    case DispKind::iid:
      for (std::int32_t j = 0; j < k; ++j) out[static_cast<std::size_t>(j)] = iid.sample(rng);
      return;
    case DispKind::deterministic_spread:
      for (std::int32_t j = 1; j <= k; ++j)
        out[static_cast<std::size_t>(j - 1)] = sigma - (2.0 / sigma) * static_cast<double>(k - j);
      return;
    case DispKind::looptree:
      for (std::int32_t j = 1; j <= k; ++j)
        out[static_cast<std::size_t>(j - 1)] = c - static_cast<double>(std::min(j, k + 1 - j));
      return;
    case DispKind::exchangeable_custom:
      custom(k, out, rng);
      return;
  }
}

std::string DisplacementModel::name() const {
  switch (kind) {
    case DispKind::iid: return "iid";
    case DispKind::deterministic_spread: return "spread";
    case DispKind::looptree: return "looptree";
    case DispKind::exchangeable_custom: return "custom";
  }
  return "?";
}

std::vector<double> sample_displacements(const LabeledOrderedTree& t,
                                         const DisplacementModel& model, Rng& rng) {
  std::vector<double> disp(static_cast<std::size_t>(t.n() - 1));
  for (std::int32_t v = 1; v <= t.n(); ++v) {
    std::int32_t k = t.degree(v);
    if (k == 0) continue;
    model.fill(k, std::span<double>(disp.data() + t.edge_offset(v), static_cast<std::size_t>(k)),
               rng);
  }
  return disp;
}

namespace {

// Deterministic entry for the two closed-form models.
double det_entry(const DisplacementModel& m, std::int32_t k, std::int32_t j) {
  if (m.kind == DispKind::deterministic_spread)
    return m.sigma - (2.0 / m.sigma) * static_cast<double>(k - j);
  return m.c - static_cast<double>(std::min(j, k + 1 - j));
}

double det_supnorm(const DisplacementModel& m, std::int32_t k) {
  double s = 0.0;
  for (std::int32_t j = 1; j <= k; ++j) s = std::max(s, std::abs(det_entry(m, k, j)));
  return s;
}

}  // namespace

GlobalMoments global_moments(const DisplacementModel& m, const OffspringLaw& law) {
  if (m.kind == DispKind::iid) {
    double mu = m.iid.mean();
    return {mu, m.iid.m2() - mu * mu};
  }
  if (m.kind == DispKind::exchangeable_custom)
    throw std::invalid_argument("moments unavailable for custom displacement model");
  const auto& sb = law.size_biased_pmf();
  double mean = 0.0, m2 = 0.0;
  for (std::int32_t k = 1; k < static_cast<std::int32_t>(sb.size()); ++k) {
    if (sb[static_cast<std::size_t>(k)] == 0.0) continue;
    double s1 = 0.0, s2 = 0.0;
    for (std::int32_t j = 1; j <= k; ++j) {
      double y = det_entry(m, k, j);
      s1 += y;
      s2 += y * y;
    }
    mean += sb[static_cast<std::size_t>(k)] * s1 / k;
    m2 += sb[static_cast<std::size_t>(k)] * s2 / k;
  }
  return {mean, m2 - mean * mean};
}

GlobalMoments truncated_global_moments(const DisplacementModel& m, const OffspringLaw& law,
                                       double tau) {
  const auto& sb = law.size_biased_pmf();
  double mean = 0.0, m2 = 0.0;
  if (m.kind == DispKind::iid) {
    double m1t = m.iid.mean_trunc(tau), m2t = m.iid.m2_trunc(tau), keep = m.iid.cdf_abs(tau);
    for (std::int32_t k = 1; k < static_cast<std::int32_t>(sb.size()); ++k) {
      double gate = std::pow(keep, static_cast<double>(k - 1));
      mean += sb[static_cast<std::size_t>(k)] * m1t * gate;
      m2 += sb[static_cast<std::size_t>(k)] * m2t * gate;
    }
  } else if (m.kind == DispKind::exchangeable_custom) {
    throw std::invalid_argument("moments unavailable for custom displacement model");
  } else {
    for (std::int32_t k = 1; k < static_cast<std::int32_t>(sb.size()); ++k) {
      if (sb[static_cast<std::size_t>(k)] == 0.0 || det_supnorm(m, k) > tau) continue;
      double s1 = 0.0, s2 = 0.0;
      for (std::int32_t j = 1; j <= k; ++j) {
        double y = det_entry(m, k, j);
        s1 += y;
        s2 += y * y;
      }
      mean += sb[static_cast<std::size_t>(k)] * s1 / k;
      m2 += sb[static_cast<std::size_t>(k)] * s2 / k;
    }
  }
  return {mean, m2 - mean * mean};
}

double spread_beta2(const OffspringLaw& law, double sigma) {
  return 4.0 / (3.0 * sigma * sigma) * (law.m3() - 1.0) - (sigma * sigma + 2.0);
}

double looptree_cstar(const OffspringLaw& law) {
  return 0.25 * law.m2() + 0.5 + 0.25 * law.p_odd();
}

double looptree_beta2(const OffspringLaw& law, double c) {
  // E[Y^2] with Y_{k,j} = c - min(j, k+1-j) under size-biased k and uniform j,
  // via sum_j min = k^2/4 + k/2 + 1/4*odd(k) and
  //     sum_j min^2 = k^3/12 + k^2/4 + k/6 + (k/4 + 1/4)*odd(k).
  const auto& pmf = law.pmf();
  double oddTerm = 0.0;
  for (std::size_t k = 1; k < pmf.size(); k += 2)
    oddTerm += pmf[k] * (static_cast<double>(k) / 4.0 + 0.25 - c / 2.0);
  return c * c + law.m3() / 12.0 + (0.25 - c / 2.0) * law.m2() + 1.0 / 6.0 - c + oddTerm;
}

TruncationBands make_bands(std::int64_t n, double delta, double gamma, double eta) {
  if (eta < 0.0 || eta >= 2.0) throw std::invalid_argument("bands: eta must lie in [0,2)");
  double a = 1.0 / (4.0 - eta);
  TruncationBands b;
  b.tauTyp = std::pow(static_cast<double>(n), a - delta);
  b.tauLarge = gamma * std::pow(static_cast<double>(n), a);
  return b;
}

BandSplit split_bands(const LabeledOrderedTree& t, std::span<const double> disp,
                      const TruncationBands& bands) {
  std::size_t ne = static_cast<std::size_t>(t.n() - 1);
  if (disp.size() != ne) throw std::invalid_argument("split_bands: size mismatch");
  BandSplit out;
  out.typ.assign(ne, 0.0);
  out.mid.assign(ne, 0.0);
  out.large.assign(ne, 0.0);
  for (std::int32_t v = 1; v <= t.n(); ++v) {
    std::int32_t k = t.degree(v);
    if (k == 0) continue;
    std::size_t off = t.edge_offset(v);
    double sup = 0.0;
    for (std::int32_t j = 0; j < k; ++j) sup = std::max(sup, std::abs(disp[off + j]));
    auto& dst = sup <= bands.tauTyp ? out.typ : (sup <= bands.tauLarge ? out.mid : out.large);
    for (std::int32_t j = 0; j < k; ++j) dst[off + j] = disp[off + j];
  }
  return out;
}

std::vector<std::pair<double, double>> large_jump_ordering(const LabeledOrderedTree& t,
                                                           std::span<const double> disp,
                                                           double thresh) {
  struct Item {
    double plus, minus;
    std::int32_t v;
  };
  std::vector<Item> items;
  for (std::int32_t v = 1; v <= t.n(); ++v) {
    std::int32_t k = t.degree(v);
    if (k == 0) continue;
    std::size_t off = t.edge_offset(v);
    double plus = 0.0, minus = 0.0;
    for (std::int32_t j = 0; j < k; ++j) {
      plus = std::max(plus, disp[off + j]);
      minus = std::max(minus, -disp[off + j]);
    }
    if (std::max(plus, minus) > thresh) items.push_back({plus, minus, v});
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    double amax = std::max(a.plus, a.minus), bmax = std::max(b.plus, b.minus);
    if (amax != bmax) return amax > bmax;
    double amin = std::min(a.plus, a.minus), bmin = std::min(b.plus, b.minus);
    if (amin != bmin) return amin > bmin;
    return a.v < b.v;
  });
  std::vector<std::pair<double, double>> out;
  out.reserve(items.size());
  for (const auto& it : items) out.emplace_back(it.plus, it.minus);
  return out;
}

}  // namespace snakelab
