#include "snakelab/continuum.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace snakelab {

namespace {

// Lazily evaluated standard Brownian motion: new points past the frontier use
// a Gaussian increment, interior points the bridge between their neighbours.
class BrownianPath {
 public:
  BrownianPath() { vals_[0.0] = 0.0; }

  double at(double t, Rng& rng) {
    auto it = vals_.find(t);
    if (it != vals_.end()) return it->second;
    auto hi = vals_.upper_bound(t);
    auto lo = std::prev(hi);
    double v;
    if (hi == vals_.end()) {
      v = lo->second + std::sqrt(t - lo->first) * rng.normal();
    } else {
      double span = hi->first - lo->first;
      double frac = (t - lo->first) / span;
      double mean = lo->second + frac * (hi->second - lo->second);
      double var = (t - lo->first) * (hi->first - t) / span;
      v = mean + std::sqrt(std::max(var, 0.0)) * rng.normal();
    }
    vals_[t] = v;
    return v;
  }

 private:
  std::map<double, double> vals_;
};

// 1-based segment holding t, with segments ([0,J_1], (J_1,J_2], ...).
int segment_of(const std::vector<double>& J, double t) {
  auto it = std::lower_bound(J.begin(), J.end(), t);
  if (it == J.end()) throw std::logic_error("segment_of: point beyond the last jump time");
  return int(it - J.begin()) + 1;
}

}  // namespace

std::vector<double> sample_jump_times(int k, Rng& rng) {
  if (k < 1) throw std::invalid_argument("sample_jump_times: k >= 1 required");
  std::vector<double> J(static_cast<std::size_t>(k));
  double acc = 0.0;
  for (int m = 0; m < k; ++m) {
    acc += rng.exponential();
    J[static_cast<std::size_t>(m)] = std::sqrt(2.0 * acc);
  }
  return J;
}

std::vector<int> planar_leaf_order(const std::vector<double>& J, const std::vector<double>& A,
                                   const std::vector<int>& sides) {
  const int k = int(J.size());
  if (A.size() + 1 != J.size() || sides.size() != A.size())
    throw std::invalid_argument("planar_leaf_order: size mismatch");
  struct Att {
    double pos;
    int child;
  };
  std::vector<std::vector<Att>> left(static_cast<std::size_t>(k) + 1), right(static_cast<std::size_t>(k) + 1);
  for (int j = 0; j < k - 1; ++j) {
    int seg = segment_of(J, A[static_cast<std::size_t>(j)]);
    auto& dst = sides[static_cast<std::size_t>(j)] == 0 ? left : right;
    dst[static_cast<std::size_t>(seg)].push_back({A[static_cast<std::size_t>(j)], j + 2});
  }
  for (int m = 1; m <= k; ++m) {
    std::sort(left[static_cast<std::size_t>(m)].begin(), left[static_cast<std::size_t>(m)].end(),
              [](const Att& a, const Att& b) { return a.pos < b.pos; });
    std::sort(right[static_cast<std::size_t>(m)].begin(), right[static_cast<std::size_t>(m)].end(),
              [](const Att& a, const Att& b) { return a.pos > b.pos; });
  }
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(k));
  std::function<void(int)> explore = [&](int m) {
    for (const auto& a : left[static_cast<std::size_t>(m)]) explore(a.child);
    out.push_back(m);
    for (const auto& a : right[static_cast<std::size_t>(m)]) explore(a.child);
  };
  explore(1);
  return out;
}

ContinuumTree build_continuum_tree(int k, Rng& rng) {
  if (k < 1) throw std::invalid_argument("build_continuum_tree: k >= 1 required");
  ContinuumTree t;
  t.k = k;
  t.J = sample_jump_times(k, rng);
  t.A.resize(static_cast<std::size_t>(k) - 1);
  t.sides.resize(static_cast<std::size_t>(k) - 1);
  for (int m = 0; m < k - 1; ++m) {
    t.A[static_cast<std::size_t>(m)] = t.J[static_cast<std::size_t>(m)] * rng.uniform01();
    t.sides[static_cast<std::size_t>(m)] = rng.bernoulli(0.5) ? 0 : 1;
  }

  BrownianPath B;
  std::vector<double> BJ(static_cast<std::size_t>(k)), BA(static_cast<std::size_t>(k) - 1);
  for (int m = 0; m < k; ++m) BJ[static_cast<std::size_t>(m)] = B.at(t.J[static_cast<std::size_t>(m)], rng);
  for (int m = 0; m < k - 1; ++m) BA[static_cast<std::size_t>(m)] = B.at(t.A[static_cast<std::size_t>(m)], rng);

  // Height and label at a point of segment m are offsets from the attachment
  // point A_{m-1}; attachment m lies in a segment of index <= m, so filling
  // hAttach/lAttach in index order only reads finished entries.
  t.hAttach.resize(static_cast<std::size_t>(k) - 1);
  t.lAttach.resize(static_cast<std::size_t>(k) - 1);
  for (int j = 0; j < k - 1; ++j) {
    int seg = segment_of(t.J, t.A[static_cast<std::size_t>(j)]);
    if (seg == 1) {
      t.hAttach[static_cast<std::size_t>(j)] = t.A[static_cast<std::size_t>(j)];
      t.lAttach[static_cast<std::size_t>(j)] = BA[static_cast<std::size_t>(j)];
    } else {
      t.hAttach[static_cast<std::size_t>(j)] =
          t.hAttach[static_cast<std::size_t>(seg) - 2] + t.A[static_cast<std::size_t>(j)] - t.J[static_cast<std::size_t>(seg) - 2];
      t.lAttach[static_cast<std::size_t>(j)] =
          t.lAttach[static_cast<std::size_t>(seg) - 2] + BA[static_cast<std::size_t>(j)] - BJ[static_cast<std::size_t>(seg) - 2];
    }
  }
  t.h.resize(static_cast<std::size_t>(k));
  t.l.resize(static_cast<std::size_t>(k));
  t.h[0] = t.J[0];
  t.l[0] = BJ[0];
  for (int m = 2; m <= k; ++m) {
    t.h[static_cast<std::size_t>(m) - 1] =
        t.hAttach[static_cast<std::size_t>(m) - 2] + t.J[static_cast<std::size_t>(m) - 1] - t.J[static_cast<std::size_t>(m) - 2];
    t.l[static_cast<std::size_t>(m) - 1] =
        t.lAttach[static_cast<std::size_t>(m) - 2] + BJ[static_cast<std::size_t>(m) - 1] - BJ[static_cast<std::size_t>(m) - 2];
  }
  t.tau = planar_leaf_order(t.J, t.A, t.sides);
  return t;
}

std::vector<std::pair<double, double>> bsbe_rfdds(int k, Rng& rng) {
  ContinuumTree t = build_continuum_tree(k, rng);
  std::vector<std::pair<double, double>> out(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    int leaf = t.tau[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = {t.h[static_cast<std::size_t>(leaf) - 1], t.l[static_cast<std::size_t>(leaf) - 1]};
  }
  return out;
}

PiMeasureSpec PiMeasureSpec::axes(double aPlus, double aMinus, double q) {
  if (aPlus < 0 || aMinus < 0) throw std::invalid_argument("axes: negative mass");
  if (!(q > 2.0 && q <= 4.0)) throw std::invalid_argument("axes: need q in (2,4]");
  PiMeasureSpec s;
  s.kind = Kind::axes;
  s.aPlus = aPlus;
  s.aMinus = aMinus;
  s.q = q;
  return s;
}

PiMeasureSpec PiMeasureSpec::ray(double c, double rho, double q) {
  if (c < 0 || rho < 0) throw std::invalid_argument("ray: negative parameter");
  if (!(q > 2.0 && q <= 4.0)) throw std::invalid_argument("ray: need q in (2,4]");
  PiMeasureSpec s;
  s.kind = Kind::ray;
  s.c = c;
  s.rho = rho;
  s.q = q;
  return s;
}

double PiMeasureSpec::mass_above(double gamma) const {
  double coef = kind == Kind::axes ? aPlus + aMinus : c / q;
  if (coef == 0.0) return 0.0;
  if (gamma <= 0.0) throw std::domain_error("mass_above: infinite mass at gamma <= 0");
  double cut = kind == Kind::axes ? gamma : gamma / std::max(1.0, rho);
  return coef * std::pow(cut, -q);
}

std::pair<double, double> PiMeasureSpec::sample_above(double gamma, Rng& rng) const {
  if (mass_above(gamma) == 0.0) throw std::domain_error("sample_above: no mass");
  double u = rng.uniform_pos();
  if (kind == Kind::axes) {
    bool onX = rng.uniform01() * (aPlus + aMinus) < aPlus;
    double v = gamma * std::pow(u, -1.0 / q);
    return onX ? std::pair<double, double>{v, 0.0} : std::pair<double, double>{0.0, v};
  }
  double x = gamma / std::max(1.0, rho) * std::pow(u, -1.0 / q);
  return {x, rho * x};
}

double PiMeasureSpec::max_coord_sf(double s, double gamma) const {
  if (s <= gamma) return 1.0;
  return mass_above(s) / mass_above(gamma);
}

std::vector<Hair> sample_hairy_ppp(const PiMeasureSpec& spec, double gamma, Rng& rng) {
  double mean = spec.mass_above(gamma);
  std::int64_t n = mean == 0.0 ? 0 : rng.poisson(mean);
  std::vector<Hair> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    double t = rng.uniform01();
    auto [x, y] = spec.sample_above(gamma, rng);
    out.push_back({t, x, y});
  }
  return out;
}

double HairySet::base_at(double t) const {
  if (t <= ts.front()) return fs.front();
  if (t >= ts.back()) return fs.back();
  auto it = std::upper_bound(ts.begin(), ts.end(), t);
  std::size_t i = static_cast<std::size_t>(it - ts.begin());
  double frac = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
  return fs[i - 1] + frac * (fs[i] - fs[i - 1]);
}

std::vector<std::pair<double, double>> HairySet::points() const {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) pts.emplace_back(ts[i], fs[i]);
  for (const auto& h : hairs) {
    double base = base_at(h.t);
    double lo = base - h.y, hi = base + h.x;
    int steps = std::max(1, int(std::ceil((hi - lo) / eps)));
    for (int j = 0; j <= steps; ++j)
      pts.emplace_back(h.t, lo + (hi - lo) * double(j) / double(steps));
  }
  return pts;
}

std::string HairySet::to_csv() const {
  std::ostringstream os;
  os << "t,lo,hi\n";
  os.precision(17);
  for (std::size_t i = 0; i < ts.size(); ++i) os << ts[i] << ',' << fs[i] << ',' << fs[i] << '\n';
  for (const auto& h : hairs) {
    double base = base_at(h.t);
    os << h.t << ',' << base - h.y << ',' << base + h.x << '\n';
  }
  return os.str();
}

HairySet hairy_union(std::vector<double> ts, std::vector<double> fs, std::vector<Hair> hairs,
                     double eps) {
  if (ts.empty() || ts.size() != fs.size())
    throw std::invalid_argument("hairy_union: grid sizes mismatch or empty");
  for (std::size_t i = 1; i < ts.size(); ++i)
    if (!(ts[i] > ts[i - 1])) throw std::invalid_argument("hairy_union: grid not increasing");
  if (!(eps > 0.0)) throw std::invalid_argument("hairy_union: eps must be positive");
  HairySet s;
  s.ts = std::move(ts);
  s.fs = std::move(fs);
  s.hairs = std::move(hairs);
  s.eps = eps;
  return s;
}

namespace {

double directed_hausdorff(const std::vector<std::pair<double, double>>& from,
                          std::vector<std::pair<double, double>> to) {
  std::sort(to.begin(), to.end());
  double worst2 = 0.0;
  for (const auto& p : from) {
    auto it = std::lower_bound(to.begin(), to.end(), std::pair<double, double>{p.first, -1e300});
    double best2 = 1e300;
    auto consider = [&](const std::pair<double, double>& q) {
      double dx = p.first - q.first, dy = p.second - q.second;
      best2 = std::min(best2, dx * dx + dy * dy);
    };
    // Scan outward; the x-gap alone eventually dominates the best distance.
    for (auto r = it; r != to.end(); ++r) {
      double dx = r->first - p.first;
      if (dx * dx > best2) break;
      consider(*r);
    }
    for (auto r = it; r != to.begin();) {
      --r;
      double dx = p.first - r->first;
      if (dx * dx > best2) break;
      consider(*r);
    }
    worst2 = std::max(worst2, best2);
  }
  return std::sqrt(worst2);
}

}  // namespace

double hausdorff_distance(const std::vector<std::pair<double, double>>& a,
                          const std::vector<std::pair<double, double>>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("hausdorff_distance: empty set");
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

}  // namespace snakelab
