#include "snakelab/offspring.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace snakelab {

namespace {
constexpr double kTailCut = 1e-15;
}

OffspringLaw::OffspringLaw(
    LawKind kind, std::vector<double> pmf,
    std::optional<std::vector<std::pair<std::int64_t, std::int64_t>>> rational)
    : kind_(kind), pmf_(std::move(pmf)), rational_(std::move(rational)) {
  while (!pmf_.empty() && pmf_.back() == 0.0) pmf_.pop_back();
  double tot = 0;
  for (double p : pmf_) {
    if (p < 0 || !std::isfinite(p)) throw std::invalid_argument("offspring: bad pmf entry");
    tot += p;
  }
  if (std::abs(tot - 1.0) > 1e-12) throw std::invalid_argument("offspring: pmf does not sum to 1");
  for (std::size_t k = 0; k < pmf_.size(); ++k) {
    const double p = pmf_[k];
    mean_ += double(k) * p;
    m2_ += double(k) * double(k) * p;
    m3_ += double(k) * double(k) * double(k) * p;
    if (k % 2 == 1) podd_ += p;
  }
  sigma2_ = m2_ - mean_ * mean_;
  gcd_ = 0;
  for (std::size_t k = 1; k < pmf_.size(); ++k)
    if (pmf_[k] > 0) gcd_ = std::gcd(gcd_, std::int64_t(k));
  if (gcd_ == 0) gcd_ = 1;
  sb_pmf_.assign(pmf_.size(), 0.0);
  for (std::size_t k = 1; k < pmf_.size(); ++k) sb_pmf_[k] = double(k) * pmf_[k];
  validate();
}

void OffspringLaw::validate() const {
  if (pmf_.empty() || pmf_[0] <= 0.0) throw std::invalid_argument("offspring: needs mu_0 > 0");
  const double mu1 = pmf_.size() > 1 ? pmf_[1] : 0.0;
  if (pmf_[0] + mu1 >= 1.0 - 1e-15)
    throw std::invalid_argument("offspring: needs mu_0 + mu_1 < 1");
  if (std::abs(mean_ - 1.0) > 1e-9) throw std::invalid_argument("offspring: law not critical");
  if (!(sigma2_ > 0.0) || !std::isfinite(sigma2_))
    throw std::invalid_argument("offspring: variance must be positive and finite");
}

OffspringLaw OffspringLaw::poisson1() {
  std::vector<double> pmf;
  double p = std::exp(-1.0);
  double cum = 0.0;
  for (std::int64_t k = 0; cum < 1.0 - kTailCut; ++k) {
    if (k > 0) p /= double(k);
    pmf.push_back(p);
    cum += p;
  }
  // Renormalize the dropped tail so downstream exactness checks see a pmf.
  for (auto& q : pmf) q /= cum;
  return OffspringLaw(LawKind::poisson1, std::move(pmf), std::nullopt);
}

OffspringLaw OffspringLaw::geometric_half() {
  std::vector<double> pmf;
  double p = 0.5;
  double cum = 0.0;
  while (cum < 1.0 - kTailCut) {
    pmf.push_back(p);
    cum += p;
    p *= 0.5;
  }
  for (auto& q : pmf) q /= cum;
  return OffspringLaw(LawKind::geometric_half, std::move(pmf), std::nullopt);
}

OffspringLaw OffspringLaw::binary() {
  return OffspringLaw(LawKind::binary, {0.5, 0.0, 0.5},
                      std::vector<std::pair<std::int64_t, std::int64_t>>{{1, 2}, {0, 1}, {1, 2}});
}

OffspringLaw OffspringLaw::custom(std::vector<double> pmf) {
  return OffspringLaw(LawKind::custom, std::move(pmf), std::nullopt);
}

OffspringLaw OffspringLaw::custom_from_csv(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot open pmf csv: " + path);
  std::vector<double> pmf;
  char line[256];
  while (std::fgets(line, sizeof line, f)) {
    long long k = -1;
    double p = 0.0;
    if (std::sscanf(line, "%lld,%lf", &k, &p) != 2) continue;  // skips header
    if (k < 0) {
      std::fclose(f);
      throw std::runtime_error("pmf csv: negative k");
    }
    if (std::size_t(k) >= pmf.size()) pmf.resize(std::size_t(k) + 1, 0.0);
    pmf[std::size_t(k)] = p;
  }
  std::fclose(f);
  if (pmf.empty()) throw std::runtime_error("pmf csv: no rows parsed");
  return custom(std::move(pmf));
}

OffspringLaw OffspringLaw::by_name(const std::string& name) {
  if (name == "poisson1") return poisson1();
  if (name == "geometric_half") return geometric_half();
  if (name == "binary") return binary();
  throw std::invalid_argument("unknown offspring law: " + name);
}

std::string OffspringLaw::name() const {
  switch (kind_) {
    case LawKind::poisson1: return "poisson1";
    case LawKind::geometric_half: return "geometric_half";
    case LawKind::binary: return "binary";
    case LawKind::custom: return "custom";
  }
  return "?";
}

}  // namespace snakelab
