#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace snakelab {

enum class LawKind { poisson1, geometric_half, binary, custom };

// Critical offspring distribution mu on {0,1,2,...}: mean 1, variance in
// (0,inf), mu_0 > 0, mu_0 + mu_1 < 1. Infinite-support builtins are stored
// truncated so the neglected tail mass is below 1e-15; moments refer to the
// stored pmf.
class OffspringLaw {
 public:
  static OffspringLaw poisson1();
  static OffspringLaw geometric_half();
  static OffspringLaw binary();  // mu_0 = mu_2 = 1/2
  static OffspringLaw custom(std::vector<double> pmf);
  // Two-column CSV (k,probability), header optional.
  static OffspringLaw custom_from_csv(const std::string& path);
  static OffspringLaw by_name(const std::string& name);  // poisson1|geometric_half|binary

  LawKind kind() const { return kind_; }
  std::string name() const;

  const std::vector<double>& pmf() const { return pmf_; }
  double mass(std::int64_t k) const {
    return (k >= 0 && k < std::int64_t(pmf_.size())) ? pmf_[std::size_t(k)] : 0.0;
  }
  std::int64_t max_k() const { return std::int64_t(pmf_.size()) - 1; }

  // k mu_k for k >= 1 at index k; total mass = mean = 1.
  const std::vector<double>& size_biased_pmf() const { return sb_pmf_; }

  double mean() const { return mean_; }
  double m2() const { return m2_; }  // E[xi^2]
  double m3() const { return m3_; }  // E[xi^3]
  double sigma2() const { return sigma2_; }
  double p_odd() const { return podd_; }
  std::int64_t gcd_support() const { return gcd_; }

  // Necessary lattice condition for P(|T| = n) > 0.
  bool admits_size(std::int64_t n) const { return n >= 1 && ((n - 1) % gcd_) == 0; }

  // Exact pmf as fractions, set when the law is rational (binary, or custom
  // built from fractions); used by the exact-law oracles.
  const std::optional<std::vector<std::pair<std::int64_t, std::int64_t>>>& rational_pmf() const {
    return rational_;
  }

 private:
  OffspringLaw(LawKind kind, std::vector<double> pmf,
               std::optional<std::vector<std::pair<std::int64_t, std::int64_t>>> rational);
  void validate() const;

  LawKind kind_;
  std::vector<double> pmf_;
  std::vector<double> sb_pmf_;
  std::optional<std::vector<std::pair<std::int64_t, std::int64_t>>> rational_;
  double mean_ = 0, m2_ = 0, m3_ = 0, sigma2_ = 0, podd_ = 0;
  std::int64_t gcd_ = 1;
};

}  // namespace snakelab
