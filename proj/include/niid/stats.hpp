#pragma once

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

namespace niid {

struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
};

// Wilson score interval for a binomial proportion.
inline WilsonInterval wilson_interval(std::uint64_t successes,
                                      std::uint64_t trials,
                                      double z = 1.959964) {
  if (trials == 0) throw std::invalid_argument("wilson: trials must be >= 1");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return WilsonInterval{std::max(0.0, center - half),
                        std::min(1.0, center + half)};
}

// One-sided Wilson upper bound at 95% (z = 1.645): the acceptance gate
// for error rates, so flaky boundary runs fail loudly.
inline double wilson_upper_95(std::uint64_t successes, std::uint64_t trials) {
  return wilson_interval(successes, trials, 1.6448536).hi;
}

// Streaming mean / variance / fourth central moment (for the standard
// error of a sample-variance estimate).
class MomentAccumulator {
 public:
  void add(double x) {
    ++n_;
    sum_ += x;
    sum2_ += x * x;
    sum3_ += x * x * x;
    sum4_ += x * x * x * x;
  }

  std::uint64_t n() const { return n_; }
  double mean() const { return sum_ / static_cast<double>(n_); }

  double variance() const {  // population variance of the sample
    const double m = mean();
    return sum2_ / static_cast<double>(n_) - m * m;
  }

  double stderr_of_mean() const {
    return std::sqrt(variance() / static_cast<double>(n_));
  }

  // Asymptotic standard error of the sample variance,
  // sqrt((m4 - var^2) / n) with m4 the fourth central moment.
  double stderr_of_variance() const {
    const double m = mean();
    const double nd = static_cast<double>(n_);
    const double m2 = variance();
    const double m4 = sum4_ / nd - 4.0 * m * sum3_ / nd +
                      6.0 * m * m * sum2_ / nd - 3.0 * m * m * m * m;
    return std::sqrt(std::max(m4 - m2 * m2, 0.0) / nd);
  }

 private:
  std::uint64_t n_ = 0;
  double sum_ = 0.0, sum2_ = 0.0, sum3_ = 0.0, sum4_ = 0.0;
};

inline double chi_squared_pvalue(double statistic, double dof) {
  if (dof <= 0.0) return 1.0;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, statistic));
}

// Two-sample chi-squared homogeneity test over categorical observations
// (categories keyed by arbitrary ids). Cells expected under pooling get
// the usual (obs - exp)^2 / exp contribution; identical degenerate inputs
// give p = 1.
template <typename Key>
double two_sample_chi_squared_pvalue(const std::map<Key, std::uint64_t>& a,
                                     const std::map<Key, std::uint64_t>& b) {
  double na = 0.0, nb = 0.0;
  std::map<Key, std::pair<double, double>> cells;
  for (const auto& [key, count] : a) {
    cells[key].first += static_cast<double>(count);
    na += static_cast<double>(count);
  }
  for (const auto& [key, count] : b) {
    cells[key].second += static_cast<double>(count);
    nb += static_cast<double>(count);
  }
  if (na == 0.0 || nb == 0.0) {
    throw std::invalid_argument("two-sample test: empty sample");
  }
  double statistic = 0.0;
  std::size_t used_cells = 0;
  for (const auto& [key, counts] : cells) {
    const double total = counts.first + counts.second;
    if (total == 0.0) continue;
    ++used_cells;
    const double ea = total * na / (na + nb);
    const double eb = total * nb / (na + nb);
    statistic += (counts.first - ea) * (counts.first - ea) / ea +
                 (counts.second - eb) * (counts.second - eb) / eb;
  }
  if (used_cells < 2) return 1.0;  // one shared category: no separation
  return chi_squared_pvalue(statistic, static_cast<double>(used_cells - 1));
}

// Goodness-of-fit of observed counts against exact category probabilities.
inline double gof_chi_squared_pvalue(const std::vector<std::uint64_t>& counts,
                                     const std::vector<double>& probs) {
  if (counts.size() != probs.size()) {
    throw std::invalid_argument("gof: size mismatch");
  }
  double n = 0.0;
  for (std::uint64_t c : counts) n += static_cast<double>(c);
  double statistic = 0.0;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double expected = n * probs[i];
    if (expected == 0.0) {
      if (counts[i] != 0) return 0.0;  // mass observed where none exists
      continue;
    }
    ++cells;
    const double d = static_cast<double>(counts[i]) - expected;
    statistic += d * d / expected;
  }
  if (cells < 2) return 1.0;
  return chi_squared_pvalue(statistic, static_cast<double>(cells - 1));
}

// z-score of a difference of two Monte Carlo means; 0 when both sides are
// constant (no evidence of separation).
inline double mean_difference_zscore(const MomentAccumulator& a,
                                     const MomentAccumulator& b) {
  const double se2 = a.variance() / static_cast<double>(a.n()) +
                     b.variance() / static_cast<double>(b.n());
  if (se2 == 0.0) return 0.0;
  return (a.mean() - b.mean()) / std::sqrt(se2);
}

}  // namespace niid
