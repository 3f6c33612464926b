#pragma once

#include "niid/batch.hpp"
#include "niid/verdict.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace niid {

struct UniformityParams {
  std::uint32_t k = 0;
  double epsilon = 0.0;
  // The largest constant appearing in the theorem's proof; deliberately
  // loose, overridable for experiments.
  double alpha_const = 2600.0;

  void validate() const {
    if (k == 0) throw std::invalid_argument("uniformity: k must be positive");
    if (!(epsilon > 0.0) || epsilon > 1.0) {
      throw std::invalid_argument("uniformity: epsilon must be in (0, 1]");
    }
    if (!(alpha_const > 0.0)) {
      throw std::invalid_argument("uniformity: alpha_const must be positive");
    }
  }
};

// Sources needed for the 2/3 guarantee: ceil(alpha * (sqrt(k)/eps^2 + 1/eps^4)).
inline std::uint64_t required_T(const UniformityParams& params) {
  params.validate();
  const double e2 = params.epsilon * params.epsilon;
  const double value =
      params.alpha_const * (std::sqrt(static_cast<double>(params.k)) / e2 +
                            1.0 / (e2 * e2));
  return static_cast<std::uint64_t>(std::ceil(value));
}

// Streaming form of the collision statistic
//   Z = (1/T^2) (sum_t Y_t + 2 sum_{s<t} Y_st),
//   Y_t  = 1[X_t(1) = X_t(2)],   Y_st = 1[X_t(1) = X_s(1)].
// The cross-source part only involves first draws, so it collapses to
// sum_i C(n_i, 2) over the histogram n of first draws; pairs stream in
// and the quadratic sum is recovered at the end in O(T + k).
class CollisionAccumulator {
 public:
  explicit CollisionAccumulator(std::uint32_t k) : first_counts_(k, 0) {}

  void add_pair(std::uint32_t x1, std::uint32_t x2) {
    ++pairs_;
    same_ += (x1 == x2);
    ++first_counts_[x1 - 1];
  }

  std::uint64_t pairs() const { return pairs_; }

  double statistic() const {
    if (pairs_ < 2) {
      throw std::invalid_argument("collision statistic: requires T >= 2");
    }
    // sum_{s<t} Y_st == sum_i C(n_i, 2) for first-draw counts n_i.
    double cross = 0.0;
    for (std::uint64_t n : first_counts_) {
      cross += 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    }
    const double T = static_cast<double>(pairs_);
    return (static_cast<double>(same_) + 2.0 * cross) / (T * T);
  }

 private:
  std::uint64_t pairs_ = 0;
  std::uint64_t same_ = 0;
  std::vector<std::uint64_t> first_counts_;
};

// Unbiased estimator of ||p_avg||_2^2 from c = 2 labeled samples.
inline double collision_statistic_z(const SampleBatch& batch) {
  if (batch.c() != 2) {
    throw std::invalid_argument("collision statistic: requires c = 2");
  }
  if (batch.T() < 2) {
    throw std::invalid_argument("collision statistic: requires T >= 2");
  }
  CollisionAccumulator acc(batch.k());
  for (std::uint64_t t = 1; t <= batch.T(); ++t) {
    acc.add_pair(batch.draw(t, 1), batch.draw(t, 2));
  }
  return acc.statistic();
}

// Threshold rule: reject iff Z >= (1 + eps^2/3) / k. Ties reject, so the
// far case never gets accepted at its own boundary.
inline Verdict make_uniformity_verdict(double statistic, std::uint64_t T,
                                       const UniformityParams& params,
                                       std::uint64_t seed = 0) {
  params.validate();
  Verdict v;
  v.statistic = statistic;
  v.threshold =
      (1.0 + params.epsilon * params.epsilon / 3.0) / static_cast<double>(params.k);
  v.decision = statistic >= v.threshold ? Decision::Reject : Decision::Accept;
  v.under_sampled = T < required_T(params);
  v.T = T;
  v.k = params.k;
  v.c = 2;
  v.epsilon = params.epsilon;
  v.seed = seed;
  return v;
}

// Tests p_avg = Unif(k) against ||p_avg - Unif(k)||_1 >= epsilon.
inline Verdict test_uniformity(const SampleBatch& batch,
                               const UniformityParams& params,
                               std::uint64_t seed = 0) {
  params.validate();
  if (batch.k() != params.k) {
    throw std::invalid_argument("test_uniformity: support size mismatch");
  }
  return make_uniformity_verdict(collision_statistic_z(batch), batch.T(),
                                 params, seed);
}

}  // namespace niid
