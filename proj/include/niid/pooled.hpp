#pragma once

#include "niid/batch.hpp"
#include "niid/identity.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

namespace niid {

inline constexpr std::uint64_t kPoolStreamPurpose = 4;
inline constexpr std::uint64_t kShuffleStreamPurpose = 5;

// Occurrence histogram of a pooled multiset: counts[j] = number of
// support elements appearing exactly j >= 1 times. The zero-count entry
// is derivable from k and never stored.
struct FingerprintVector {
  std::map<std::uint64_t, std::uint64_t> counts;

  std::uint64_t total_samples() const {
    std::uint64_t total = 0;
    for (const auto& [mult, n] : counts) total += mult * n;
    return total;
  }

  friend bool operator==(const FingerprintVector&,
                         const FingerprintVector&) = default;
};

inline FingerprintVector fingerprint(const std::vector<std::uint32_t>& pooled,
                                     std::uint32_t k) {
  std::vector<std::uint64_t> occurrence(k, 0);
  for (std::uint32_t v : pooled) {
    if (v < 1 || v > k) {
      throw std::invalid_argument("fingerprint: value outside [1, k]");
    }
    ++occurrence[v - 1];
  }
  FingerprintVector fp;
  for (std::uint64_t n : occurrence) {
    if (n > 0) ++fp.counts[n];
  }
  return fp;
}

// 2-, 3- and 4-way collision counts of a pooled multiset:
// c_m = sum_i C(occurrences(i), m).
struct CollisionVector {
  std::uint64_t c2 = 0;
  std::uint64_t c3 = 0;
  std::uint64_t c4 = 0;

  friend bool operator==(const CollisionVector&,
                         const CollisionVector&) = default;
};

inline CollisionVector collision_counts(
    const std::vector<std::uint32_t>& pooled, std::uint32_t k) {
  std::vector<std::uint64_t> occurrence(k, 0);
  for (std::uint32_t v : pooled) {
    if (v < 1 || v > k) {
      throw std::invalid_argument("collision_counts: value outside [1, k]");
    }
    ++occurrence[v - 1];
  }
  CollisionVector cv;
  for (std::uint64_t n : occurrence) {
    if (n < 2) continue;
    cv.c2 += n * (n - 1) / 2;
    if (n >= 3) cv.c3 += n * (n - 1) * (n - 2) / 6;
    if (n >= 4) cv.c4 += n * (n - 1) * (n - 2) * (n - 3) / 24;
  }
  return cv;
}

// Exact-multiplicity counts (n2, n3, n4) for a 4-sample multiset, related
// to collision counts by the unimodular matrix
//   [1 -3  6]
//   [0  1 -4]
//   [0  0  1].
// The map is total on integer triples; entries can go negative when the
// input is not realizable by a real 4-sample multiset.
struct FingerprintTriple {
  std::int64_t n2 = 0;
  std::int64_t n3 = 0;
  std::int64_t n4 = 0;

  friend bool operator==(const FingerprintTriple&,
                         const FingerprintTriple&) = default;
};

inline FingerprintTriple collisions_to_fingerprint(const CollisionVector& cv) {
  const auto c2 = static_cast<std::int64_t>(cv.c2);
  const auto c3 = static_cast<std::int64_t>(cv.c3);
  const auto c4 = static_cast<std::int64_t>(cv.c4);
  return FingerprintTriple{c2 - 3 * c3 + 6 * c4, c3 - 4 * c4, c4};
}

inline bool fingerprint_realizable(const FingerprintTriple& fp) {
  return fp.n2 >= 0 && fp.n3 >= 0 && fp.n4 >= 0;
}

// Inverse map; round-trips exactly (determinant-1 matrix).
inline CollisionVector fingerprint_to_collisions(const FingerprintTriple& fp) {
  CollisionVector cv;
  cv.c4 = static_cast<std::uint64_t>(fp.n4);
  cv.c3 = static_cast<std::uint64_t>(fp.n3 + 4 * fp.n4);
  cv.c2 = static_cast<std::uint64_t>(fp.n2 + 3 * fp.n3 + 6 * fp.n4);
  return cv;
}

// Signed inverse for arbitrary integer triples (testing the linear map
// itself rather than realizable inputs).
inline std::array<std::int64_t, 3> fingerprint_to_collisions_signed(
    std::int64_t n2, std::int64_t n3, std::int64_t n4) {
  return {n2 + 3 * n3 + 6 * n4, n3 + 4 * n4, n4};
}

// Poi(c_mean) samples from each source, pooled into one unlabeled
// multiset (returned in source order; consumers treat it as exchangeable).
inline std::vector<std::uint32_t> pool_poissonized(
    const SequenceSampler& sampler, double c_mean, const RngSeed& seed) {
  if (!(c_mean > 0.0)) {
    throw std::invalid_argument("pool_poissonized: c_mean must be positive");
  }
  std::vector<std::uint32_t> pooled;
  pooled.reserve(static_cast<std::size_t>(
      c_mean * static_cast<double>(sampler.T()) * 1.25) + 16);
  for (std::uint64_t t = 1; t <= sampler.T(); ++t) {
    SplitMix64 g = seed.stream(kPoolStreamPurpose, t);
    std::uint64_t n = poisson_draw(c_mean, g);
    const CategoricalSampler& s = sampler.sampler_for(t);
    for (std::uint64_t j = 0; j < n; ++j) pooled.push_back(s.draw(g));
  }
  return pooled;
}

inline std::vector<std::uint32_t> pool_poissonized(
    const DistributionSequence& seq, double c_mean, const RngSeed& seed) {
  return pool_poissonized(SequenceSampler(seq), c_mean, seed);
}

// Poissonized identity tester: the pooled multiset is distributed as
// Poi(c_mean * T) i.i.d. draws from p_avg, so after a seeded shuffle the
// samples are exchanged for i.i.d. order, pushed through the reduction,
// paired into pseudo-sources of size 2, and handed to the uniformity
// tester over [4k] at eps/4. An odd trailing sample is discarded; pooled
// samples are exchangeable so the discard is unbiased.
inline Verdict test_identity_poissonized(std::vector<std::uint32_t> pooled,
                                         const ProbabilityVector& q,
                                         const IdentityParams& params,
                                         const RngSeed& seed) {
  if (pooled.size() < 4) {
    throw std::invalid_argument(
        "test_identity_poissonized: need at least 4 pooled samples");
  }
  SplitMix64 shuffle_rng = seed.aux_stream(kShuffleStreamPurpose);
  fisher_yates_shuffle(pooled, shuffle_rng);

  const bool discarded = pooled.size() % 2 != 0;
  const std::uint64_t pseudo_T = pooled.size() / 2;

  const ReductionMap map = build_sampling_reduction(q, params.exact_rational);
  UniformityParams inner{map.k_prime, params.epsilon / 4.0,
                         params.alpha_const};
  inner.validate();

  SplitMix64 g = seed.aux_stream(kMapStreamPurpose);
  CollisionAccumulator acc(map.k_prime);
  for (std::uint64_t t = 0; t < pseudo_T; ++t) {
    std::uint32_t m1 = map_sample(map, pooled[2 * t], g);
    std::uint32_t m2 = map_sample(map, pooled[2 * t + 1], g);
    acc.add_pair(m1, m2);
  }
  Verdict v = make_uniformity_verdict(acc.statistic(), pseudo_T, inner,
                                      seed.seed);
  v.discarded_odd_sample = discarded;
  return v;
}

}  // namespace niid
