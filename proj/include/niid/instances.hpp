#pragma once

#include "niid/batch.hpp"
#include "niid/prob.hpp"
#include "niid/rng.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace niid {

inline constexpr std::uint64_t kInstanceStreamPurpose = 6;

// ---------------------------------------------------------------------------
// Building-block distributions for the pooled lower-bound construction.
// Four pairs over a common m-element block: (p1, p2) and (r1, r2) average
// to Unif(m); (q1, q2) = (s1, s2) average to a vector at l1 distance
// 1/(8 sqrt(2)) from Unif(m), yet the mixtures 3/4 p + 1/4 r and
// 3/4 q + 1/4 s have identical expected collision vectors.
// ---------------------------------------------------------------------------

enum class BlockKind { p1, p2, q1, q2, r1, r2, s1, s2 };

inline constexpr double kBlockEpsilon = 0.7071067811865475244;  // 1/sqrt(2)
inline constexpr double kBlockBeta = 7.0 / 8.0;
inline constexpr double kBlockAlphaMix = 3.0 / 4.0;

inline ProbabilityVector block_distribution(BlockKind kind, std::uint32_t m) {
  if (m < 2 || m % 2 != 0) {
    throw std::invalid_argument("block distribution: m must be even, >= 2");
  }
  const double e = kBlockEpsilon;
  std::vector<double> mass(m, 0.0);
  switch (kind) {
    case BlockKind::p1:
    case BlockKind::p2:
      for (auto& v : mass) v = 1.0 / m;
      break;
    case BlockKind::r1:
      for (std::uint32_t i = 0; i < m / 2; ++i) mass[i] = 2.0 / m;
      break;
    case BlockKind::r2:
      for (std::uint32_t i = m / 2; i < m; ++i) mass[i] = 2.0 / m;
      break;
    case BlockKind::q1:
    case BlockKind::s1:
      for (std::uint32_t i = 0; i < m / 2; ++i) mass[i] = (1.0 + e) / m;
      for (std::uint32_t i = m / 2; i < m; ++i) mass[i] = (1.0 - e) / m;
      break;
    case BlockKind::q2:
    case BlockKind::s2: {
      if (m % 16 != 0) {
        throw std::invalid_argument(
            "block distribution: q2/s2 need m divisible by 16 so the 7/8 "
            "split lands on integers");
      }
      const std::uint32_t cut = 7 * m / 16;  // 7/8 of each half
      for (std::uint32_t i = 0; i < m / 2; ++i) {
        mass[i] = (i < cut ? (1.0 - e) : (1.0 + e)) / m;
      }
      for (std::uint32_t i = 0; i < m / 2; ++i) {
        mass[m / 2 + i] = (i < cut ? (1.0 + e) : (1.0 - e)) / m;
      }
      break;
    }
  }
  return ProbabilityVector(std::move(mass));
}

// Exact-rational twin for the rational-valued blocks (p and r kinds); the
// q/s blocks carry the irrational bias 1/sqrt(2) and have no exact form.
inline RationalProbabilityVector block_distribution_exact(BlockKind kind,
                                                          std::uint32_t m) {
  if (m < 2 || m % 2 != 0) {
    throw std::invalid_argument("block distribution: m must be even, >= 2");
  }
  std::vector<Rational> mass(m, Rational(0));
  switch (kind) {
    case BlockKind::p1:
    case BlockKind::p2:
      for (auto& v : mass) v = Rational(1, m);
      break;
    case BlockKind::r1:
      for (std::uint32_t i = 0; i < m / 2; ++i) mass[i] = Rational(2, m);
      break;
    case BlockKind::r2:
      for (std::uint32_t i = m / 2; i < m; ++i) mass[i] = Rational(2, m);
      break;
    default:
      throw std::invalid_argument(
          "block distribution: only p/r kinds have exact rational form");
  }
  return RationalProbabilityVector(std::move(mass));
}

// Expected per-block collision vectors (E[c2], E[c3], E[c4]) when two
// samples are drawn from each of the block pair's two distributions.
inline std::array<double, 3> expected_block_collisions(char block_kind,
                                                       std::uint32_t m) {
  const double md = static_cast<double>(m);
  switch (block_kind) {
    case 'p':
      return {6.0 / md, 4.0 / (md * md), 1.0 / (md * md * md)};
    case 'q':
    case 's':
      return {11.0 / (2.0 * md), 3.0 / (md * md), 3.0 / (4.0 * md * md * md)};
    case 'r':
      return {4.0 / md, 0.0, 0.0};
    default:
      throw std::invalid_argument("expected_block_collisions: unknown kind");
  }
}

// Leading term of the per-block collision covariance, shared by both
// sequences; the a/b-specific corrections are an order of m smaller.
inline std::array<std::array<double, 3>, 3> expected_cov_leading(
    std::uint32_t m) {
  const double md = static_cast<double>(m);
  const double m2 = md * md, m3 = m2 * md;
  return {{{11.0 / (2.0 * md), 9.0 / m2, 9.0 / (2.0 * m3)},
           {9.0 / m2, 3.0 / m2, 3.0 / m3},
           {9.0 / (2.0 * m3), 3.0 / m3, 3.0 / (4.0 * m3)}}};
}

// ---------------------------------------------------------------------------
// Tiled hard instance for pooled (label-blind) testers.
// ---------------------------------------------------------------------------

struct BlockParams {
  std::uint32_t m = 64;        // block size, multiple of 16
  std::uint32_t n_blocks = 64; // multiple of 4

  std::uint32_t k() const { return m * n_blocks; }
  std::uint32_t T() const { return 2 * n_blocks; }

  void validate() const {
    if (m < 16 || m % 16 != 0) {
      throw std::invalid_argument(
          "block params: m must be a positive multiple of 16");
    }
    if (n_blocks == 0 || n_blocks % 4 != 0) {
      throw std::invalid_argument(
          "block params: n_blocks must be a positive multiple of 4");
    }
  }
};

namespace detail {

template <typename Scalar>
BasicProbabilityVector<Scalar> embed_block(
    const BasicProbabilityVector<Scalar>& block, std::uint32_t n_blocks,
    std::uint32_t block_index) {
  const std::uint32_t m = block.k();
  std::vector<Scalar> mass(static_cast<std::size_t>(m) * n_blocks, Scalar(0));
  const std::size_t offset = static_cast<std::size_t>(block_index) * m;
  for (std::uint32_t i = 0; i < m; ++i) {
    mass[offset + i] = block.masses()[i];
  }
  return BasicProbabilityVector<Scalar>(std::move(mass));
}

}  // namespace detail

struct LbInstancePair {
  DistributionSequence a;  // avg(a) = Unif(k)
  DistributionSequence b;  // d_TV(avg(b), Unif(k)) = 1/(16 sqrt(2))
};

// Sequences a and b of Definition-style tiling: the first 3/4 of the
// blocks carry (p1, p2) / (q1, q2), the rest carry (r1, r2) / (s1, s2),
// each pair supported on its own block, sources 2i-1 and 2i on block i.
inline LbInstancePair gen_pooled_lb_pair(const BlockParams& params) {
  params.validate();
  const std::uint32_t n = params.n_blocks;
  const std::uint32_t mixed_cutoff = 3 * n / 4;  // alpha = 3/4

  std::vector<ProbabilityVector> a_rows, b_rows;
  a_rows.reserve(params.T());
  b_rows.reserve(params.T());
  const auto p1 = block_distribution(BlockKind::p1, params.m);
  const auto p2 = block_distribution(BlockKind::p2, params.m);
  const auto q1 = block_distribution(BlockKind::q1, params.m);
  const auto q2 = block_distribution(BlockKind::q2, params.m);
  const auto r1 = block_distribution(BlockKind::r1, params.m);
  const auto r2 = block_distribution(BlockKind::r2, params.m);

  for (std::uint32_t i = 0; i < n; ++i) {
    const bool pq = i < mixed_cutoff;
    a_rows.push_back(detail::embed_block(pq ? p1 : r1, n, i));
    a_rows.push_back(detail::embed_block(pq ? p2 : r2, n, i));
    b_rows.push_back(detail::embed_block(q1, n, i));  // s1 = q1
    b_rows.push_back(detail::embed_block(q2, n, i));  // s2 = q2
  }
  return LbInstancePair{DistributionSequence(std::move(a_rows)),
                        DistributionSequence(std::move(b_rows))};
}

// Exact-rational a-sequence, for zero-error averaging checks.
inline RationalDistributionSequence gen_pooled_lb_a_exact(
    const BlockParams& params) {
  params.validate();
  const std::uint32_t n = params.n_blocks;
  const std::uint32_t mixed_cutoff = 3 * n / 4;
  std::vector<RationalProbabilityVector> rows;
  rows.reserve(params.T());
  const auto p1 = block_distribution_exact(BlockKind::p1, params.m);
  const auto p2 = block_distribution_exact(BlockKind::p2, params.m);
  const auto r1 = block_distribution_exact(BlockKind::r1, params.m);
  const auto r2 = block_distribution_exact(BlockKind::r2, params.m);
  for (std::uint32_t i = 0; i < n; ++i) {
    const bool pq = i < mixed_cutoff;
    rows.push_back(detail::embed_block(pq ? p1 : r1, n, i));
    rows.push_back(detail::embed_block(pq ? p2 : r2, n, i));
  }
  return RationalDistributionSequence(std::move(rows));
}

inline double lb_pair_b_tv() { return 1.0 / (16.0 * std::sqrt(2.0)); }

// ---------------------------------------------------------------------------
// The c = 1 indistinguishable pair.
// ---------------------------------------------------------------------------

// Random-instance generators D1 and D2: a fresh uniform permutation of
// [k] splits the support into T' = k/r' blocks of r' elements. D1 makes
// source i uniform on block i, D2 makes it a point mass on the block
// head; sources past T' are uniform over [k]. Every D1 draw averages to
// Unif(k) exactly; every D2 draw sits at TV distance (k-T')T'/(Tk) >= 1/4
// from it. Under c = 1 the two sample laws coincide.
struct C1InstancePair {
  std::uint32_t k = 0;        // adjusted to a power of two
  std::uint32_t T = 0;
  std::uint32_t r_prime = 0;  // block size, power of two >= 2
  std::uint32_t T_prime = 0;  // k / r_prime

  double d2_tv_from_uniform() const {
    return static_cast<double>(k - T_prime) * static_cast<double>(T_prime) /
           (static_cast<double>(T) * static_cast<double>(k));
  }

  DistributionSequence draw_d1(const RngSeed& seed) const {
    return draw(seed, /*point_mass=*/false);
  }
  DistributionSequence draw_d2(const RngSeed& seed) const {
    return draw(seed, /*point_mass=*/true);
  }

  DistributionSequence draw(const RngSeed& seed, bool point_mass) const {
    SplitMix64 g = seed.aux_stream(kInstanceStreamPurpose);
    std::vector<std::uint32_t> perm = random_permutation(k, g);
    std::vector<ProbabilityVector> rows;
    rows.reserve(T);
    for (std::uint32_t i = 0; i < T_prime; ++i) {
      std::vector<double> mass(k, 0.0);
      if (point_mass) {
        mass[perm[static_cast<std::size_t>(i) * r_prime] - 1] = 1.0;
      } else {
        for (std::uint32_t j = 0; j < r_prime; ++j) {
          mass[perm[static_cast<std::size_t>(i) * r_prime + j] - 1] =
              1.0 / r_prime;
        }
      }
      rows.emplace_back(std::move(mass));
    }
    for (std::uint32_t i = T_prime; i < T; ++i) {
      rows.push_back(ProbabilityVector::uniform(k));
    }
    return DistributionSequence(std::move(rows));
  }
};

inline std::uint32_t next_power_of_two(std::uint32_t v) {
  std::uint32_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

inline C1InstancePair gen_c1_pair(std::uint32_t k, std::uint32_t T) {
  if (k < 2 || T == 0) {
    throw std::invalid_argument("gen_c1_pair: need k >= 2 and T >= 1");
  }
  C1InstancePair pair;
  pair.k = next_power_of_two(k);  // callers receive the adjusted support
  pair.T = T;
  if (T > pair.k / 2) {
    throw std::invalid_argument("gen_c1_pair: requires T <= k/2");
  }
  // r' = smallest power of two >= k/T; T' = k/r' is then integral.
  std::uint32_t r_prime = 1;
  while (r_prime * T < pair.k) r_prime <<= 1;
  pair.r_prime = r_prime;
  pair.T_prime = pair.k / r_prime;
  return pair;
}

// ---------------------------------------------------------------------------
// Canonical far-from-uniform target.
// ---------------------------------------------------------------------------

// Alternating masses (1+eps)/k, (1-eps)/k starting at element 1; l1
// distance from Unif(k) is exactly eps (TV distance eps/2).
inline ProbabilityVector gen_paired_bias(std::uint32_t k, double epsilon) {
  if (k == 0 || k % 2 != 0) {
    throw std::invalid_argument("gen_paired_bias: k must be positive even");
  }
  if (epsilon < 0.0 || epsilon > 1.0) {
    throw std::invalid_argument("gen_paired_bias: epsilon must be in [0, 1]");
  }
  std::vector<double> mass(k);
  for (std::uint32_t i = 0; i < k; ++i) {
    mass[i] = (i % 2 == 0 ? 1.0 + epsilon : 1.0 - epsilon) / k;
  }
  return ProbabilityVector(std::move(mass));
}

}  // namespace niid
