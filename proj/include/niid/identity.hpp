#pragma once

#include "niid/prob.hpp"
#include "niid/rng.hpp"
#include "niid/uniformity.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace niid {

inline constexpr double kFloorGuardBand = 1e-9;
inline constexpr std::uint64_t kMapStreamPurpose = 1;

namespace detail {

// floor(k' r(i)) with an instability guard on the floating-point path: a
// value within the guard band below an integer means rounding error may
// have pushed an exactly-integral product under its true value, which
// would silently shift one partition cell. The exact-rational path has no
// such failure mode.
inline std::uint64_t guarded_floor(double v) {
  double f = std::floor(v);
  if (v - f > 1.0 - kFloorGuardBand) {
    throw std::domain_error(
        "build_reduction: k'r(i) lies within 1e-9 below an integer; "
        "floating-point floors are unstable here, use the exact-rational "
        "path");
  }
  return static_cast<std::uint64_t>(f);
}

inline std::uint64_t guarded_floor(const Rational& v) {
  return rational_floor(v).convert_to<std::uint64_t>();
}

}  // namespace detail

// The identity-to-uniformity reduction built from a reference q over [k]:
// three distribution maps composed as Phi = Phi1 . Phi2 . Phi3 acting on
// distributions over [k] and producing distributions over [4k], together
// with the data needed to push samples through the matching randomized
// maps Psi. The partition of [4k] is the deterministic contiguous one,
// cell i covering part_size[i] consecutive elements.
template <typename Scalar>
struct BasicReductionMap {
  std::uint32_t k = 0;
  std::uint32_t k_prime = 0;  // 4k

  BasicProbabilityVector<Scalar> r;   // (1/2) q + (1/2) Unif(k)
  std::vector<Scalar> ratio;          // floor(k'r(i)) / (k'r(i)), in (0, 1]
  BasicProbabilityVector<Scalar> s;   // Phi2(r) over [k+1]
  std::vector<std::uint64_t> part_size;   // k+1 cells, sizes sum to 4k
  std::vector<std::uint64_t> part_start;  // 0-based offsets into [4k]

  std::vector<double> ratio_as_double;  // sampling-path view of `ratio`
};

using ReductionMap = BasicReductionMap<double>;
using RationalReductionMap = BasicReductionMap<Rational>;

template <typename Scalar>
BasicReductionMap<Scalar> build_reduction(
    const BasicProbabilityVector<Scalar>& q) {
  const std::uint32_t k = q.k();
  const std::uint32_t k_prime = 4 * k;

  std::vector<Scalar> r_mass(k);
  const Scalar half_uniform = make_scalar_ratio(1, 2 * k, Scalar{});
  for (std::uint32_t i = 0; i < k; ++i) {
    r_mass[i] = q.masses()[i] / Scalar(2) + half_uniform;
  }
  BasicProbabilityVector<Scalar> r(std::move(r_mass));

  std::vector<Scalar> ratio(k);
  std::vector<double> ratio_d(k);
  std::vector<std::uint64_t> sizes(k + 1, 0);
  std::uint64_t used = 0;
  for (std::uint32_t i = 0; i < k; ++i) {
    // k' r(i) = 2k q(i) + 2 >= 2, so every floor is at least 2.
    Scalar v = Scalar(k_prime) * r.masses()[i];
    std::uint64_t f = detail::guarded_floor(v);
    ratio[i] = Scalar(static_cast<std::int64_t>(f)) / v;
    ratio_d[i] = to_double(ratio[i]);
    sizes[i] = f;
    used += f;
  }
  if (used > k_prime) {
    throw std::domain_error("build_reduction: floors exceed 4k");
  }
  sizes[k] = k_prime - used;

  std::vector<Scalar> s_mass(k + 1);
  for (std::uint32_t i = 0; i <= k; ++i) {
    s_mass[i] = make_scalar_ratio(static_cast<std::int64_t>(sizes[i]), k_prime,
                                  Scalar{});
  }
  BasicProbabilityVector<Scalar> s(std::move(s_mass));

  std::vector<std::uint64_t> starts(k + 1);
  std::uint64_t offset = 0;
  for (std::uint32_t i = 0; i <= k; ++i) {
    starts[i] = offset;
    offset += sizes[i];
  }

  return BasicReductionMap<Scalar>{k,
                                   k_prime,
                                   std::move(r),
                                   std::move(ratio),
                                   std::move(s),
                                   std::move(sizes),
                                   std::move(starts),
                                   std::move(ratio_d)};
}

// Exact composition Phi1(Phi2(Phi3(p))) over [4k].
template <typename Scalar>
BasicProbabilityVector<Scalar> map_distribution(
    const BasicReductionMap<Scalar>& map,
    const BasicProbabilityVector<Scalar>& p) {
  if (p.k() != map.k) {
    throw std::invalid_argument("map_distribution: support size mismatch");
  }
  const std::uint32_t k = map.k;

  // Phi3 then Phi2 on the first k coordinates; coordinate k+1 absorbs the
  // mass shaved off by the ratios.
  const Scalar half_uniform = make_scalar_ratio(1, 2 * k, Scalar{});
  std::vector<Scalar> y(k + 1);
  Scalar shaved_total(0);
  for (std::uint32_t i = 0; i < k; ++i) {
    Scalar x = p.masses()[i] / Scalar(2) + half_uniform;
    y[i] = map.ratio[i] * x;
    shaved_total += y[i];
  }
  y[k] = Scalar(1) - shaved_total;
  if constexpr (std::is_same_v<Scalar, double>) {
    if (y[k] < 0.0) {
      if (y[k] < -kSimplexTolerance) {
        throw std::domain_error("map_distribution: negative residual mass");
      }
      y[k] = 0.0;
    }
  }

  // Phi1: spread y(j) uniformly over the j-th partition cell.
  std::vector<Scalar> out(map.k_prime, Scalar(0));
  for (std::uint32_t j = 0; j <= k; ++j) {
    const std::uint64_t size = map.part_size[j];
    if (size == 0) continue;  // only possible for j = k+1, with y(j) = 0
    Scalar share = y[j] / Scalar(static_cast<std::int64_t>(size));
    for (std::uint64_t e = 0; e < size; ++e) {
      out[map.part_start[j] + e] = share;
    }
  }
  return BasicProbabilityVector<Scalar>(std::move(out));
}

// Randomized sample map Psi1(Psi2(Psi3(x))): for X ~ p the output is
// distributed exactly as Phi(p).
template <typename Scalar>
std::uint32_t map_sample(const BasicReductionMap<Scalar>& map, std::uint32_t x,
                         SplitMix64& g) {
  if (x < 1 || x > map.k) {
    throw std::invalid_argument("map_sample: value outside [1, k]");
  }
  // Psi3: keep x with probability 1/2, else a uniform element of [k].
  if (g.next_double() >= 0.5) {
    x = static_cast<std::uint32_t>(g.next_below(map.k)) + 1;
  }
  // Psi2: keep with probability floor(k'r(x)) / (k'r(x)), else k+1.
  std::uint32_t cell = x - 1;
  const double keep = map.ratio_as_double[cell];
  if (keep < 1.0 && g.next_double() >= keep) {
    cell = map.k;
  }
  // Psi1: uniform element of the chosen partition cell.
  return static_cast<std::uint32_t>(map.part_start[cell] +
                                    g.next_below(map.part_size[cell])) +
         1;
}

struct IdentityParams {
  double epsilon = 0.0;
  double alpha_const = 2600.0;
  bool exact_rational = false;
};

// The double masses are themselves exact rationals; renormalizing by the
// exact total gives the rational vector the floating-point vector denotes.
inline RationalProbabilityVector rational_from_double(
    const ProbabilityVector& p) {
  std::vector<Rational> mass(p.k());
  Rational total(0);
  for (std::uint32_t i = 0; i < p.k(); ++i) {
    mass[i] = Rational(p.masses()[i]);
    total += mass[i];
  }
  for (auto& m : mass) m /= total;
  return RationalProbabilityVector(std::move(mass));
}

// Double view of an exact map, for the sampling path: floors and cell
// sizes were computed exactly, only the keep-probabilities get rounded.
inline ReductionMap to_sampling_map(const RationalReductionMap& exact) {
  std::vector<double> ratio(exact.ratio_as_double);
  return ReductionMap{exact.k,
                      exact.k_prime,
                      to_double_vector(exact.r),
                      std::move(ratio),
                      to_double_vector(exact.s),
                      exact.part_size,
                      exact.part_start,
                      exact.ratio_as_double};
}

inline ReductionMap build_sampling_reduction(const ProbabilityVector& q,
                                             bool exact_rational) {
  if (exact_rational) {
    return to_sampling_map(build_reduction(rational_from_double(q)));
  }
  return build_reduction(q);
}

// Identity testing against reference q: push every sample through the
// reduction and run the uniformity test over [4k] at distance eps/4 (the
// reduction contracts TV by at most 4). The verdict carries the mapped
// parameters.
inline Verdict test_identity(const SampleBatch& batch,
                             const ProbabilityVector& q,
                             const IdentityParams& params,
                             const RngSeed& seed) {
  if (batch.k() != q.k()) {
    throw std::invalid_argument("test_identity: support size mismatch");
  }
  if (batch.c() != 2) {
    throw std::invalid_argument("test_identity: requires c = 2");
  }
  const ReductionMap map = build_sampling_reduction(q, params.exact_rational);

  UniformityParams inner{map.k_prime, params.epsilon / 4.0,
                         params.alpha_const};
  inner.validate();
  CollisionAccumulator acc(map.k_prime);
  for (std::uint64_t t = 1; t <= batch.T(); ++t) {
    SplitMix64 g = seed.stream(kMapStreamPurpose, t);
    std::uint32_t m1 = map_sample(map, batch.draw(t, 1), g);
    std::uint32_t m2 = map_sample(map, batch.draw(t, 2), g);
    acc.add_pair(m1, m2);
  }
  return make_uniformity_verdict(acc.statistic(), batch.T(), inner, seed.seed);
}

}  // namespace niid
