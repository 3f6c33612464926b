#pragma once

#include "niid/batch.hpp"
#include "niid/verdict.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace niid {

inline constexpr std::uint64_t kLightStreamPurposeP = 2;
inline constexpr std::uint64_t kLightStreamPurposeQ = 3;

struct ClosenessParams {
  std::uint32_t k = 0;
  double epsilon = 0.0;  // l1 distance parameter, must exceed k^(-1/3)
  double alpha_const = 1000.0;

  double b() const {  // heavy-element threshold
    return std::pow(epsilon / static_cast<double>(k), 2.0 / 3.0);
  }
  double heavy_reject() const { return epsilon / 6.0; }
  double l2_eps() const {
    return epsilon / (10.0 * std::sqrt(static_cast<double>(k)));
  }

  void validate() const {
    if (k == 0) throw std::invalid_argument("closeness: k must be positive");
    if (!(epsilon > 0.0) || epsilon > 1.0) {
      throw std::invalid_argument("closeness: epsilon must be in (0, 1]");
    }
    if (epsilon <= std::pow(static_cast<double>(k), -1.0 / 3.0)) {
      throw std::invalid_argument(
          "closeness: epsilon must exceed k^(-1/3)");
    }
    if (!(alpha_const > 0.0)) {
      throw std::invalid_argument("closeness: alpha_const must be positive");
    }
  }
};

inline std::uint64_t required_T_closeness(const ClosenessParams& params) {
  params.validate();
  return static_cast<std::uint64_t>(
      std::ceil(params.alpha_const *
                std::pow(static_cast<double>(params.k), 2.0 / 3.0) /
                std::pow(params.epsilon, 8.0 / 3.0)));
}

struct L2Stats {
  double z = 0.0;        // estimates ||p_avg||_2^2
  double z_prime = 0.0;  // estimates ||q_avg||_2^2
  double q = 0.0;        // estimates <p_avg, q_avg>
  double f = 0.0;        // z + z' - 2q, estimates ||p_avg - q_avg||_2^2
};

// Core of the l2 statistics, on per-source value pairs (one pair per
// source from each side). Z and Z' have the collision-statistic shape
// with cross terms 1[X_t(2) = X_s(3)] for s < t; Q runs over all T^2
// ordered pairs, diagonal included.
inline L2Stats l2_stats_from_pairs(std::span<const std::uint32_t> p2,
                                   std::span<const std::uint32_t> p3,
                                   std::span<const std::uint32_t> q2,
                                   std::span<const std::uint32_t> q3,
                                   std::uint32_t k) {
  const std::size_t T = p2.size();
  if (T < 2 || p3.size() != T || q2.size() != T || q3.size() != T) {
    throw std::invalid_argument("l2 statistics: need T >= 2 matched pairs");
  }

  auto collision_part = [&](std::span<const std::uint32_t> a,
                            std::span<const std::uint32_t> b) {
    std::vector<std::uint64_t> hist(k, 0);
    std::uint64_t same = 0, cross = 0;
    for (std::size_t t = 0; t < T; ++t) {
      same += (a[t] == b[t]);
      cross += hist[a[t] - 1];  // pairs X_t(2) vs X_s(3), s < t
      ++hist[b[t] - 1];
    }
    const double Td = static_cast<double>(T);
    return (static_cast<double>(same) + 2.0 * static_cast<double>(cross)) /
           (Td * Td);
  };

  L2Stats out;
  out.z = collision_part(p2, p3);
  out.z_prime = collision_part(q2, q3);

  std::vector<std::uint64_t> hist_p(k, 0), hist_q(k, 0);
  for (std::size_t t = 0; t < T; ++t) {
    ++hist_p[p2[t] - 1];
    ++hist_q[q2[t] - 1];
  }
  double q_count = 0.0;
  for (std::uint32_t i = 0; i < k; ++i) {
    q_count += static_cast<double>(hist_p[i]) * static_cast<double>(hist_q[i]);
  }
  const double Td = static_cast<double>(T);
  out.q = q_count / (Td * Td);
  out.f = out.z + out.z_prime - 2.0 * out.q;
  return out;
}

namespace detail {

inline void require_l2_batches(const SampleBatch& p, const SampleBatch& q,
                               std::uint32_t min_c) {
  if (p.c() < min_c || q.c() < min_c) {
    throw std::invalid_argument("closeness: batches need c >= 3");
  }
  if (p.T() != q.T() || p.k() != q.k()) {
    throw std::invalid_argument("closeness: batch shapes must match");
  }
}

inline std::vector<std::uint32_t> column(const SampleBatch& b,
                                         std::uint32_t j) {
  std::vector<std::uint32_t> out(b.T());
  for (std::uint64_t t = 1; t <= b.T(); ++t) out[t - 1] = b.draw(t, j);
  return out;
}

}  // namespace detail

// (Z, Z', Q, F) from draws 2 and 3 of both batches; F may be negative.
inline L2Stats l2_statistic_f(const SampleBatch& batch_p,
                              const SampleBatch& batch_q) {
  detail::require_l2_batches(batch_p, batch_q, 3);
  return l2_stats_from_pairs(detail::column(batch_p, 2),
                             detail::column(batch_p, 3),
                             detail::column(batch_q, 2),
                             detail::column(batch_q, 3), batch_p.k());
}

// Sources needed by the l2 tester's variance bound, from plug-in moment
// values (second-order from the statistics themselves, third-order bounded
// by s2^(3/2) via the norm inequality ||.||_3 <= ||.||_2).
inline std::uint64_t required_T_l2(double eps2, double s2, double s3,
                                   double alpha_const) {
  const double e2 = eps2 * eps2;
  return static_cast<std::uint64_t>(std::ceil(
      alpha_const * (std::sqrt(std::max(s2, 0.0)) / e2 + s3 / (e2 * e2))));
}

inline Verdict make_l2_verdict(const L2Stats& stats, std::uint64_t T,
                               std::uint32_t k, std::uint32_t c, double eps2,
                               double alpha_const, std::uint64_t seed) {
  Verdict v;
  v.statistic = stats.f;
  // The analysis separates E[F] <= eps2^2/9 (close) from E[F] >= eps2^2
  // (far) with deviation eps2^2/3; the cut at eps2^2/2 leaves symmetric
  // slack. A free constant, not tuned.
  v.threshold = 0.5 * eps2 * eps2;
  v.decision = stats.f >= v.threshold ? Decision::Reject : Decision::Accept;
  const double s2 = std::max(stats.z, 0.0) + std::max(stats.z_prime, 0.0) +
                    std::max(stats.q, 0.0);
  v.under_sampled = T < required_T_l2(eps2, s2, std::pow(s2, 1.5), alpha_const);
  v.T = T;
  v.k = k;
  v.c = c;
  v.epsilon = eps2;
  v.seed = seed;
  v.decided_by = "l2";
  return v;
}

// Tests ||p_avg - q_avg||_2 <= eps2/3 versus > eps2.
inline Verdict l2_test(const SampleBatch& batch_p, const SampleBatch& batch_q,
                       double eps2, double alpha_const = 1000.0,
                       std::uint64_t seed = 0) {
  L2Stats stats = l2_statistic_f(batch_p, batch_q);
  return make_l2_verdict(stats, batch_p.T(), batch_p.k(), batch_p.c(), eps2,
                         alpha_const, seed);
}

// Empirical first-draw frequencies and the heavy/light partition of [k]:
// element i is heavy when p_hat(i) >= b or q_hat(i) >= b (inclusive).
struct HeavyLightSplit {
  std::vector<double> p_hat;
  std::vector<double> q_hat;
  std::vector<char> heavy;  // mask over [k], 0-based
  std::vector<std::uint32_t> heavy_elements;  // 1-based, ascending
  double b = 0.0;
};

inline HeavyLightSplit heavy_light_split(const SampleBatch& batch_p,
                                         const SampleBatch& batch_q,
                                         const ClosenessParams& params) {
  if (batch_p.T() != batch_q.T() || batch_p.k() != batch_q.k()) {
    throw std::invalid_argument("heavy_light_split: batch shapes must match");
  }
  const std::uint32_t k = batch_p.k();
  HeavyLightSplit split;
  split.b = params.b();
  split.p_hat.assign(k, 0.0);
  split.q_hat.assign(k, 0.0);
  const double unit = 1.0 / static_cast<double>(batch_p.T());
  for (std::uint64_t t = 1; t <= batch_p.T(); ++t) {
    split.p_hat[batch_p.draw(t, 1) - 1] += unit;
    split.q_hat[batch_q.draw(t, 1) - 1] += unit;
  }
  split.heavy.assign(k, 0);
  for (std::uint32_t i = 0; i < k; ++i) {
    if (split.p_hat[i] >= split.b || split.q_hat[i] >= split.b) {
      split.heavy[i] = 1;
      split.heavy_elements.push_back(i + 1);
    }
  }
  return split;
}

// Plug-in l1 distance over the heavy set.
inline double heavy_distance(const HeavyLightSplit& split) {
  double total = 0.0;
  for (std::uint32_t i : split.heavy_elements) {
    total += std::abs(split.p_hat[i - 1] - split.q_hat[i - 1]);
  }
  return total;
}

// Restriction to the light set S: pass x through when x is in S,
// otherwise redraw uniformly from [k]. Realizes p' with
// p'(i) = p(i) 1[i in S] + p(B)/k.
inline std::uint32_t light_restricted_sample(std::uint32_t x,
                                             const std::vector<char>& heavy,
                                             std::uint32_t k, SplitMix64& g) {
  if (x < 1 || x > k) {
    throw std::invalid_argument("light_restricted_sample: value outside [1,k]");
  }
  if (!heavy[x - 1]) return x;
  return static_cast<std::uint32_t>(g.next_below(k)) + 1;
}

// Two-stage l1 closeness tester on c = 3 batches. Stage 1 rejects on the
// heavy plug-in distance alone; otherwise stage 2 always runs: draws 2
// and 3 are restricted to the light set and handed to the l2 tester at
// eps2 = eps / (10 sqrt(k)).
inline Verdict test_closeness_l1(const SampleBatch& batch_p,
                                 const SampleBatch& batch_q,
                                 const ClosenessParams& params,
                                 const RngSeed& seed) {
  params.validate();
  detail::require_l2_batches(batch_p, batch_q, 3);
  if (batch_p.c() != 3) {
    throw std::invalid_argument("test_closeness_l1: requires c = 3 exactly");
  }
  if (batch_p.k() != params.k) {
    throw std::invalid_argument("test_closeness_l1: support size mismatch");
  }
  const std::uint64_t T = batch_p.T();
  const bool under = T < required_T_closeness(params);

  HeavyLightSplit split = heavy_light_split(batch_p, batch_q, params);
  const double hd = heavy_distance(split);
  if (hd > params.heavy_reject()) {
    Verdict v;
    v.statistic = hd;
    v.threshold = params.heavy_reject();
    v.decision = Decision::Reject;
    v.under_sampled = under;
    v.T = T;
    v.k = params.k;
    v.c = 3;
    v.epsilon = params.epsilon;
    v.seed = seed.seed;
    v.decided_by = "heavy";
    return v;
  }

  const std::uint32_t k = params.k;
  std::vector<std::uint32_t> p2(T), p3(T), q2(T), q3(T);
  for (std::uint64_t t = 1; t <= T; ++t) {
    SplitMix64 gp = seed.stream(kLightStreamPurposeP, t);
    SplitMix64 gq = seed.stream(kLightStreamPurposeQ, t);
    p2[t - 1] = light_restricted_sample(batch_p.draw(t, 2), split.heavy, k, gp);
    p3[t - 1] = light_restricted_sample(batch_p.draw(t, 3), split.heavy, k, gp);
    q2[t - 1] = light_restricted_sample(batch_q.draw(t, 2), split.heavy, k, gq);
    q3[t - 1] = light_restricted_sample(batch_q.draw(t, 3), split.heavy, k, gq);
  }
  L2Stats stats = l2_stats_from_pairs(p2, p3, q2, q3, k);
  Verdict v = make_l2_verdict(stats, T, k, 3, params.l2_eps(),
                              params.alpha_const, seed.seed);
  v.epsilon = params.epsilon;
  v.under_sampled = under;
  return v;
}

}  // namespace niid
