#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace niid {

// SplitMix64 (Steele, Lea, Flood / java.util.SplittableRandom): a
// counter-based generator whose i-th output is mix(key + i*gamma).
// One 64-bit word of state, invertible finalizer, passes PractRand.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t key = 0) : state_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<std::uint64_t>::max();
  }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n) via Lemire's multiply-shift map.
  // The residual bias is below n / 2^64, far under Monte Carlo noise.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>((*this)()) * n) >> 64);
  }

 private:
  std::uint64_t state_;
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Seed plus stream labels. Substream keys are derived as
// seed ^ mix(trial, source, purpose), so any (seed, labels) pair names
// one reproducible stream and distinct labels give independent streams.
struct RngSeed {
  std::uint64_t seed = 0;
  std::uint64_t trial = 0;

  RngSeed with_trial(std::uint64_t t) const { return RngSeed{seed, t}; }

  // Stream for the draws of one source within this trial.
  SplitMix64 source_stream(std::uint64_t source) const {
    return stream(0, source);
  }

  // Stream for trial-level auxiliary randomness (shuffles, instance
  // construction, light-element redraws, ...). Purposes are small
  // constants chosen by the caller; purpose 0 is reserved for sources.
  SplitMix64 aux_stream(std::uint64_t purpose) const {
    return stream(purpose, 0);
  }

  SplitMix64 stream(std::uint64_t purpose, std::uint64_t source) const {
    std::uint64_t h = detail::mix64(trial + 0x632be59bd9b4e019ULL);
    h = detail::mix64(h ^ (source + 0x9e3779b97f4a7c15ULL));
    h = detail::mix64(h ^ (purpose + 0xd1b54a32d192ed03ULL));
    return SplitMix64(seed ^ h);
  }
};

// Poisson sampler (Knuth's product method, split for large means so the
// loop stays short). Exact and portable, unlike std::poisson_distribution
// whose algorithm is implementation-defined.
inline std::uint64_t poisson_draw(double mean, SplitMix64& g) {
  std::uint64_t total = 0;
  while (mean > 16.0) {
    double chunk = 16.0;
    double limit = std::exp(-chunk);
    std::uint64_t n = 0;
    double prod = g.next_double();
    while (prod > limit) {
      ++n;
      prod *= g.next_double();
    }
    total += n;
    mean -= chunk;
  }
  double limit = std::exp(-mean);
  std::uint64_t n = 0;
  double prod = g.next_double();
  while (prod > limit) {
    ++n;
    prod *= g.next_double();
  }
  return total + n;
}

template <typename T>
void fisher_yates_shuffle(std::vector<T>& values, SplitMix64& g) {
  for (std::size_t i = values.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(g.next_below(i));
    std::swap(values[i - 1], values[j]);
  }
}

// Uniformly random permutation of 1..n.
inline std::vector<std::uint32_t> random_permutation(std::uint32_t n,
                                                     SplitMix64& g) {
  std::vector<std::uint32_t> perm(n);
  for (std::uint32_t i = 0; i < n; ++i) perm[i] = i + 1;
  fisher_yates_shuffle(perm, g);
  return perm;
}

}  // namespace niid
