#pragma once

#include "niid/prob.hpp"
#include "niid/rng.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

namespace niid {

// Labeled draws: for each source t in [T], the ordered tuple
// (X_t(1), ..., X_t(c)) of values in [1, k]. The source labels are the
// whole point of the sampling model, so they are preserved verbatim.
class SampleBatch {
 public:
  SampleBatch(std::uint64_t T, std::uint32_t c, std::uint32_t k,
              std::vector<std::uint32_t> draws)
      : T_(T), c_(c), k_(k), draws_(std::move(draws)) {
    if (T_ == 0 || c_ == 0 || k_ == 0) {
      throw std::invalid_argument("sample batch: T, c, k must be positive");
    }
    if (draws_.size() != T_ * c_) {
      throw std::invalid_argument(
          "sample batch: ragged draws (expected exactly T*c values)");
    }
    for (std::uint32_t v : draws_) {
      if (v < 1 || v > k_) {
        throw std::invalid_argument("sample batch: value outside [1, k]");
      }
    }
  }

  std::uint64_t T() const { return T_; }
  std::uint32_t c() const { return c_; }
  std::uint32_t k() const { return k_; }

  // Value of draw j (1-based) of source t (1-based).
  std::uint32_t draw(std::uint64_t t, std::uint32_t j) const {
    return draws_[(t - 1) * c_ + (j - 1)];
  }

  std::span<const std::uint32_t> source_draws(std::uint64_t t) const {
    return {draws_.data() + (t - 1) * c_, c_};
  }

  const std::vector<std::uint32_t>& flat() const { return draws_; }

 private:
  std::uint64_t T_;
  std::uint32_t c_;
  std::uint32_t k_;
  std::vector<std::uint32_t> draws_;  // row-major, T rows of c values
};

// Walker/Vose alias table. O(k) build, one generator word per draw:
// low 32 bits pick the slot, high 32 bits decide accept-vs-alias.
class CategoricalSampler {
 public:
  explicit CategoricalSampler(const ProbabilityVector& p)
      : k_(p.k()), accept_(p.k()), alias_(p.k()) {
    const auto& mass = p.masses();
    std::vector<double> scaled(k_);
    for (std::uint32_t i = 0; i < k_; ++i) scaled[i] = mass[i] * k_;

    std::vector<std::uint32_t> small, large;
    small.reserve(k_);
    large.reserve(k_);
    for (std::uint32_t i = 0; i < k_; ++i) {
      (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
      std::uint32_t s = small.back();
      small.pop_back();
      std::uint32_t l = large.back();
      accept_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (std::uint32_t i : large) {
      accept_[i] = 1.0;
      alias_[i] = i;
    }
    for (std::uint32_t i : small) {  // leftovers from rounding
      accept_[i] = 1.0;
      alias_[i] = i;
    }
  }

  std::uint32_t k() const { return k_; }

  // 1-based value.
  std::uint32_t draw(SplitMix64& g) const {
    std::uint64_t u = g();
    std::uint32_t slot = static_cast<std::uint32_t>(
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) * k_) >> 32);
    double frac = static_cast<double>(u >> 32) * 0x1.0p-32;
    return (frac < accept_[slot] ? slot : alias_[slot]) + 1;
  }

 private:
  std::uint32_t k_;
  std::vector<double> accept_;
  std::vector<std::uint32_t> alias_;
};

// Per-source samplers for a sequence of distributions. Identical rows
// share one alias table, so T can be large while the set of distinct
// distributions stays small (the common case for generated instances).
class SequenceSampler {
 public:
  SequenceSampler(const DistributionSequence& seq)
      : SequenceSampler(seq.dists(), seq.T()) {}

  // Cyclic tiling: source t uses rows[(t-1) % rows.size()].
  SequenceSampler(const std::vector<ProbabilityVector>& rows, std::uint64_t T)
      : T_(T), k_(rows.front().k()) {
    if (rows.empty() || T == 0) {
      throw std::invalid_argument("sequence sampler: empty sequence");
    }
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets;
    source_table_.reserve(rows.size());
    for (const auto& row : rows) {
      if (row.k() != k_) {
        throw std::invalid_argument("sequence sampler: support mismatch");
      }
      std::uint64_t h = hash_row(row);
      std::uint32_t index = k_ + 1;  // sentinel
      for (std::uint32_t cand : buckets[h]) {
        if (tables_[cand].first == row.masses()) {
          index = cand;
          break;
        }
      }
      if (index == k_ + 1) {
        index = static_cast<std::uint32_t>(tables_.size());
        tables_.emplace_back(row.masses(), CategoricalSampler(row));
        buckets[h].push_back(index);
      }
      source_table_.push_back(index);
    }
  }

  std::uint64_t T() const { return T_; }
  std::uint32_t k() const { return k_; }

  const CategoricalSampler& sampler_for(std::uint64_t t) const {
    return tables_[source_table_[(t - 1) % source_table_.size()]].second;
  }

  // Draw the full labeled batch; each source consumes its own substream.
  SampleBatch draw_batch(std::uint32_t c, const RngSeed& seed) const {
    std::vector<std::uint32_t> draws(T_ * c);
    fill_batch(c, seed, draws);
    return SampleBatch(T_, c, k_, std::move(draws));
  }

  // Same draws, but into a caller-owned buffer (resized to T*c). Lets
  // Monte Carlo loops reuse one allocation across trials.
  void fill_batch(std::uint32_t c, const RngSeed& seed,
                  std::vector<std::uint32_t>& draws) const {
    draws.resize(T_ * c);
    for (std::uint64_t t = 1; t <= T_; ++t) {
      SplitMix64 g = seed.source_stream(t);
      const CategoricalSampler& s = sampler_for(t);
      for (std::uint32_t j = 0; j < c; ++j) {
        draws[(t - 1) * c + j] = s.draw(g);
      }
    }
  }

 private:
  static std::uint64_t hash_row(const ProbabilityVector& row) {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (double m : row.masses()) {
      std::uint64_t bits;
      static_assert(sizeof(bits) == sizeof(m));
      __builtin_memcpy(&bits, &m, sizeof(bits));
      h = detail::mix64(h ^ bits);
    }
    return h;
  }

  std::uint64_t T_;
  std::uint32_t k_;
  std::vector<std::pair<std::vector<double>, CategoricalSampler>> tables_;
  std::vector<std::uint32_t> source_table_;
};

// c i.i.d. draws from each source distribution, deterministic in the seed.
inline SampleBatch draw_batch(const DistributionSequence& seq, std::uint32_t c,
                              const RngSeed& seed) {
  if (c == 0) throw std::invalid_argument("draw_batch: c must be >= 1");
  return SequenceSampler(seq).draw_batch(c, seed);
}

// Empirical estimator of p_avg from one draw per source:
// p_hat(i) = (1/T) sum_t 1[X_t(1) = i].
inline ProbabilityVector learn_average(const SampleBatch& batch) {
  if (batch.c() != 1) {
    throw std::invalid_argument(
        "learn_average: requires c = 1 (reduce higher c by taking first "
        "draws)");
  }
  std::vector<double> mass(batch.k(), 0.0);
  const double unit = 1.0 / static_cast<double>(batch.T());
  for (std::uint64_t t = 1; t <= batch.T(); ++t) {
    mass[batch.draw(t, 1) - 1] += unit;
  }
  return ProbabilityVector(std::move(mass));
}

}  // namespace niid
