#pragma once

#include "niid/rational.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace niid {

inline constexpr double kSimplexTolerance = 1e-9;

namespace detail {

inline bool sums_to_one(double total) {
  return std::abs(total - 1.0) <= kSimplexTolerance;
}
inline bool sums_to_one(const Rational& total) { return total == 1; }

inline void renormalize(std::vector<double>& mass, double total) {
  if (total == 1.0) return;
  for (double& m : mass) m /= total;
}
inline void renormalize(std::vector<Rational>&, const Rational&) {
  // Rational construction is exact; a total != 1 is rejected earlier.
}

}  // namespace detail

// Probability distribution over the 1-based support [1, k]. Immutable
// after construction. Entries must be nonnegative and sum to 1 within
// kSimplexTolerance; near misses are renormalized, anything worse is
// rejected so data errors surface instead of being silently patched.
template <typename Scalar>
class BasicProbabilityVector {
 public:
  explicit BasicProbabilityVector(std::vector<Scalar> mass)
      : mass_(std::move(mass)) {
    if (mass_.empty()) {
      throw std::invalid_argument("probability vector: empty support");
    }
    Scalar total(0);
    for (const Scalar& m : mass_) {
      if (m < Scalar(0)) {
        throw std::invalid_argument("probability vector: negative mass");
      }
      total += m;
    }
    if (!detail::sums_to_one(total)) {
      throw std::invalid_argument(
          "probability vector: masses sum to " + sum_string(total) +
          ", outside tolerance " + std::to_string(kSimplexTolerance));
    }
    detail::renormalize(mass_, total);
  }

  static BasicProbabilityVector uniform(std::uint32_t k) {
    if (k == 0) throw std::invalid_argument("uniform: k must be positive");
    return BasicProbabilityVector(
        std::vector<Scalar>(k, make_scalar_ratio(1, k, Scalar{})));
  }

  static BasicProbabilityVector point_mass(std::uint32_t k,
                                           std::uint32_t value) {
    if (value < 1 || value > k) {
      throw std::invalid_argument("point_mass: value outside [1, k]");
    }
    std::vector<Scalar> mass(k, Scalar(0));
    mass[value - 1] = Scalar(1);
    return BasicProbabilityVector(std::move(mass));
  }

  std::uint32_t k() const { return static_cast<std::uint32_t>(mass_.size()); }

  // Mass of the 1-based support element `value`.
  const Scalar& mass(std::uint32_t value) const { return mass_[value - 1]; }
  const std::vector<Scalar>& masses() const { return mass_; }

  friend bool operator==(const BasicProbabilityVector& a,
                         const BasicProbabilityVector& b) {
    return a.mass_ == b.mass_;
  }

 private:
  static std::string sum_string(double total) { return std::to_string(total); }
  static std::string sum_string(const Rational& total) {
    return total.str();
  }

  std::vector<Scalar> mass_;
};

using ProbabilityVector = BasicProbabilityVector<double>;
using RationalProbabilityVector = BasicProbabilityVector<Rational>;

inline ProbabilityVector to_double_vector(const RationalProbabilityVector& p) {
  std::vector<double> mass(p.k());
  for (std::uint32_t i = 0; i < p.k(); ++i) mass[i] = to_double(p.masses()[i]);
  return ProbabilityVector(std::move(mass));
}

// Ordered list of T distributions over one common support.
template <typename Scalar>
class BasicDistributionSequence {
 public:
  explicit BasicDistributionSequence(
      std::vector<BasicProbabilityVector<Scalar>> dists)
      : dists_(std::move(dists)) {
    if (dists_.empty()) {
      throw std::invalid_argument("distribution sequence: T must be >= 1");
    }
    const std::uint32_t k = dists_.front().k();
    for (const auto& d : dists_) {
      if (d.k() != k) {
        throw std::invalid_argument(
            "distribution sequence: members disagree on support size");
      }
    }
  }

  std::uint32_t T() const { return static_cast<std::uint32_t>(dists_.size()); }
  std::uint32_t k() const { return dists_.front().k(); }

  const BasicProbabilityVector<Scalar>& dist(std::uint32_t t) const {
    return dists_[t - 1];  // 1-based source index
  }
  const std::vector<BasicProbabilityVector<Scalar>>& dists() const {
    return dists_;
  }

 private:
  std::vector<BasicProbabilityVector<Scalar>> dists_;
};

using DistributionSequence = BasicDistributionSequence<double>;
using RationalDistributionSequence = BasicDistributionSequence<Rational>;

// Entrywise mean (1/T) sum_t p_t.
template <typename Scalar>
BasicProbabilityVector<Scalar> average(
    const BasicDistributionSequence<Scalar>& seq) {
  std::vector<Scalar> mass(seq.k(), Scalar(0));
  for (const auto& d : seq.dists()) {
    for (std::uint32_t i = 0; i < seq.k(); ++i) mass[i] += d.masses()[i];
  }
  const Scalar t(seq.T());
  for (Scalar& m : mass) m /= t;
  return BasicProbabilityVector<Scalar>(std::move(mass));
}

template <typename Scalar>
Scalar l1_distance(const BasicProbabilityVector<Scalar>& a,
                   const BasicProbabilityVector<Scalar>& b) {
  if (a.k() != b.k()) {
    throw std::invalid_argument("l1_distance: support size mismatch");
  }
  Scalar total(0);
  for (std::uint32_t i = 0; i < a.k(); ++i) {
    Scalar d = a.masses()[i] - b.masses()[i];
    total += d < Scalar(0) ? Scalar(-d) : d;
  }
  return total;
}

// Total variation distance, (1/2) * l1.
template <typename Scalar>
Scalar tv_distance(const BasicProbabilityVector<Scalar>& a,
                   const BasicProbabilityVector<Scalar>& b) {
  return l1_distance(a, b) / Scalar(2);
}

// sum_i p(i)^order for order 2 or 3; the moment the testers actually use.
inline double power_sum(const ProbabilityVector& p, int order) {
  if (order != 2 && order != 3) {
    throw std::invalid_argument("power_sum: order must be 2 or 3");
  }
  double total = 0.0;
  for (double m : p.masses()) total += order == 2 ? m * m : m * m * m;
  return total;
}

// (sum_i p(i)^order)^(1/order).
inline double lp_norm(const ProbabilityVector& p, int order) {
  return std::pow(power_sum(p, order), 1.0 / order);
}

inline double inner_product(const ProbabilityVector& a,
                            const ProbabilityVector& b) {
  if (a.k() != b.k()) {
    throw std::invalid_argument("inner_product: support size mismatch");
  }
  double total = 0.0;
  for (std::uint32_t i = 0; i < a.k(); ++i) {
    total += a.masses()[i] * b.masses()[i];
  }
  return total;
}

}  // namespace niid
