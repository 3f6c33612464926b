#pragma once

#include "niid/closeness.hpp"
#include "niid/identity.hpp"
#include "niid/instances.hpp"
#include "niid/pooled.hpp"
#include "niid/stats.hpp"
#include "niid/uniformity.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace niid {

// ---------------------------------------------------------------------------
// Deterministic parallel trials: any thread may execute any index, results
// land in index-order slots, so worker count and completion order never
// change a report.
// ---------------------------------------------------------------------------

template <typename Fn>
void parallel_for(std::uint64_t n, unsigned threads, Fn&& fn) {
  if (threads == 0) {
    threads = std::max(1u, std::thread::hardware_concurrency());
  }
  threads = static_cast<unsigned>(
      std::min<std::uint64_t>(threads, std::max<std::uint64_t>(n, 1)));
  if (threads <= 1) {
    for (std::uint64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::uint64_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Experiment specification (mirrors the JSON schema the CLI consumes).
// ---------------------------------------------------------------------------

struct ArmSpec {
  std::string generator;
  nlohmann::json params = nlohmann::json::object();
};

struct ExperimentSpec {
  std::string kind = "error-rates";  // error-rates | verify-moments | pooled-contrast

  // error-rates fields
  std::string tester;  // uniformity | identity | identity-poisson | closeness
  std::uint32_t k = 0;
  double epsilon = 0.0;
  double alpha_const = 0.0;  // 0 -> tester default
  double c_mean = 1.0;       // identity-poisson only
  ArmSpec null_arm, far_arm;
  ArmSpec null_arm_q, far_arm_q;  // closeness: q-side generators
  ArmSpec reference;              // identity testers: the reference q

  // verify-moments / pooled-contrast fields
  std::uint32_t m = 0;
  std::uint32_t n_blocks = 0;

  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> t_schedule;
  unsigned threads = 0;  // 0 = hardware concurrency

  void validate() const {
    if (trials == 0) {
      throw std::invalid_argument("experiment: trials must be >= 1");
    }
    for (std::size_t i = 1; i < t_schedule.size(); ++i) {
      if (t_schedule[i] <= t_schedule[i - 1]) {
        throw std::invalid_argument(
            "experiment: T schedule must be strictly increasing");
      }
    }
  }
};

struct ErrorRow {
  std::uint64_t T = 0;
  std::uint64_t trials = 0;
  double type1 = 0, type1_lo = 0, type1_hi = 0;
  double type2 = 0, type2_lo = 0, type2_hi = 0;
  double mean_stat = 0;       // over the null arm
  double mean_threshold = 0;  // over the null arm
  double seconds = 0;         // wall time, the one non-deterministic column
};

struct ErrorReport {
  std::vector<ErrorRow> rows;
};

inline std::string to_csv(const ErrorReport& report) {
  std::ostringstream out;
  out << "T,trials,type1,type1_lo,type1_hi,type2,type2_lo,type2_hi,"
         "mean_stat,mean_threshold,seconds\n";
  char buf[512];
  for (const ErrorRow& r : report.rows) {
    std::snprintf(buf, sizeof(buf),
                  "%llu,%llu,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,"
                  "%.3f\n",
                  static_cast<unsigned long long>(r.T),
                  static_cast<unsigned long long>(r.trials), r.type1,
                  r.type1_lo, r.type1_hi, r.type2, r.type2_lo, r.type2_hi,
                  r.mean_stat, r.mean_threshold, r.seconds);
    out << buf;
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Generator registry.
// ---------------------------------------------------------------------------

// A sequence source for one experiment arm. Fixed sources build their
// sampler once per (T, arm); random instances rebuild per trial.
struct SequenceSource {
  bool per_trial = false;
  std::function<SequenceSampler(std::uint64_t T, const RngSeed& seed)> make;
  std::function<void(std::uint64_t T)> check;  // T-schedule preconditions
};

namespace detail {

inline ProbabilityVector rotated(ProbabilityVector p, std::uint32_t shift) {
  if (shift == 0) return p;
  std::vector<double> mass(p.masses());
  std::rotate(mass.begin(), mass.begin() + (shift % mass.size()), mass.end());
  return ProbabilityVector(std::move(mass));
}

inline ProbabilityVector shifted_by_halves(const ProbabilityVector& base,
                                           double delta, int sign) {
  const std::uint32_t k = base.k();
  if (k % 2 != 0) {
    throw std::invalid_argument("split generator: k must be even");
  }
  std::vector<double> mass(base.masses());
  for (std::uint32_t i = 0; i < k; ++i) {
    mass[i] += sign * (i < k / 2 ? delta : -delta) / k;
  }
  return ProbabilityVector(std::move(mass));
}

}  // namespace detail

// Single-distribution registry (references, bases for split sequences).
inline ProbabilityVector make_reference_distribution(
    const std::string& id, const nlohmann::json& params, std::uint32_t k) {
  if (id == "uniform") {
    return ProbabilityVector::uniform(k);
  }
  if (id == "paired-bias") {
    return detail::rotated(
        gen_paired_bias(k, params.value("bias", 0.0)),
        params.value("rotate", 0u));
  }
  if (id == "explicit") {
    std::vector<double> mass = params.at("mass").get<std::vector<double>>();
    if (mass.size() != k) {
      throw std::invalid_argument("explicit distribution: wrong support size");
    }
    return ProbabilityVector(std::move(mass));
  }
  throw std::invalid_argument("unknown distribution generator: " + id);
}

// Sequence-generator registry for error-rate arms.
//   uniform            T copies of Unif(k)
//   paired-bias        T copies of the paired-bias target (bias, rotate)
//   paired-bias-split  alternating base +/- a half-support perturbation
//                      (bias, rotate, delta); avg is exactly the base
//   c1-d1 / c1-d2      fresh Appendix-style c=1 instances per trial
inline SequenceSource make_sequence_source(const std::string& id,
                                           const nlohmann::json& params,
                                           std::uint32_t k) {
  SequenceSource src;
  if (id == "uniform" || id == "paired-bias") {
    ProbabilityVector row = make_reference_distribution(id, params, k);
    src.per_trial = false;
    src.make = [row](std::uint64_t T, const RngSeed&) {
      return SequenceSampler(std::vector<ProbabilityVector>{row}, T);
    };
    src.check = [](std::uint64_t) {};
    return src;
  }
  if (id == "paired-bias-split") {
    ProbabilityVector base = make_reference_distribution(
        "paired-bias", params, k);
    const double delta = params.value("delta", 0.0);
    std::vector<ProbabilityVector> rows{
        detail::shifted_by_halves(base, delta, +1),
        detail::shifted_by_halves(base, delta, -1)};
    src.per_trial = false;
    src.make = [rows](std::uint64_t T, const RngSeed&) {
      return SequenceSampler(rows, T);
    };
    src.check = [](std::uint64_t T) {
      if (T % 2 != 0) {
        throw std::invalid_argument("paired-bias-split: T must be even");
      }
    };
    return src;
  }
  if (id == "c1-d1" || id == "c1-d2") {
    const bool point_mass = (id == "c1-d2");
    src.per_trial = true;
    src.make = [k, point_mass](std::uint64_t T, const RngSeed& seed) {
      C1InstancePair pair = gen_c1_pair(k, static_cast<std::uint32_t>(T));
      if (pair.k != k) {
        throw std::invalid_argument(
            "c1 instances need k to be a power of two");
      }
      return SequenceSampler(pair.draw(seed, point_mass));
    };
    src.check = [k](std::uint64_t T) {
      gen_c1_pair(k, static_cast<std::uint32_t>(T));  // validates T <= k/2
    };
    return src;
  }
  throw std::invalid_argument("unknown sequence generator: " + id);
}

// ---------------------------------------------------------------------------
// run_trials: type I / type II error rates over a T schedule.
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t arm_seed(std::uint64_t base, std::uint64_t arm,
                              std::uint64_t T) {
  return base ^ mix64(arm + 0x5851f42d4c957f2dULL) ^ mix64(T);
}

struct TrialOutcome {
  bool reject = false;
  double stat = 0.0;
  double threshold = 0.0;
};

// Streaming uniformity trial; consumes exactly the streams that
// draw_batch + test_uniformity would, so trials reproduce single calls.
inline TrialOutcome uniformity_trial(const SequenceSampler& sampler,
                                     std::uint64_t T,
                                     const UniformityParams& params,
                                     const RngSeed& seed) {
  CollisionAccumulator acc(params.k);
  for (std::uint64_t t = 1; t <= T; ++t) {
    SplitMix64 g = seed.source_stream(t);
    const CategoricalSampler& s = sampler.sampler_for(t);
    std::uint32_t x1 = s.draw(g);
    std::uint32_t x2 = s.draw(g);
    acc.add_pair(x1, x2);
  }
  Verdict v = make_uniformity_verdict(acc.statistic(), T, params, seed.seed);
  return {v.decision == Decision::Reject, v.statistic, v.threshold};
}

inline TrialOutcome identity_trial(const SequenceSampler& sampler,
                                   std::uint64_t T, const ReductionMap& map,
                                   const UniformityParams& inner,
                                   const RngSeed& seed) {
  CollisionAccumulator acc(map.k_prime);
  for (std::uint64_t t = 1; t <= T; ++t) {
    SplitMix64 gd = seed.source_stream(t);
    const CategoricalSampler& s = sampler.sampler_for(t);
    std::uint32_t x1 = s.draw(gd);
    std::uint32_t x2 = s.draw(gd);
    SplitMix64 gm = seed.stream(kMapStreamPurpose, t);
    acc.add_pair(map_sample(map, x1, gm), map_sample(map, x2, gm));
  }
  Verdict v = make_uniformity_verdict(acc.statistic(), T, inner, seed.seed);
  return {v.decision == Decision::Reject, v.statistic, v.threshold};
}

}  // namespace detail

inline ErrorReport run_trials(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.kind != "error-rates") {
    throw std::invalid_argument("run_trials: kind must be error-rates");
  }
  if (spec.t_schedule.empty()) {
    throw std::invalid_argument("run_trials: empty T schedule");
  }

  const bool is_closeness = spec.tester == "closeness";
  const bool is_identity = spec.tester == "identity";
  const bool is_poisson = spec.tester == "identity-poisson";
  const bool is_uniformity = spec.tester == "uniformity";
  if (!is_closeness && !is_identity && !is_poisson && !is_uniformity) {
    throw std::invalid_argument("unknown tester: " + spec.tester);
  }

  SequenceSource sources[2] = {
      make_sequence_source(spec.null_arm.generator, spec.null_arm.params,
                           spec.k),
      make_sequence_source(spec.far_arm.generator, spec.far_arm.params,
                           spec.k)};
  SequenceSource sources_q[2];
  if (is_closeness) {
    sources_q[0] = make_sequence_source(spec.null_arm_q.generator,
                                        spec.null_arm_q.params, spec.k);
    sources_q[1] = make_sequence_source(spec.far_arm_q.generator,
                                        spec.far_arm_q.params, spec.k);
  }

  ProbabilityVector reference = ProbabilityVector::uniform(std::max(spec.k, 1u));
  ReductionMap reduction;
  UniformityParams inner_params;
  UniformityParams uniformity_params;
  ClosenessParams closeness_params;
  IdentityParams identity_params;
  if (is_identity || is_poisson) {
    reference = make_reference_distribution(spec.reference.generator,
                                            spec.reference.params, spec.k);
    identity_params.epsilon = spec.epsilon;
    if (spec.alpha_const > 0) identity_params.alpha_const = spec.alpha_const;
    reduction = build_reduction(reference);
    inner_params = UniformityParams{4 * spec.k, spec.epsilon / 4.0,
                                    identity_params.alpha_const};
    inner_params.validate();
  } else if (is_uniformity) {
    uniformity_params =
        UniformityParams{spec.k, spec.epsilon,
                         spec.alpha_const > 0 ? spec.alpha_const : 2600.0};
    uniformity_params.validate();
  } else {
    closeness_params =
        ClosenessParams{spec.k, spec.epsilon,
                        spec.alpha_const > 0 ? spec.alpha_const : 1000.0};
    closeness_params.validate();
  }

  ErrorReport report;
  for (std::uint64_t T : spec.t_schedule) {
    for (int arm = 0; arm < 2; ++arm) {
      sources[arm].check(T);
      if (is_closeness) sources_q[arm].check(T);
    }

    const auto start = std::chrono::steady_clock::now();
    ErrorRow row;
    row.T = T;
    row.trials = spec.trials;

    std::uint64_t rejects[2] = {0, 0};
    MomentAccumulator null_stat, null_threshold;

    for (int arm = 0; arm < 2; ++arm) {
      const std::uint64_t base =
          detail::arm_seed(spec.seed, static_cast<std::uint64_t>(arm), T);
      const std::uint64_t base_q = detail::arm_seed(
          spec.seed, static_cast<std::uint64_t>(arm) + 2, T);

      // Fixed arms share one sampler across trials.
      std::unique_ptr<SequenceSampler> fixed, fixed_q;
      if (!sources[arm].per_trial) {
        fixed = std::make_unique<SequenceSampler>(
            sources[arm].make(T, RngSeed{base, 0}));
      }
      if (is_closeness && !sources_q[arm].per_trial) {
        fixed_q = std::make_unique<SequenceSampler>(
            sources_q[arm].make(T, RngSeed{base_q, 0}));
      }

      std::vector<detail::TrialOutcome> outcomes(spec.trials);
      parallel_for(spec.trials, spec.threads, [&](std::uint64_t trial) {
        RngSeed seed{base, trial};
        const SequenceSampler* sampler = fixed.get();
        std::unique_ptr<SequenceSampler> own;
        if (!sampler) {
          own = std::make_unique<SequenceSampler>(
              sources[arm].make(T, seed));
          sampler = own.get();
        }
        if (is_uniformity) {
          outcomes[trial] =
              detail::uniformity_trial(*sampler, T, uniformity_params, seed);
        } else if (is_identity) {
          outcomes[trial] =
              detail::identity_trial(*sampler, T, reduction, inner_params,
                                     seed);
        } else if (is_poisson) {
          auto pooled = pool_poissonized(*sampler, spec.c_mean, seed);
          Verdict v = test_identity_poissonized(std::move(pooled), reference,
                                                identity_params, seed);
          outcomes[trial] = {v.decision == Decision::Reject, v.statistic,
                             v.threshold};
        } else {
          RngSeed seed_q{base_q, trial};
          const SequenceSampler* sampler_q = fixed_q.get();
          std::unique_ptr<SequenceSampler> own_q;
          if (!sampler_q) {
            own_q = std::make_unique<SequenceSampler>(
                sources_q[arm].make(T, seed_q));
            sampler_q = own_q.get();
          }
          SampleBatch bp = sampler->draw_batch(3, seed);
          SampleBatch bq = sampler_q->draw_batch(3, seed_q);
          Verdict v = test_closeness_l1(bp, bq, closeness_params, seed);
          outcomes[trial] = {v.decision == Decision::Reject, v.statistic,
                             v.threshold};
        }
      });

      for (const auto& o : outcomes) {
        rejects[arm] += o.reject ? 1 : 0;
        if (arm == 0) {
          null_stat.add(o.stat);
          null_threshold.add(o.threshold);
        }
      }
    }

    row.type1 =
        static_cast<double>(rejects[0]) / static_cast<double>(spec.trials);
    row.type2 = static_cast<double>(spec.trials - rejects[1]) /
                static_cast<double>(spec.trials);
    const WilsonInterval w1 = wilson_interval(rejects[0], spec.trials);
    const WilsonInterval w2 =
        wilson_interval(spec.trials - rejects[1], spec.trials);
    row.type1_lo = w1.lo;
    row.type1_hi = w1.hi;
    row.type2_lo = w2.lo;
    row.type2_hi = w2.hi;
    row.mean_stat = null_stat.mean();
    row.mean_threshold = null_threshold.mean();
    row.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    report.rows.push_back(row);
  }
  return report;
}

// ---------------------------------------------------------------------------
// verify_moments: empirical collision-vector moments of the lower-bound
// pair against the exact per-block expectations.
// ---------------------------------------------------------------------------

struct MomentReport {
  std::uint64_t trials = 0;
  std::array<double, 3> expected_mean{};  // n * (3/4 E[C_p] + 1/4 E[C_r])
  std::array<double, 3> mean_a{}, mean_b{};
  std::array<double, 3> se_a{}, se_b{};
  std::array<double, 3> z_mean_diff{};        // a vs b
  std::array<double, 3> z_a_vs_expected{};
  std::array<double, 3> z_b_vs_expected{};
  std::array<std::array<double, 3>, 3> cov_a{}, cov_b{};
  std::array<std::array<double, 3>, 3> cov_leading{};  // n * leading term
  // r-blocks can never produce 3-way collisions for the a-sequence.
  std::uint64_t a_r_block_c3 = 0;
};

namespace detail {

struct VectorMoments {
  std::array<MomentAccumulator, 3> comp;
  std::array<std::array<double, 3>, 3> cross{};  // sums of products
  std::uint64_t n = 0;

  void add(const std::array<double, 3>& x) {
    ++n;
    for (int i = 0; i < 3; ++i) {
      comp[i].add(x[i]);
      for (int j = 0; j < 3; ++j) cross[i][j] += x[i] * x[j];
    }
  }

  std::array<std::array<double, 3>, 3> covariance() const {
    std::array<std::array<double, 3>, 3> cov{};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        cov[i][j] = cross[i][j] / static_cast<double>(n) -
                    comp[i].mean() * comp[j].mean();
      }
    }
    return cov;
  }
};

}  // namespace detail

inline MomentReport verify_moments(const BlockParams& params,
                                   std::uint64_t trials, std::uint64_t seed,
                                   unsigned threads = 0) {
  params.validate();
  LbInstancePair pair = gen_pooled_lb_pair(params);
  SequenceSampler sampler_a(pair.a), sampler_b(pair.b);
  const std::uint32_t n = params.n_blocks;

  MomentReport report;
  report.trials = trials;
  const auto ep = expected_block_collisions('p', params.m);
  const auto er = expected_block_collisions('r', params.m);
  for (int i = 0; i < 3; ++i) {
    report.expected_mean[i] =
        n * (kBlockAlphaMix * ep[i] + (1.0 - kBlockAlphaMix) * er[i]);
  }
  const auto lead = expected_cov_leading(params.m);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) report.cov_leading[i][j] = n * lead[i][j];
  }

  struct TrialCounts {
    std::array<double, 3> a{}, b{};
    std::uint64_t a_r_c3 = 0;
  };
  std::vector<TrialCounts> outcomes(trials);
  const std::uint32_t r_block_first =
      3 * n / 4 * params.m + 1;  // first support element of the r-blocks

  parallel_for(trials, threads, [&](std::uint64_t trial) {
    TrialCounts tc;
    std::vector<std::uint32_t> pooled;
    for (int which = 0; which < 2; ++which) {
      const SequenceSampler& s = which == 0 ? sampler_a : sampler_b;
      RngSeed rs{seed ^ detail::mix64(0xace1 + which), trial};
      pooled.clear();
      for (std::uint64_t t = 1; t <= s.T(); ++t) {
        SplitMix64 g = rs.source_stream(t);
        pooled.push_back(s.sampler_for(t).draw(g));
        pooled.push_back(s.sampler_for(t).draw(g));
      }
      CollisionVector cv = collision_counts(pooled, s.k());
      auto& dest = which == 0 ? tc.a : tc.b;
      dest = {static_cast<double>(cv.c2), static_cast<double>(cv.c3),
              static_cast<double>(cv.c4)};
      if (which == 0) {
        std::vector<std::uint32_t> r_part;
        for (std::uint32_t v : pooled) {
          if (v >= r_block_first) r_part.push_back(v);
        }
        tc.a_r_c3 += collision_counts(r_part, s.k()).c3;
      }
    }
    outcomes[trial] = tc;
  });

  detail::VectorMoments ma, mb;
  for (const TrialCounts& tc : outcomes) {
    ma.add(tc.a);
    mb.add(tc.b);
    report.a_r_block_c3 += tc.a_r_c3;
  }
  for (int i = 0; i < 3; ++i) {
    report.mean_a[i] = ma.comp[i].mean();
    report.mean_b[i] = mb.comp[i].mean();
    report.se_a[i] = ma.comp[i].stderr_of_mean();
    report.se_b[i] = mb.comp[i].stderr_of_mean();
    report.z_mean_diff[i] = mean_difference_zscore(ma.comp[i], mb.comp[i]);
    const double sa = report.se_a[i], sb = report.se_b[i];
    report.z_a_vs_expected[i] =
        sa == 0.0 ? 0.0 : (report.mean_a[i] - report.expected_mean[i]) / sa;
    report.z_b_vs_expected[i] =
        sb == 0.0 ? 0.0 : (report.mean_b[i] - report.expected_mean[i]) / sb;
  }
  report.cov_a = ma.covariance();
  report.cov_b = mb.covariance();
  return report;
}

// ---------------------------------------------------------------------------
// pooled_contrast: the labeled collision tester versus a label-blind
// fingerprint classifier on the same draws.
// ---------------------------------------------------------------------------

struct ContrastReport {
  std::uint64_t trials = 0;
  double effective_epsilon = 0.0;      // l1 gap of the construction
  std::uint64_t labeled_required_T = 0;  // guarantee threshold, default alpha
  std::uint64_t T = 0;

  double labeled_reject_rate_a = 0.0;  // type I of the labeled tester
  double labeled_reject_rate_b = 0.0;  // power of the labeled tester
  double labeled_mean_z_a = 0.0, labeled_mean_z_b = 0.0;
  double labeled_separation_z = 0.0;  // z-score between the arm means of Z

  // Best-effort label-blind classifier: threshold the pooled 2-way
  // fingerprint count at the midpoint of the two arms' in-sample means.
  double fp_classifier_accuracy = 0.0;
  double fp_classifier_threshold = 0.0;
  double fp_separation_z = 0.0;  // z-score between the arm means of n2
  double fp_tv_estimate = 0.0;   // plug-in TV between (n2,n3,n4) histograms
  std::map<std::string, std::uint64_t> fp_hist_a, fp_hist_b;
};

inline ContrastReport pooled_contrast(const BlockParams& params,
                                      std::uint64_t trials, std::uint64_t seed,
                                      unsigned threads = 0) {
  params.validate();
  LbInstancePair pair = gen_pooled_lb_pair(params);
  SequenceSampler sampler_a(pair.a), sampler_b(pair.b);
  const std::uint32_t k = params.k();
  const std::uint64_t T = params.T();

  ContrastReport report;
  report.trials = trials;
  report.T = T;
  report.effective_epsilon = 2.0 * lb_pair_b_tv();  // l1 scale
  UniformityParams up{k, report.effective_epsilon, 2600.0};
  report.labeled_required_T = required_T(up);

  struct TrialResult {
    double z = 0.0;
    bool reject = false;
    std::int64_t n2 = 0, n3 = 0, n4 = 0;
  };
  std::vector<TrialResult> results[2];
  results[0].resize(trials);
  results[1].resize(trials);

  parallel_for(trials, threads, [&](std::uint64_t trial) {
    for (int which = 0; which < 2; ++which) {
      const SequenceSampler& s = which == 0 ? sampler_a : sampler_b;
      RngSeed rs{seed ^ detail::mix64(0xbeef + which), trial};
      CollisionAccumulator acc(k);
      std::vector<std::uint32_t> pooled;
      pooled.reserve(2 * T);
      for (std::uint64_t t = 1; t <= T; ++t) {
        SplitMix64 g = rs.source_stream(t);
        std::uint32_t x1 = s.sampler_for(t).draw(g);
        std::uint32_t x2 = s.sampler_for(t).draw(g);
        acc.add_pair(x1, x2);
        pooled.push_back(x1);
        pooled.push_back(x2);
      }
      TrialResult tr;
      tr.z = acc.statistic();
      Verdict v = make_uniformity_verdict(tr.z, T, up, rs.seed);
      tr.reject = v.decision == Decision::Reject;
      FingerprintVector fp = fingerprint(pooled, k);
      auto get = [&](std::uint64_t mult) {
        auto it = fp.counts.find(mult);
        return it == fp.counts.end() ? 0 : static_cast<std::int64_t>(it->second);
      };
      tr.n2 = get(2);
      tr.n3 = get(3);
      tr.n4 = get(4);
      results[which][trial] = tr;
    }
  });

  MomentAccumulator z_a, z_b, n2_a, n2_b;
  std::uint64_t rejects_a = 0, rejects_b = 0;
  for (std::uint64_t i = 0; i < trials; ++i) {
    z_a.add(results[0][i].z);
    z_b.add(results[1][i].z);
    n2_a.add(static_cast<double>(results[0][i].n2));
    n2_b.add(static_cast<double>(results[1][i].n2));
    rejects_a += results[0][i].reject;
    rejects_b += results[1][i].reject;
    auto key = [](const TrialResult& t) {
      return std::to_string(t.n2) + "," + std::to_string(t.n3) + "," +
             std::to_string(t.n4);
    };
    ++report.fp_hist_a[key(results[0][i])];
    ++report.fp_hist_b[key(results[1][i])];
  }
  report.labeled_reject_rate_a =
      static_cast<double>(rejects_a) / static_cast<double>(trials);
  report.labeled_reject_rate_b =
      static_cast<double>(rejects_b) / static_cast<double>(trials);
  report.labeled_mean_z_a = z_a.mean();
  report.labeled_mean_z_b = z_b.mean();
  report.labeled_separation_z = mean_difference_zscore(z_b, z_a);

  report.fp_classifier_threshold = 0.5 * (n2_a.mean() + n2_b.mean());
  const bool b_higher = n2_b.mean() >= n2_a.mean();
  std::uint64_t correct = 0;
  for (std::uint64_t i = 0; i < trials; ++i) {
    const double va = static_cast<double>(results[0][i].n2);
    const double vb = static_cast<double>(results[1][i].n2);
    const double thr = report.fp_classifier_threshold;
    correct += (b_higher ? va < thr : va >= thr) ? 1 : 0;
    correct += (b_higher ? vb >= thr : vb < thr) ? 1 : 0;
  }
  report.fp_classifier_accuracy =
      static_cast<double>(correct) / static_cast<double>(2 * trials);
  report.fp_separation_z = mean_difference_zscore(n2_b, n2_a);

  double tv = 0.0;
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> joined;
  for (const auto& [key, c] : report.fp_hist_a) joined[key].first = c;
  for (const auto& [key, c] : report.fp_hist_b) joined[key].second = c;
  for (const auto& [key, counts] : joined) {
    tv += std::abs(static_cast<double>(counts.first) -
                   static_cast<double>(counts.second));
  }
  report.fp_tv_estimate = 0.5 * tv / static_cast<double>(trials);
  return report;
}

}  // namespace niid
