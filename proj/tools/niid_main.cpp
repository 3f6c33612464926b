// Command-line front end: every tester, the instance generators, the
// learning estimator and the Monte Carlo experiment runner behind one
// binary.
//
// Exit codes: 0 accept / successful generation, 1 reject, 2 usage or
// validation error, 3 I/O error. Reject deliberately maps to 1 so shell
// pipelines can branch on test outcomes.

#include "niid/niid.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitAccept = 0;
constexpr int kExitReject = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("NIID_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 0;
}

void print_verdict(const niid::Verdict& v, bool as_json) {
  if (as_json) {
    std::cout << niid::io::verdict_to_json(v).dump() << "\n";
    return;
  }
  std::cout << "decision:      " << niid::to_string(v.decision) << "\n"
            << "statistic:     " << v.statistic << "\n"
            << "threshold:     " << v.threshold << "\n"
            << "T:             " << v.T << "\n"
            << "k:             " << v.k << "\n"
            << "under_sampled: " << (v.under_sampled ? "true" : "false")
            << "\n";
  if (!v.decided_by.empty()) {
    std::cout << "decided_by:    " << v.decided_by << "\n";
  }
  if (v.discarded_odd_sample) {
    std::cout << "note:          odd pooled sample discarded\n";
  }
}

int verdict_exit(const niid::Verdict& v) {
  return v.decision == niid::Decision::Accept ? kExitAccept : kExitReject;
}

// "out.json" -> "out.a.json"; extensionless paths just get the suffix.
std::string with_suffix(const std::string& path, const std::string& tag) {
  const std::size_t dot = path.rfind('.');
  const std::size_t slash = path.rfind('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return path + "." + tag;
  }
  return path.substr(0, dot) + "." + tag + path.substr(dot);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Property testers for the average of non-identically "
               "distributed samples"};
  app.require_subcommand(1);
  std::uint64_t seed = default_seed();
  app.add_option("--seed", seed, "RNG seed (default: NIID_SEED env or 0)");

  // --- test-uniformity ---
  auto* uni = app.add_subcommand("test-uniformity",
                                 "Collision test for p_avg = Unif(k)");
  std::string uni_samples;
  std::uint32_t uni_k = 0;
  double uni_eps = 0.0, uni_alpha = 2600.0;
  bool uni_json = false;
  uni->add_option("--samples", uni_samples, "sample CSV (c = 2)")->required();
  uni->add_option("--k", uni_k, "support size")->required();
  uni->add_option("--epsilon", uni_eps, "l1 distance parameter")->required();
  uni->add_option("--alpha", uni_alpha, "sample-complexity constant");
  uni->add_flag("--json", uni_json, "JSON verdict on stdout");

  // --- test-identity ---
  auto* ident = app.add_subcommand("test-identity",
                                   "Identity test against a reference");
  std::string ident_samples, ident_reference;
  double ident_eps = 0.0, ident_alpha = 2600.0;
  bool ident_json = false, ident_rational = false;
  ident->add_option("--samples", ident_samples, "sample CSV (c = 2)")
      ->required();
  ident->add_option("--reference", ident_reference,
                    "reference distribution file (T = 1 sequence JSON)")
      ->required();
  ident->add_option("--epsilon", ident_eps, "l1 distance parameter")
      ->required();
  ident->add_option("--alpha", ident_alpha, "sample-complexity constant");
  ident->add_flag("--exact-rational", ident_rational,
                  "build the reduction with exact rational arithmetic");
  ident->add_flag("--json", ident_json, "JSON verdict on stdout");

  // --- test-identity-poisson ---
  auto* poi = app.add_subcommand(
      "test-identity-poisson",
      "Identity test from Poi(c) samples per source, pooled");
  std::string poi_sequence, poi_reference;
  double poi_cmean = 1.0, poi_eps = 0.0, poi_alpha = 2600.0;
  bool poi_json = false;
  poi->add_option("--sequence", poi_sequence, "distribution-sequence JSON")
      ->required();
  poi->add_option("--reference", poi_reference, "reference distribution file")
      ->required();
  poi->add_option("--c-mean", poi_cmean, "Poisson mean per source")
      ->required();
  poi->add_option("--epsilon", poi_eps, "l1 distance parameter")->required();
  poi->add_option("--alpha", poi_alpha, "sample-complexity constant");
  poi->add_flag("--json", poi_json, "JSON verdict on stdout");

  // --- test-closeness ---
  auto* close = app.add_subcommand("test-closeness",
                                   "Closeness test for p_avg = q_avg");
  std::string close_p, close_q;
  std::uint32_t close_k = 0;
  double close_eps = 0.0, close_alpha = 1000.0;
  bool close_json = false;
  close->add_option("--samples-p", close_p, "sample CSV for p (c = 3)")
      ->required();
  close->add_option("--samples-q", close_q, "sample CSV for q (c = 3)")
      ->required();
  close->add_option("--epsilon", close_eps, "l1 distance parameter")
      ->required();
  close->add_option("--k", close_k,
                    "support size (default: max observed value)");
  close->add_option("--alpha", close_alpha, "sample-complexity constant");
  close->add_flag("--json", close_json, "JSON verdict on stdout");

  // --- learn ---
  auto* learn = app.add_subcommand(
      "learn", "Empirical estimate of p_avg from one draw per source");
  std::string learn_samples, learn_out;
  std::uint32_t learn_k = 0;
  bool learn_json = false;
  learn->add_option("--samples", learn_samples, "sample CSV")->required();
  learn->add_option("--k", learn_k, "support size (default: max observed)");
  learn->add_option("--out", learn_out, "write the estimate here (T=1 file)");
  learn->add_flag("--json", learn_json, "JSON estimate on stdout");

  // --- gen-instance ---
  auto* gen = app.add_subcommand("gen-instance",
                                 "Write generated instances as sequence JSON");
  std::string gen_kind, gen_out;
  std::uint32_t gen_k = 0, gen_T = 1, gen_m = 64, gen_nblocks = 64;
  double gen_eps = 0.0;
  gen->add_option("--kind", gen_kind, "c1-pair | pooled-lb | paired-bias")
      ->required();
  gen->add_option("--out", gen_out, "output path")->required();
  gen->add_option("--k", gen_k, "support size (c1-pair, paired-bias)");
  gen->add_option("--T", gen_T, "sources (c1-pair) / tiling count");
  gen->add_option("--m", gen_m, "block size (pooled-lb)");
  gen->add_option("--n-blocks", gen_nblocks, "block count (pooled-lb)");
  gen->add_option("--epsilon", gen_eps, "bias (paired-bias)");

  // --- experiment ---
  auto* exp = app.add_subcommand("experiment",
                                 "Run a Monte Carlo experiment spec");
  std::string exp_spec, exp_out;
  exp->add_option("--spec", exp_spec, "experiment spec JSON")->required();
  exp->add_option("--out", exp_out, "output CSV (or JSON report)")->required();

  // --- fingerprint ---
  auto* fp = app.add_subcommand(
      "fingerprint", "Occurrence fingerprint of a pooled sample file");
  std::string fp_samples;
  std::uint32_t fp_k = 0;
  fp->add_option("--samples", fp_samples, "sample CSV")->required();
  fp->add_option("--k", fp_k, "support size (default: max observed)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    const niid::RngSeed rng{seed, 0};

    if (*uni) {
      niid::SampleBatch batch = niid::io::load_batch(uni_samples, uni_k);
      niid::Verdict v = niid::test_uniformity(
          batch, niid::UniformityParams{uni_k, uni_eps, uni_alpha}, seed);
      print_verdict(v, uni_json);
      return verdict_exit(v);
    }

    if (*ident) {
      niid::ProbabilityVector q = niid::io::load_reference(ident_reference);
      niid::SampleBatch batch = niid::io::load_batch(ident_samples, q.k());
      niid::Verdict v = niid::test_identity(
          batch, q, niid::IdentityParams{ident_eps, ident_alpha, ident_rational},
          rng);
      print_verdict(v, ident_json);
      return verdict_exit(v);
    }

    if (*poi) {
      niid::DistributionSequence seq = niid::io::load_sequence(poi_sequence);
      niid::ProbabilityVector q = niid::io::load_reference(poi_reference);
      if (q.k() != seq.k()) {
        throw std::invalid_argument("sequence and reference disagree on k");
      }
      auto pooled = niid::pool_poissonized(seq, poi_cmean, rng);
      niid::Verdict v = niid::test_identity_poissonized(
          std::move(pooled), q, niid::IdentityParams{poi_eps, poi_alpha, false},
          rng);
      print_verdict(v, poi_json);
      return verdict_exit(v);
    }

    if (*close) {
      niid::SampleBatch bp = niid::io::load_batch(close_p, close_k);
      niid::SampleBatch bq = niid::io::load_batch(close_q, close_k);
      const std::uint32_t k =
          close_k != 0 ? close_k : std::max(bp.k(), bq.k());
      bp = niid::SampleBatch(bp.T(), bp.c(), k, bp.flat());
      bq = niid::SampleBatch(bq.T(), bq.c(), k, bq.flat());
      niid::Verdict v = niid::test_closeness_l1(
          bp, bq, niid::ClosenessParams{k, close_eps, close_alpha}, rng);
      print_verdict(v, close_json);
      return verdict_exit(v);
    }

    if (*learn) {
      niid::SampleBatch batch = niid::io::load_batch(learn_samples, learn_k);
      if (batch.c() > 1) {
        // Reduce to the first draw of every source.
        std::vector<std::uint32_t> first(batch.T());
        for (std::uint64_t t = 1; t <= batch.T(); ++t) {
          first[t - 1] = batch.draw(t, 1);
        }
        batch = niid::SampleBatch(batch.T(), 1, batch.k(), std::move(first));
      }
      niid::ProbabilityVector estimate = niid::learn_average(batch);
      niid::DistributionSequence out(
          std::vector<niid::ProbabilityVector>{estimate});
      if (!learn_out.empty()) niid::io::save_sequence(learn_out, out);
      if (learn_json || learn_out.empty()) {
        std::cout << niid::io::sequence_to_json(out).dump() << "\n";
      }
      return kExitAccept;
    }

    if (*gen) {
      const niid::RngSeed gen_rng{seed, 0};
      if (gen_kind == "paired-bias") {
        if (gen_k == 0) throw std::invalid_argument("paired-bias needs --k");
        niid::ProbabilityVector target = niid::gen_paired_bias(gen_k, gen_eps);
        std::vector<niid::ProbabilityVector> rows(std::max(gen_T, 1u), target);
        niid::io::save_sequence(gen_out,
                                niid::DistributionSequence(std::move(rows)));
        std::cout << gen_out << "\n";
      } else if (gen_kind == "c1-pair") {
        if (gen_k == 0) throw std::invalid_argument("c1-pair needs --k");
        niid::C1InstancePair pair = niid::gen_c1_pair(gen_k, gen_T);
        const std::string d1 = with_suffix(gen_out, "d1");
        const std::string d2 = with_suffix(gen_out, "d2");
        niid::io::save_sequence(d1, pair.draw_d1(gen_rng));
        niid::io::save_sequence(d2, pair.draw_d2(gen_rng));
        std::cout << d1 << "\n" << d2 << "\n";
      } else if (gen_kind == "pooled-lb") {
        niid::LbInstancePair pair =
            niid::gen_pooled_lb_pair(niid::BlockParams{gen_m, gen_nblocks});
        const std::string a = with_suffix(gen_out, "a");
        const std::string b = with_suffix(gen_out, "b");
        niid::io::save_sequence(a, pair.a);
        niid::io::save_sequence(b, pair.b);
        std::cout << a << "\n" << b << "\n";
      } else {
        throw std::invalid_argument("unknown instance kind: " + gen_kind);
      }
      return kExitAccept;
    }

    if (*exp) {
      niid::ExperimentSpec spec = niid::io::experiment_from_json(
          niid::io::parse_json(niid::io::read_file(exp_spec), exp_spec));
      if (spec.seed == 0) spec.seed = seed;
      if (spec.kind == "error-rates") {
        niid::ErrorReport report = niid::run_trials(spec);
        niid::io::write_file(exp_out, niid::to_csv(report));
      } else if (spec.kind == "verify-moments") {
        niid::MomentReport report = niid::verify_moments(
            niid::BlockParams{spec.m, spec.n_blocks}, spec.trials, spec.seed,
            spec.threads);
        niid::io::write_file(
            exp_out, niid::io::moment_report_to_json(report).dump(2) + "\n");
      } else {
        niid::ContrastReport report = niid::pooled_contrast(
            niid::BlockParams{spec.m, spec.n_blocks}, spec.trials, spec.seed,
            spec.threads);
        niid::io::write_file(
            exp_out, niid::io::contrast_report_to_json(report).dump(2) + "\n");
      }
      std::cout << exp_out << "\n";
      return kExitAccept;
    }

    if (*fp) {
      niid::SampleBatch batch = niid::io::load_batch(fp_samples, fp_k);
      niid::FingerprintVector result =
          niid::fingerprint(batch.flat(), batch.k());
      std::cout << niid::io::fingerprint_to_json(result).dump() << "\n";
      return kExitAccept;
    }
  } catch (const niid::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
