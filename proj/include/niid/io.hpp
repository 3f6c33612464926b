#pragma once

#include "niid/batch.hpp"
#include "niid/harness.hpp"
#include "niid/pooled.hpp"
#include "niid/prob.hpp"
#include "niid/verdict.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace niid {

// I/O failures get their own exception so the CLI can map them to the
// dedicated exit code.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace io {

using nlohmann::json;

// --- distribution-sequence JSON: {"k": int, "T": int, "rows": [[...]]} ---

inline json sequence_to_json(const DistributionSequence& seq) {
  json rows = json::array();
  for (const auto& d : seq.dists()) rows.push_back(d.masses());
  return json{{"k", seq.k()}, {"T", seq.T()}, {"rows", std::move(rows)}};
}

inline DistributionSequence sequence_from_json(const json& j) {
  const std::uint32_t k = j.at("k").get<std::uint32_t>();
  const std::uint32_t T = j.at("T").get<std::uint32_t>();
  const json& rows = j.at("rows");
  if (rows.size() != T) {
    throw std::invalid_argument("sequence file: row count differs from T");
  }
  std::vector<ProbabilityVector> dists;
  dists.reserve(T);
  for (const json& row : rows) {
    std::vector<double> mass = row.get<std::vector<double>>();
    if (mass.size() != k) {
      throw std::invalid_argument("sequence file: row length differs from k");
    }
    dists.emplace_back(std::move(mass));
  }
  return DistributionSequence(std::move(dists));
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failure: " + path);
  return buf.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out << content;
  if (!out) throw IoError("write failure: " + path);
}

inline json parse_json(const std::string& text, const std::string& origin) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw std::invalid_argument("invalid JSON: " + origin);
  return j;
}

inline DistributionSequence load_sequence(const std::string& path) {
  return sequence_from_json(parse_json(read_file(path), path));
}

inline void save_sequence(const std::string& path,
                          const DistributionSequence& seq) {
  write_file(path, sequence_to_json(seq).dump() + "\n");
}

// A reference distribution is a sequence file with T = 1.
inline ProbabilityVector load_reference(const std::string& path) {
  DistributionSequence seq = load_sequence(path);
  if (seq.T() != 1) {
    throw std::invalid_argument("reference file must contain exactly one row: " +
                                path);
  }
  return seq.dist(1);
}

// --- sample-batch CSV: header "source,draw_index,value" ---

inline std::string batch_to_csv(const SampleBatch& batch) {
  std::ostringstream out;
  out << "source,draw_index,value\n";
  for (std::uint64_t t = 1; t <= batch.T(); ++t) {
    for (std::uint32_t j = 1; j <= batch.c(); ++j) {
      out << t << ',' << j << ',' << batch.draw(t, j) << '\n';
    }
  }
  return out.str();
}

// k = 0 infers the support size as the maximum observed value.
inline SampleBatch batch_from_csv(const std::string& text, std::uint32_t k) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "source,draw_index,value") {
    throw std::invalid_argument(
        "sample file: expected header 'source,draw_index,value'");
  }
  struct Cell {
    std::uint64_t source;
    std::uint32_t draw;
    std::uint32_t value;
  };
  std::vector<Cell> cells;
  std::uint64_t max_source = 0;
  std::uint32_t max_draw = 0, max_value = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Cell cell{};
    char comma1 = 0, comma2 = 0;
    std::istringstream row(line);
    if (!(row >> cell.source >> comma1 >> cell.draw >> comma2 >> cell.value) ||
        comma1 != ',' || comma2 != ',') {
      throw std::invalid_argument("sample file: malformed line " +
                                  std::to_string(line_no));
    }
    if (cell.source == 0 || cell.draw == 0 || cell.value == 0) {
      throw std::invalid_argument(
          "sample file: source, draw_index and value are 1-based (line " +
          std::to_string(line_no) + ")");
    }
    max_source = std::max(max_source, cell.source);
    max_draw = std::max(max_draw, cell.draw);
    max_value = std::max(max_value, cell.value);
    cells.push_back(cell);
  }
  if (cells.empty()) throw std::invalid_argument("sample file: no rows");
  if (k == 0) k = max_value;

  std::vector<std::uint32_t> draws(max_source * max_draw, 0);
  std::vector<char> seen(max_source * max_draw, 0);
  for (const Cell& cell : cells) {
    const std::size_t idx = (cell.source - 1) * max_draw + (cell.draw - 1);
    if (seen[idx]) {
      throw std::invalid_argument("sample file: duplicate (source, draw_index)");
    }
    seen[idx] = 1;
    draws[idx] = cell.value;
  }
  for (char s : seen) {
    if (!s) {
      throw std::invalid_argument(
          "sample file: ragged batch (every source needs draws 1..c)");
    }
  }
  return SampleBatch(max_source, max_draw, k, std::move(draws));
}

inline SampleBatch load_batch(const std::string& path, std::uint32_t k = 0) {
  return batch_from_csv(read_file(path), k);
}

inline void save_batch(const std::string& path, const SampleBatch& batch) {
  write_file(path, batch_to_csv(batch));
}

// --- verdict JSON ---

inline json verdict_to_json(const Verdict& v) {
  json j{{"statistic", v.statistic},     {"threshold", v.threshold},
         {"decision", to_string(v.decision)}, {"under_sampled", v.under_sampled},
         {"T", v.T},                     {"k", v.k}};
  if (!v.decided_by.empty()) j["decided_by"] = v.decided_by;
  if (v.discarded_odd_sample) j["discarded_odd_sample"] = true;
  return j;
}

// --- fingerprint JSON: {"1": n1, "2": n2, ...} ---

inline json fingerprint_to_json(const FingerprintVector& fp) {
  json j = json::object();
  for (const auto& [mult, count] : fp.counts) {
    j[std::to_string(mult)] = count;
  }
  return j;
}

// --- experiment spec JSON ---

inline ArmSpec arm_from_json(const json& j) {
  ArmSpec arm;
  arm.generator = j.at("generator").get<std::string>();
  arm.params = j.value("params", json::object());
  return arm;
}

inline ExperimentSpec experiment_from_json(const json& j) {
  ExperimentSpec spec;
  spec.kind = j.value("kind", "error-rates");
  spec.trials = j.at("trials").get<std::uint64_t>();
  spec.seed = j.value("seed", 0ULL);
  spec.threads = j.value("threads", 0u);
  if (spec.kind == "error-rates") {
    spec.tester = j.at("tester").get<std::string>();
    spec.k = j.at("k").get<std::uint32_t>();
    spec.epsilon = j.at("epsilon").get<double>();
    spec.alpha_const = j.value("alpha", 0.0);
    spec.c_mean = j.value("c_mean", 1.0);
    spec.t_schedule = j.at("T_schedule").get<std::vector<std::uint64_t>>();
    spec.null_arm = arm_from_json(j.at("null"));
    spec.far_arm = arm_from_json(j.at("far"));
    if (spec.tester == "closeness") {
      spec.null_arm_q = arm_from_json(j.at("null_q"));
      spec.far_arm_q = arm_from_json(j.at("far_q"));
    }
    if (spec.tester == "identity" || spec.tester == "identity-poisson") {
      spec.reference = arm_from_json(j.at("reference"));
    }
  } else if (spec.kind == "verify-moments" || spec.kind == "pooled-contrast") {
    spec.m = j.at("m").get<std::uint32_t>();
    spec.n_blocks = j.at("n_blocks").get<std::uint32_t>();
  } else {
    throw std::invalid_argument("experiment: unknown kind " + spec.kind);
  }
  spec.validate();
  return spec;
}

inline json moment_report_to_json(const MomentReport& r) {
  return json{{"trials", r.trials},
              {"expected_mean", r.expected_mean},
              {"mean_a", r.mean_a},
              {"mean_b", r.mean_b},
              {"se_a", r.se_a},
              {"se_b", r.se_b},
              {"z_mean_diff", r.z_mean_diff},
              {"z_a_vs_expected", r.z_a_vs_expected},
              {"z_b_vs_expected", r.z_b_vs_expected},
              {"cov_a", r.cov_a},
              {"cov_b", r.cov_b},
              {"cov_leading", r.cov_leading},
              {"a_r_block_c3", r.a_r_block_c3}};
}

inline json contrast_report_to_json(const ContrastReport& r) {
  return json{{"trials", r.trials},
              {"T", r.T},
              {"effective_epsilon", r.effective_epsilon},
              {"labeled_required_T", r.labeled_required_T},
              {"labeled_reject_rate_a", r.labeled_reject_rate_a},
              {"labeled_reject_rate_b", r.labeled_reject_rate_b},
              {"labeled_mean_z_a", r.labeled_mean_z_a},
              {"labeled_mean_z_b", r.labeled_mean_z_b},
              {"labeled_separation_z", r.labeled_separation_z},
              {"fp_classifier_accuracy", r.fp_classifier_accuracy},
              {"fp_classifier_threshold", r.fp_classifier_threshold},
              {"fp_separation_z", r.fp_separation_z},
              {"fp_tv_estimate", r.fp_tv_estimate},
              {"fp_hist_a", r.fp_hist_a},
              {"fp_hist_b", r.fp_hist_b}};
}

}  // namespace io
}  // namespace niid
