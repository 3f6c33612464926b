#pragma once

#include <cstdint>
#include <string>

namespace niid {

enum class Decision { Accept, Reject };

inline const char* to_string(Decision d) {
  return d == Decision::Accept ? "accept" : "reject";
}

// Outcome of any tester: the statistic it computed, the threshold it was
// compared against, the binary decision, and enough run metadata to
// reproduce the call. `under_sampled` flags runs below the tester's
// sample-size requirement; such verdicts are still produced so error-vs-T
// curves can be charted below the guarantee.
struct Verdict {
  double statistic = 0.0;
  double threshold = 0.0;
  Decision decision = Decision::Accept;
  bool under_sampled = false;

  std::uint64_t T = 0;
  std::uint32_t k = 0;
  std::uint32_t c = 0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;

  std::string decided_by;             // closeness: "heavy" or "l2"
  bool discarded_odd_sample = false;  // poissonized pairing remainder
};

}  // namespace niid
