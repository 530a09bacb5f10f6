#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mfnls/config.hpp"

namespace mfnls {

struct InvariantResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

/// The invariant battery at small fixed sizes (M in {8, 16}, N in {2, 3}). An injection
/// plants a fault so the corresponding check can be seen to fail.
std::vector<InvariantResult> run_invariants(Injection inject, std::uint64_t seed,
                                            const std::function<void(const InvariantResult&)>& on_result = {});

/// "PASS name value=... threshold=... detail".
std::string format_result(const InvariantResult& r);

}  // namespace mfnls
