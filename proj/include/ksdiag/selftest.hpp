#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace ksdiag {

struct SelftestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelftestResult {
  std::vector<SelftestCheck> checks;
  /// Full-trace report for every built-in scenario, keyed by scenario id.
  nlohmann::json reports;

  bool all_passed() const;
};

/// Runs every built-in scenario through the pipeline (B = 1000, tau = -0.20,
/// alpha = 0.05, full trace) and checks each against its tolerance band.
SelftestResult run_selftest(std::uint64_t seed, std::size_t parallelism);

}  // namespace ksdiag
