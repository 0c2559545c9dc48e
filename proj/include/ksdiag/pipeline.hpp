#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ksdiag/bootstrap.hpp"
#include "ksdiag/covariate.hpp"
#include "ksdiag/data_model.hpp"
#include "ksdiag/regime.hpp"

namespace ksdiag {

inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

enum class FinalDiagnosis {
  NoActionSamplingVariation,
  SignificantNoBreach,
  MonitorBreachNotConfirmed,
  ExplainedByComposition,
  ExplainedByCovariateShift,
  ModelDegradationEscalation,
  DegenerateStopped,
};

std::string_view to_string(FinalDiagnosis d);
std::optional<FinalDiagnosis> parse_final_diagnosis(std::string_view text);

/// CLI exit status for a diagnosis: 0 no action / explained, 2 monitor,
/// 3 model degradation, 4 degenerate.
int exit_code(FinalDiagnosis d);

struct Provenance {
  std::string ref_digest;
  std::string cur_digest;
  std::uint64_t seed = 0;
  std::string tool_version{kToolVersion};
};

struct DiagnosticReport {
  GovernanceConfig config;
  /// Absent only when Step 1 itself hit a degenerate input.
  std::optional<Gate1Result> gate1;
  std::optional<DecompositionResult> gate2;
  std::optional<CovariateShiftResult> gate3;
  FinalDiagnosis final_diagnosis = FinalDiagnosis::DegenerateStopped;
  std::vector<std::string> advisory_codes;
  std::vector<std::string> warnings;
  Provenance provenance;

  /// Forced later steps in full-trace mode; never read by the gateways.
  bool full_trace = false;
  std::optional<DecompositionResult> trace_gate2;
  std::optional<CovariateShiftResult> trace_gate3;
};

struct RunOptions {
  bool full_trace = false;
};

/// Runs Step 1 and escalates through Steps 2 to 4 while each gateway says
/// so. Library errors become a DegenerateStopped report with a warning.
DiagnosticReport run_diagnosis(const PeriodSample& ref, const PeriodSample& cur,
                               const GovernanceConfig& config,
                               const RunOptions& options = {});

/// Throws std::logic_error if the optional stages are inconsistent with the
/// gateway results.
void check_report_structure(const DiagnosticReport& report);

nlohmann::json to_json(const DiagnosticReport& report);

/// Rounds to 10 significant digits; non-finite values become null.
nlohmann::json json_real(double value);

}  // namespace ksdiag
