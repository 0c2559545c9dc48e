#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ksdiag/data_model.hpp"

namespace ksdiag {

/// A segment is present in a period iff both its share and separation are
/// given for that period. Bads score mean_offset + sep, goods mean_offset,
/// both with unit variance.
struct SegmentSpec {
  std::string name;
  std::optional<double> share_ref;
  std::optional<double> share_cur;
  std::optional<double> sep_ref;
  std::optional<double> sep_cur;
  double mean_offset = 0.0;
  double bad_rate = 0.3;
};

enum class CovariateMode { None, CovariateShiftOnly, ConceptDriftOnly };

std::string_view to_string(CovariateMode mode);

/// Covariate x1 is Gaussian with unit variance; a row is high risk when x1
/// exceeds the (1 - highrisk_share_ref) quantile of the reference law.
/// Under CovariateShiftOnly the current x1 mean moves so the high-risk share
/// becomes highrisk_share_cur; otherwise both periods share one law.
/// x2..xp are independent standard normal noise in both periods.
struct CovariateShiftSpec {
  std::size_t p = 0;
  double highrisk_share_ref = 0.35;
  double highrisk_share_cur = 0.35;
  CovariateMode mode = CovariateMode::None;
  /// Bad-score separation for high-risk rows; segment separation otherwise.
  std::optional<double> highrisk_sep;
};

struct ScenarioSpec {
  std::string name;
  std::vector<SegmentSpec> segments;
  CovariateShiftSpec covariate;
  std::size_t n_ref = 0;
  std::size_t n_cur = 0;
  std::uint64_t seed = 0;

  /// Throws Error(InvalidSpec).
  void validate() const;
};

enum class ScenarioId {
  Step1Case1,
  Step1Case2,
  Step1Case3,
  Step1Case4,
  S2A,
  S2B,
  S2C,
  S2D,
  S3A,
  S3B,
};

std::string_view to_string(ScenarioId id);
std::optional<ScenarioId> parse_scenario_id(std::string_view text);
std::vector<ScenarioId> all_scenarios();

ScenarioSpec builtin_scenario(ScenarioId id, std::uint64_t seed);

struct GeneratedPair {
  PeriodSample ref;
  PeriodSample cur;
};

/// Per row: segment from the period's share vector, label ~ Bernoulli(bad
/// rate), covariates, then the score. Each period draws from its own
/// substream of spec.seed.
GeneratedPair generate(const ScenarioSpec& spec);

/// Standard normal CDF and its inverse.
double normal_cdf(double x);
double normal_quantile(double p);

nlohmann::json to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_from_json(const nlohmann::json& j);

}  // namespace ksdiag
