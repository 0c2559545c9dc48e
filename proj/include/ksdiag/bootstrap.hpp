#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "ksdiag/data_model.hpp"
#include "ksdiag/rng.hpp"

namespace ksdiag {

/// Step 1 decision table outcomes.
enum class Gate1Class {
  NoDeterioration,
  SignificantNoBreach,
  BreachNotConfirmed,
  ConfirmedBreach,
};

std::string_view to_string(Gate1Class c);

struct Gate1Result {
  double ks_ref = 0.0;
  double ks_cur = 0.0;
  double pct_change_observed = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  Gate1Class classification = Gate1Class::NoDeterioration;
  std::size_t replicates_requested = 0;
  std::size_t replicates_used = 0;
  std::size_t replicates_dropped = 0;
  /// More than 1% of replicates had a zero reference KS.
  bool dropped_warning = false;
  /// The interval fell in a cell the four-row decision table leaves open.
  bool outside_decision_table = false;
  /// Replicate values in index order, degenerate replicates removed.
  std::vector<double> distribution;
};

/// Resamples goods and bads separately with replacement, keeping both class
/// counts. Output lists the resampled goods first, then the bads.
PeriodSample stratified_resample(const PeriodSample& sample, Rng& rng);

struct BootstrapDistribution {
  std::vector<double> values;
  std::size_t dropped = 0;
};

/// Percentage KS change for replicates b = 0..B-1. Replicate b uses the
/// substream (seed, Bootstrap, b) to resample the reference period and then
/// the current period, so the output does not depend on config.parallelism.
/// Replicates whose reference KS is zero are dropped and counted.
/// Throws AllReplicatesDegenerate when nothing survives.
BootstrapDistribution bootstrap_distribution(const PeriodSample& ref,
                                             const PeriodSample& cur,
                                             const GovernanceConfig& config);

/// Linear interpolation between order statistics at alpha/2 and 1 - alpha/2.
std::pair<double, double> percentile_ci(std::span<const double> values,
                                        double alpha);

/// Empirical quantile with linear interpolation between order statistics:
/// h = (n - 1) p, Q = x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]).
/// `sorted` must be ascending and non-empty.
double interpolated_quantile(std::span<const double> sorted, double p);

Gate1Class classify_gate1(double ci_low, double ci_high, double tau);

/// True for intervals the decision table does not list explicitly: entirely
/// at or above zero, or reaching zero while also dipping to tau.
bool outside_decision_table(double ci_low, double ci_high, double tau);

Gate1Result run_gate1(const PeriodSample& ref, const PeriodSample& cur,
                      const GovernanceConfig& config);

}  // namespace ksdiag
