#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ksdiag/data_model.hpp"
#include "ksdiag/ks.hpp"

namespace ksdiag {

struct SupportPartition {
  SegmentSet common;
  SegmentSet ref_only;
  SegmentSet cur_only;
};

/// Segment shares within common support and the reference reweighting
/// share_cur / share_ref that aligns the reference mix to the current one.
struct MixWeights {
  std::map<std::string, double, std::less<>> shares_ref;
  std::map<std::string, double, std::less<>> shares_cur;
  std::map<std::string, double, std::less<>> weight;

  /// Weight of a common-support segment; throws for any other segment.
  double weight_for(std::string_view segment) const;
};

enum class Gate2Gateway { ExplainedByComposition, EscalateToStep3 };

std::string_view to_string(Gate2Gateway g);

/// Non-normative per-segment drill-down.
struct SegmentKsRow {
  std::string segment;
  std::size_t n_ref = 0;
  std::size_t n_cur = 0;
  std::optional<double> ks_ref;
  std::optional<double> ks_cur;
};

struct ComponentSet {
  double cur_only = 0.0;
  double residual = 0.0;
  double mix = 0.0;
  double ref_only = 0.0;

  double sum() const { return cur_only + residual + mix + ref_only; }
};

struct DecompositionResult {
  SupportPartition partition;
  MixWeights mix;
  KsValue ks_ref;
  KsValue ks_cur;
  KsValue ks_ref_com;
  KsValue ks_cur_com;
  KsValue ks_mix_adjusted;
  /// Absolute KS units; sums to ks_cur - ks_ref.
  ComponentSet components;
  /// components / ks_ref; sums to the observed percentage change.
  ComponentSet pct_components;
  double pct_change_total = 0.0;
  /// (ks_cur_com - ks_mix_adjusted) / ks_mix_adjusted.
  double pct_aligned_residual = 0.0;
  Gate2Gateway gateway = Gate2Gateway::ExplainedByComposition;
  std::vector<SegmentKsRow> segment_table;
};

/// A segment is common when it has at least `min_segment_count` rows in
/// both periods. Any other segment goes to the exclusive set of the period
/// where it has qualifying volume; when neither or both periods qualify it
/// goes to the period with more rows, ties to the reference side. A segment
/// absent from a period is never assigned to that period's set.
/// Throws EmptyCommonSupport.
SupportPartition partition_support(const PeriodSample& ref,
                                   const PeriodSample& cur,
                                   std::size_t min_segment_count);

MixWeights compute_mix_weights(const PeriodSample& ref, const PeriodSample& cur,
                               const SupportPartition& part);

/// Row weights for `ref`: the segment weight on common-support rows and 1
/// elsewhere (those rows are filtered out by every common-support KS).
std::vector<double> mix_row_weights(const PeriodSample& ref,
                                    const MixWeights& mix);

DecompositionResult decompose(const PeriodSample& ref, const PeriodSample& cur,
                              const GovernanceConfig& config);

}  // namespace ksdiag
