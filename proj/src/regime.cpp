#include "ksdiag/regime.hpp"

#include <algorithm>
#include <set>

#include "ksdiag/error.hpp"

namespace ksdiag {

std::string_view to_string(Gate2Gateway g) {
  return g == Gate2Gateway::ExplainedByComposition ? "EXPLAINED_BY_COMPOSITION"
                                                   : "ESCALATE_TO_STEP3";
}

double MixWeights::weight_for(std::string_view segment) const {
  const auto it = weight.find(segment);
  if (it == weight.end()) {
    throw Error(ErrorCode::EmptyCommonSupport,
                "segment '" + std::string(segment) + "' is not in common support");
  }
  return it->second;
}

namespace {

std::map<std::string, std::size_t, std::less<>> segment_counts(
    const PeriodSample& sample) {
  std::map<std::string, std::size_t, std::less<>> counts;
  for (const Observation& obs : sample.observations()) ++counts[obs.segment];
  return counts;
}

std::size_t count_of(const std::map<std::string, std::size_t, std::less<>>& m,
                     const std::string& key) {
  const auto it = m.find(key);
  return it == m.end() ? 0 : it->second;
}

}  // namespace

SupportPartition partition_support(const PeriodSample& ref,
                                   const PeriodSample& cur,
                                   std::size_t min_segment_count) {
  const auto ref_counts = segment_counts(ref);
  const auto cur_counts = segment_counts(cur);
  std::set<std::string> all;
  for (const auto& [g, n] : ref_counts) all.insert(g);
  for (const auto& [g, n] : cur_counts) all.insert(g);

  SupportPartition part;
  for (const std::string& g : all) {
    const std::size_t n_ref = count_of(ref_counts, g);
    const std::size_t n_cur = count_of(cur_counts, g);
    const bool ref_ok = n_ref >= min_segment_count;
    const bool cur_ok = n_cur >= min_segment_count;
    if (ref_ok && cur_ok) {
      part.common.push_back(g);
    } else if (n_cur == 0) {
      part.ref_only.push_back(g);
    } else if (n_ref == 0) {
      part.cur_only.push_back(g);
    } else if (ref_ok != cur_ok) {
      (ref_ok ? part.ref_only : part.cur_only).push_back(g);
    } else {
      (n_cur > n_ref ? part.cur_only : part.ref_only).push_back(g);
    }
  }
  if (part.common.empty()) {
    throw Error(ErrorCode::EmptyCommonSupport,
                "no segment has at least " + std::to_string(min_segment_count) +
                    " observations in both periods");
  }
  return part;
}

MixWeights compute_mix_weights(const PeriodSample& ref, const PeriodSample& cur,
                               const SupportPartition& part) {
  if (part.common.empty()) {
    throw Error(ErrorCode::EmptyCommonSupport, "common support is empty");
  }
  const auto ref_counts = segment_counts(ref);
  const auto cur_counts = segment_counts(cur);
  std::size_t ref_total = 0;
  std::size_t cur_total = 0;
  for (const std::string& g : part.common) {
    ref_total += count_of(ref_counts, g);
    cur_total += count_of(cur_counts, g);
  }
  MixWeights mix;
  for (const std::string& g : part.common) {
    const double share_ref = static_cast<double>(count_of(ref_counts, g)) /
                             static_cast<double>(ref_total);
    const double share_cur = static_cast<double>(count_of(cur_counts, g)) /
                             static_cast<double>(cur_total);
    if (!(share_ref > 0.0) || !(share_cur > 0.0)) {
      throw Error(ErrorCode::EmptyCommonSupport,
                  "common segment '" + g + "' has no rows in one period");
    }
    mix.shares_ref[g] = share_ref;
    mix.shares_cur[g] = share_cur;
    mix.weight[g] = share_cur / share_ref;
  }
  return mix;
}

std::vector<double> mix_row_weights(const PeriodSample& ref,
                                    const MixWeights& mix) {
  std::vector<double> weights;
  weights.reserve(ref.size());
  for (const Observation& obs : ref.observations()) {
    const auto it = mix.weight.find(obs.segment);
    weights.push_back(it == mix.weight.end() ? 1.0 : it->second);
  }
  return weights;
}

namespace {

std::optional<double> segment_ks(const PeriodSample& sample,
                                 const std::string& segment) {
  std::vector<WeightedScore> goods;
  std::vector<WeightedScore> bads;
  for (const Observation& obs : sample.observations()) {
    if (obs.segment != segment) continue;
    (obs.label == 1 ? bads : goods).push_back({obs.score, 1.0});
  }
  if (goods.empty() || bads.empty()) return std::nullopt;
  return weighted_ks(goods, bads).value;
}

std::vector<SegmentKsRow> segment_table(const PeriodSample& ref,
                                        const PeriodSample& cur) {
  const auto ref_counts = segment_counts(ref);
  const auto cur_counts = segment_counts(cur);
  std::set<std::string> all;
  for (const auto& [g, n] : ref_counts) all.insert(g);
  for (const auto& [g, n] : cur_counts) all.insert(g);
  std::vector<SegmentKsRow> rows;
  for (const std::string& g : all) {
    SegmentKsRow row;
    row.segment = g;
    row.n_ref = count_of(ref_counts, g);
    row.n_cur = count_of(cur_counts, g);
    if (row.n_ref > 0) row.ks_ref = segment_ks(ref, g);
    if (row.n_cur > 0) row.ks_cur = segment_ks(cur, g);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

DecompositionResult decompose(const PeriodSample& ref, const PeriodSample& cur,
                              const GovernanceConfig& config) {
  DecompositionResult r;
  r.partition = partition_support(ref, cur, config.min_segment_count);
  r.mix = compute_mix_weights(ref, cur, r.partition);

  const WeightedSample ref_unit(ref);
  const WeightedSample cur_unit(cur);
  const WeightedSample ref_mix(ref, mix_row_weights(ref, r.mix));
  r.ks_ref = ks_of_sample(ref_unit);
  r.ks_cur = ks_of_sample(cur_unit);
  r.ks_ref_com = ks_of_sample(ref_unit, r.partition.common);
  r.ks_cur_com = ks_of_sample(cur_unit, r.partition.common);
  r.ks_mix_adjusted = ks_of_sample(ref_mix, r.partition.common);

  r.components.cur_only = r.ks_cur.value - r.ks_cur_com.value;
  r.components.residual = r.ks_cur_com.value - r.ks_mix_adjusted.value;
  r.components.mix = r.ks_mix_adjusted.value - r.ks_ref_com.value;
  r.components.ref_only = r.ks_ref_com.value - r.ks_ref.value;

  r.pct_change_total = pct_change(r.ks_ref.value, r.ks_cur.value);
  r.pct_components.cur_only = r.components.cur_only / r.ks_ref.value;
  r.pct_components.residual = r.components.residual / r.ks_ref.value;
  r.pct_components.mix = r.components.mix / r.ks_ref.value;
  r.pct_components.ref_only = r.components.ref_only / r.ks_ref.value;

  if (!(r.ks_mix_adjusted.value > kKsEpsilon)) {
    throw Error(ErrorCode::ZeroMixAdjustedKs,
                "mix-adjusted reference KS is zero; aligned change is undefined");
  }
  r.pct_aligned_residual =
      (r.ks_cur_com.value - r.ks_mix_adjusted.value) / r.ks_mix_adjusted.value;
  r.gateway = r.pct_aligned_residual < config.tau
                  ? Gate2Gateway::EscalateToStep3
                  : Gate2Gateway::ExplainedByComposition;
  r.segment_table = segment_table(ref, cur);
  return r;
}

}  // namespace ksdiag
