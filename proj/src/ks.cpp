#include "ksdiag/ks.hpp"

#include <algorithm>

namespace ksdiag {

namespace {

struct SortedClass {
  std::vector<double> scores;
  std::vector<double> weights;
};

SortedClass sort_class(std::span<const WeightedScore> values) {
  std::vector<WeightedScore> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const WeightedScore& a, const WeightedScore& b) {
              return a.score < b.score ||
                     (a.score == b.score && a.weight < b.weight);
            });
  SortedClass out;
  out.scores.reserve(sorted.size());
  out.weights.reserve(sorted.size());
  for (const WeightedScore& v : sorted) {
    out.scores.push_back(v.score);
    out.weights.push_back(v.weight);
  }
  return out;
}

void check_class(std::span<const WeightedScore> values, const char* name) {
  if (values.empty()) {
    throw Error(ErrorCode::EmptyClass, std::string(name) + " class is empty");
  }
  for (const WeightedScore& v : values) {
    if (!(v.weight > 0.0) || !std::isfinite(v.weight)) {
      throw Error(ErrorCode::NonPositiveWeight,
                  std::string(name) + " class has a non-positive weight");
    }
  }
}

}  // namespace

KsValue weighted_ks(std::span<const WeightedScore> goods,
                    std::span<const WeightedScore> bads) {
  check_class(goods, "good");
  check_class(bads, "bad");
  const SortedClass g = sort_class(goods);
  const SortedClass b = sort_class(bads);
  return detail::sorted_ks<double>(g.scores, g.weights, b.scores, b.weights);
}

KsValue ks_of_sample(const WeightedSample& sample,
                     const std::optional<SegmentSet>& restrict_to) {
  const bool filtered = restrict_to.has_value();
  SegmentSet keep = filtered ? *restrict_to : SegmentSet{};
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  std::vector<WeightedScore> goods;
  std::vector<WeightedScore> bads;
  const auto observations = sample.base().observations();
  const auto weights = sample.weights();
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const Observation& obs = observations[i];
    if (filtered && !std::binary_search(keep.begin(), keep.end(), obs.segment)) {
      continue;
    }
    (obs.label == 1 ? bads : goods).push_back({obs.score, weights[i]});
  }
  if (goods.empty() || bads.empty()) {
    throw Error(ErrorCode::EmptyClassAfterFilter,
                std::string(to_string(sample.base().period())) +
                    " sample has an empty class after segment filtering");
  }
  return weighted_ks(goods, bads);
}

double pct_change(double ks_ref, double ks_cur) {
  if (!(ks_ref > kKsEpsilon)) {
    throw Error(ErrorCode::ZeroReferenceKs,
                "reference KS is zero; percentage change is undefined");
  }
  return (ks_cur - ks_ref) / ks_ref;
}

}  // namespace ksdiag
