#include "ksdiag/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "ksdiag/error.hpp"
#include "ksdiag/ks.hpp"
#include "ksdiag/parallel.hpp"

namespace ksdiag {

std::string_view to_string(Gate1Class c) {
  switch (c) {
    case Gate1Class::NoDeterioration: return "NO_DETERIORATION";
    case Gate1Class::SignificantNoBreach: return "SIGNIFICANT_NO_BREACH";
    case Gate1Class::BreachNotConfirmed: return "BREACH_NOT_CONFIRMED";
    case Gate1Class::ConfirmedBreach: return "CONFIRMED_BREACH";
  }
  return "UNKNOWN";
}

PeriodSample stratified_resample(const PeriodSample& sample, Rng& rng) {
  std::vector<std::size_t> goods;
  std::vector<std::size_t> bads;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    (sample[i].label == 1 ? bads : goods).push_back(i);
  }
  std::vector<Observation> out;
  out.reserve(sample.size());
  for (const auto* rows : {&goods, &bads}) {
    for (std::size_t k = 0; k < rows->size(); ++k) {
      out.push_back(sample[(*rows)[rng.below(rows->size())]]);
    }
  }
  return PeriodSample(sample.period(), std::move(out));
}

namespace {

// One class of one period, sorted by score, plus the map from the class's
// row-order position to its sorted position.
struct SortedClassIndex {
  std::vector<double> scores;
  std::vector<std::uint32_t> rank;
};

struct PeriodIndex {
  SortedClassIndex goods;
  SortedClassIndex bads;
};

SortedClassIndex index_class(std::vector<double> scores) {
  std::vector<std::uint32_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return scores[a] < scores[b] || (scores[a] == scores[b] && a < b);
  });
  SortedClassIndex out;
  out.scores.resize(scores.size());
  out.rank.resize(scores.size());
  for (std::uint32_t pos = 0; pos < order.size(); ++pos) {
    out.scores[pos] = scores[order[pos]];
    out.rank[order[pos]] = pos;
  }
  return out;
}

PeriodIndex index_period(const PeriodSample& sample) {
  std::vector<double> goods;
  std::vector<double> bads;
  for (const Observation& obs : sample.observations()) {
    (obs.label == 1 ? bads : goods).push_back(obs.score);
  }
  return {index_class(std::move(goods)), index_class(std::move(bads))};
}

// Draws exactly the indices stratified_resample would draw from the same
// stream and returns the KS of the resampled period.
double resampled_ks(const PeriodIndex& index, Rng& rng,
                    std::vector<std::uint32_t>& good_counts,
                    std::vector<std::uint32_t>& bad_counts) {
  auto draw = [&rng](const SortedClassIndex& cls,
                     std::vector<std::uint32_t>& counts) {
    counts.assign(cls.scores.size(), 0u);
    const std::size_t n = cls.scores.size();
    for (std::size_t k = 0; k < n; ++k) ++counts[cls.rank[rng.below(n)]];
  };
  draw(index.goods, good_counts);
  draw(index.bads, bad_counts);
  return detail::sorted_ks<std::uint32_t>(index.goods.scores, good_counts,
                                          index.bads.scores, bad_counts)
      .value;
}

}  // namespace

BootstrapDistribution bootstrap_distribution(const PeriodSample& ref,
                                             const PeriodSample& cur,
                                             const GovernanceConfig& config) {
  if (config.bootstrap_replicates < 1) {
    throw Error(ErrorCode::InvalidConfig, "bootstrap replicate count must be >= 1");
  }
  const PeriodIndex ref_index = index_period(ref);
  const PeriodIndex cur_index = index_period(cur);
  const std::size_t replicates = config.bootstrap_replicates;
  std::vector<double> raw(replicates, 0.0);
  std::vector<char> keep(replicates, 0);

  parallel_for(replicates, config.parallelism, [&](std::size_t b) {
    Rng rng(config.seed, Stream::Bootstrap, b);
    std::vector<std::uint32_t> good_counts;
    std::vector<std::uint32_t> bad_counts;
    const double ks_ref = resampled_ks(ref_index, rng, good_counts, bad_counts);
    const double ks_cur = resampled_ks(cur_index, rng, good_counts, bad_counts);
    if (ks_ref > kKsEpsilon) {
      raw[b] = (ks_cur - ks_ref) / ks_ref;
      keep[b] = 1;
    }
  });

  BootstrapDistribution out;
  out.values.reserve(replicates);
  for (std::size_t b = 0; b < replicates; ++b) {
    if (keep[b]) {
      out.values.push_back(raw[b]);
    } else {
      ++out.dropped;
    }
  }
  if (out.values.empty()) {
    throw Error(ErrorCode::AllReplicatesDegenerate,
                "every bootstrap replicate had a zero reference KS");
  }
  return out;
}

double interpolated_quantile(std::span<const double> sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const double lower = std::floor(h);
  const auto k = static_cast<std::size_t>(lower);
  if (k + 1 >= sorted.size()) return sorted.back();
  return sorted[k] + (h - lower) * (sorted[k + 1] - sorted[k]);
}

std::pair<double, double> percentile_ci(std::span<const double> values,
                                        double alpha) {
  if (values.empty()) {
    throw Error(ErrorCode::EmptyVector, "cannot form an interval from no values");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "alpha must lie in (0, 1)");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double low = interpolated_quantile(sorted, alpha / 2.0);
  const double high = interpolated_quantile(sorted, 1.0 - alpha / 2.0);
  return {low, std::max(low, high)};
}

// Listed rows: tau < L < 0 < U, tau < L < U < 0, L < tau < U < 0, U < tau.
// Unlisted cells fall toward monitoring: U >= 0 with L <= tau is a breach
// that is plausible but not confirmed, and U >= 0 with L > tau (including an
// interval entirely above zero) is no deterioration. U == tau lands in
// BreachNotConfirmed.
Gate1Class classify_gate1(double ci_low, double ci_high, double tau) {
  if (ci_high < tau) return Gate1Class::ConfirmedBreach;
  if (ci_low <= tau) return Gate1Class::BreachNotConfirmed;
  if (ci_high >= 0.0) return Gate1Class::NoDeterioration;
  return Gate1Class::SignificantNoBreach;
}

bool outside_decision_table(double ci_low, double ci_high, double tau) {
  return ci_low >= 0.0 || (ci_high >= 0.0 && ci_low <= tau);
}

Gate1Result run_gate1(const PeriodSample& ref, const PeriodSample& cur,
                      const GovernanceConfig& config) {
  Gate1Result result;
  result.ks_ref = ks_of_sample(WeightedSample(ref)).value;
  result.ks_cur = ks_of_sample(WeightedSample(cur)).value;
  result.pct_change_observed = pct_change(result.ks_ref, result.ks_cur);

  BootstrapDistribution dist = bootstrap_distribution(ref, cur, config);
  const auto [low, high] = percentile_ci(dist.values, config.alpha);
  result.ci_low = low;
  result.ci_high = high;
  result.classification = classify_gate1(low, high, config.tau);
  result.outside_decision_table = outside_decision_table(low, high, config.tau);
  result.replicates_requested = config.bootstrap_replicates;
  result.replicates_used = dist.values.size();
  result.replicates_dropped = dist.dropped;
  result.dropped_warning =
      static_cast<double>(dist.dropped) >
      0.01 * static_cast<double>(config.bootstrap_replicates);
  result.distribution = std::move(dist.values);
  return result;
}

}  // namespace ksdiag
