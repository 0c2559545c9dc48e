#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ksdiag/data_model.hpp"
#include "ksdiag/error.hpp"

namespace ksdiag {

/// Guard on every KS value used as a denominator.
inline constexpr double kKsEpsilon = 1e-9;

struct KsValue {
  double value = 0.0;
  /// Smallest observed score attaining the supremum.
  double argmax_score = 0.0;
};

struct WeightedScore {
  double score = 0.0;
  double weight = 1.0;
};

/// Sorted, duplicate-free list of segment ids.
using SegmentSet = std::vector<std::string>;

/// sup_t |F_bad(t) - F_good(t)| over weighted empirical CDFs.
///
/// Evaluated at every distinct pooled score after one sort per class; ties
/// within a class are ordered by weight so the result is bit-identical under
/// any permutation of the inputs. Throws EmptyClass or NonPositiveWeight.
KsValue weighted_ks(std::span<const WeightedScore> goods,
                    std::span<const WeightedScore> bads);

/// weighted_ks on the label split of `sample`, optionally keeping only rows
/// whose segment is in `restrict_to`. Throws EmptyClassAfterFilter.
KsValue ks_of_sample(const WeightedSample& sample,
                     const std::optional<SegmentSet>& restrict_to = std::nullopt);

/// (ks_cur - ks_ref) / ks_ref. Throws ZeroReferenceKs when ks_ref <= kKsEpsilon.
double pct_change(double ks_ref, double ks_cur);

namespace detail {

/// Merge walk over two classes already sorted by score. Entries with zero
/// weight are skipped, which lets the bootstrap pass multiplicity counts.
/// Sums run in long double and each class is normalized once at the end.
template <typename Weight>
KsValue sorted_ks(std::span<const double> good_scores,
                  std::span<const Weight> good_weights,
                  std::span<const double> bad_scores,
                  std::span<const Weight> bad_weights) {
  long double good_total = 0.0L;
  long double bad_total = 0.0L;
  for (const Weight& w : good_weights) good_total += static_cast<long double>(w);
  for (const Weight& w : bad_weights) bad_total += static_cast<long double>(w);

  KsValue best{0.0, 0.0};
  bool have_point = false;
  long double best_gap = -1.0L;
  long double good_cum = 0.0L;
  long double bad_cum = 0.0L;
  std::size_t i = 0;
  std::size_t j = 0;
  const std::size_t ng = good_scores.size();
  const std::size_t nb = bad_scores.size();
  while (i < ng || j < nb) {
    double t;
    if (j >= nb || (i < ng && good_scores[i] <= bad_scores[j])) {
      t = good_scores[i];
    } else {
      t = bad_scores[j];
    }
    bool moved = false;
    for (; i < ng && good_scores[i] == t; ++i) {
      if (good_weights[i] != Weight{}) {
        good_cum += static_cast<long double>(good_weights[i]);
        moved = true;
      }
    }
    for (; j < nb && bad_scores[j] == t; ++j) {
      if (bad_weights[j] != Weight{}) {
        bad_cum += static_cast<long double>(bad_weights[j]);
        moved = true;
      }
    }
    if (!moved) continue;
    const long double gap = std::fabs(bad_cum / bad_total - good_cum / good_total);
    if (!have_point || gap > best_gap) {
      best_gap = gap;
      best.argmax_score = t;
      have_point = true;
    }
  }
  best.value = std::clamp(static_cast<double>(best_gap), 0.0, 1.0);
  return best;
}

}  // namespace detail

}  // namespace ksdiag
