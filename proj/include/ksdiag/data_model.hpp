#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ksdiag {

enum class Period { Reference, Current };

std::string_view to_string(Period period);

/// One scored account. label is 1 for a bad and 0 for a good.
struct Observation {
  double score = 0.0;
  int label = 0;
  std::string segment;
  std::vector<double> covariates;

  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Validated, immutable collection of observations for one period.
///
/// Construction enforces: at least one good and one bad, finite scores,
/// labels in {0, 1}, non-empty segment ids and a common covariate dimension.
class PeriodSample {
 public:
  PeriodSample(Period period, std::vector<Observation> observations);

  Period period() const noexcept { return period_; }
  std::span<const Observation> observations() const noexcept {
    return observations_;
  }
  const Observation& operator[](std::size_t i) const { return observations_[i]; }
  std::size_t size() const noexcept { return observations_.size(); }
  std::size_t dimension() const noexcept { return dimension_; }

  /// Sorted distinct segment ids.
  const std::vector<std::string>& segment_universe() const noexcept {
    return universe_;
  }
  bool has_segment(std::string_view segment) const;

  /// Hex SHA-256 of the bytes this sample was loaded from; empty when the
  /// sample was built in memory.
  const std::string& digest() const noexcept { return digest_; }
  void set_digest(std::string digest) { digest_ = std::move(digest); }

 private:
  Period period_;
  std::vector<Observation> observations_;
  std::vector<std::string> universe_;
  std::size_t dimension_ = 0;
  std::string digest_;
};

/// A PeriodSample paired with one strictly positive weight per row. The
/// base sample is referenced, not copied, and must outlive this object.
class WeightedSample {
 public:
  /// Unit weights.
  explicit WeightedSample(const PeriodSample& base);
  WeightedSample(const PeriodSample& base, std::vector<double> weights);

  const PeriodSample& base() const noexcept { return *base_; }
  std::span<const double> weights() const noexcept { return weights_; }

 private:
  const PeriodSample* base_;
  std::vector<double> weights_;
};

struct ClassCounts {
  std::size_t n_good = 0;
  std::size_t n_bad = 0;

  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

ClassCounts class_counts(const PeriodSample& sample);

/// Governance parameters shared by every gate.
struct GovernanceConfig {
  double tau = -0.20;
  double alpha = 0.05;
  std::size_t bootstrap_replicates = 1000;
  std::uint64_t seed = 0;
  std::size_t min_segment_count = 30;
  double weight_clip_low = 0.01;
  double weight_clip_high = 100.0;
  double auroc_negligible = 0.55;
  /// Worker threads for parallel stages; 0 selects hardware concurrency.
  std::size_t parallelism = 0;
  /// Fraction of the domain-classifier set held out for AUROC; 0 = none.
  double holdout_fraction = 0.0;

  /// Throws Error(InvalidConfig) when an invariant is violated.
  void validate() const;
};

PeriodSample parse_period_csv(std::string_view text, Period period);
PeriodSample load_period_csv(const std::filesystem::path& path, Period period);

std::string format_period_csv(const PeriodSample& sample);
void write_period_csv(const PeriodSample& sample,
                      const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace ksdiag
