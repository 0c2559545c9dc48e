#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ksdiag/data_model.hpp"
#include "ksdiag/ks.hpp"
#include "ksdiag/regime.hpp"

namespace ksdiag {

struct FeatureScale {
  double mean = 0.0;
  double scale = 1.0;
};

/// Stacked current (Z = 1) and mix-adjusted reference (Z = 0) rows.
/// Columns of `features` are the raw covariates followed by one indicator per
/// segment in `indicator_segments` (the first common segment is dropped as
/// the reference category).
struct DomainDataset {
  Eigen::MatrixXd features;
  Eigen::VectorXd labels;
  Eigen::VectorXd weights;
  std::size_t covariate_dim = 0;
  std::vector<std::string> indicator_segments;
  /// Instance-weighted standardization of the covariate columns.
  std::vector<FeatureScale> standardization;
  /// Only one common segment, so there are no indicator columns.
  bool single_segment = false;

  Eigen::Index rows() const { return features.rows(); }
};

/// Penalized weighted logistic model of P(Z = 1 | X, g).
struct DomainClassifier {
  /// Intercept, standardized covariate terms, then segment indicator terms.
  Eigen::VectorXd coefficients;
  std::vector<FeatureScale> standardization;
  std::vector<std::string> indicator_segments;
  double train_auroc = 0.5;
  /// Instance-weighted share of Z = 1 rows.
  double eta = 0.5;
  bool converged = false;
  std::size_t iterations = 0;
  bool separation_unstable = false;
  /// AUROC was measured on a held-out split rather than the training rows.
  bool auroc_on_holdout = false;

  /// Linear predictor for one row.
  double log_odds(std::span<const double> covariates,
                  std::string_view segment) const;
  /// Fitted probability, floored into [1e-12, 1 - 1e-12].
  double probability(std::span<const double> covariates,
                     std::string_view segment) const;
};

inline constexpr double kRidgePenalty = 1e-6;
inline constexpr double kIrlsTolerance = 1e-8;
inline constexpr std::size_t kIrlsMaxIterations = 100;
inline constexpr double kProbabilityFloor = 1e-12;

/// Keeps the rows of `sample` whose segment is in `segments`.
/// Throws EmptyClassAfterFilter if a class disappears.
PeriodSample restrict_to_segments(const PeriodSample& sample,
                                  const SegmentSet& segments);

/// Throws NoCovariates when the samples have no covariate columns.
DomainDataset build_domain_dataset(const WeightedSample& ref_common,
                                   const PeriodSample& cur_common);

/// Weighted maximum likelihood by IRLS with an L2 penalty of kRidgePenalty on
/// the non-intercept terms. Stops when the largest coefficient update is below
/// kIrlsTolerance or after kIrlsMaxIterations (converged = false). Perfect
/// separation is flagged, not fatal.
DomainClassifier fit_domain_classifier(const DomainDataset& data,
                                       const GovernanceConfig& config);

/// Weighted Mann-Whitney AUROC: pairs with the positive scored higher count
/// fully, ties count half. Throws SingleClass / NonPositiveWeight.
double auroc(std::span<const double> scores, std::span<const int> labels,
             std::span<const double> weights);

/// ((1 - eta) / eta) * p / (1 - p), arranged so p == eta gives exactly 1.
double covariate_shift_weight(double p, double eta);

struct CovariateWeights {
  std::vector<double> values;
  std::size_t clipped = 0;
};

/// Density-ratio weight for each row of `ref_common`, clipped into
/// [config.weight_clip_low, config.weight_clip_high].
CovariateWeights covariate_weights(const DomainClassifier& model,
                                   const PeriodSample& ref_common,
                                   const GovernanceConfig& config);

enum class Gate3Gateway { ExplainedByCovariateShift, EscalateToStep4 };

std::string_view to_string(Gate3Gateway g);

struct WeightStats {
  double min = 0.0;
  double max = 0.0;
  /// Mean under the mix-adjusted reference distribution.
  double mean = 0.0;
  double fraction_clipped = 0.0;
};

struct XAlignedKs {
  KsValue ks_x_aligned;
  KsValue ks_cur_com;
  double pct_x_aligned = 0.0;
  Gate3Gateway gateway = Gate3Gateway::ExplainedByCovariateShift;
  WeightStats weight_stats;
};

/// KS of the common-support reference under mix weight x covariate weight,
/// compared with the current common-support KS. Throws ZeroXAlignedKs.
XAlignedKs x_aligned_ks(const PeriodSample& ref_common, const MixWeights& mix,
                        const CovariateWeights& cov_w,
                        const PeriodSample& cur_common,
                        const GovernanceConfig& config);

struct CovariateShiftResult {
  DomainClassifier model;
  double auroc = 0.5;
  bool shift_negligible = false;
  KsValue ks_mix_adjusted;
  XAlignedKs aligned;
};

/// Step 3 end to end on the common support found by Step 2.
CovariateShiftResult run_gate3(const PeriodSample& ref, const PeriodSample& cur,
                               const DecompositionResult& step2,
                               const GovernanceConfig& config);

}  // namespace ksdiag
