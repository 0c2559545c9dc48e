#include "ksdiag/covariate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "ksdiag/error.hpp"
#include "ksdiag/rng.hpp"

namespace ksdiag {

std::string_view to_string(Gate3Gateway g) {
  return g == Gate3Gateway::ExplainedByCovariateShift
             ? "EXPLAINED_BY_COVARIATE_SHIFT"
             : "ESCALATE_TO_STEP4";
}

PeriodSample restrict_to_segments(const PeriodSample& sample,
                                  const SegmentSet& segments) {
  SegmentSet sorted = segments;
  std::sort(sorted.begin(), sorted.end());
  std::vector<Observation> rows;
  bool any_good = false;
  bool any_bad = false;
  for (const Observation& obs : sample.observations()) {
    if (!std::binary_search(sorted.begin(), sorted.end(), obs.segment)) continue;
    (obs.label == 1 ? any_bad : any_good) = true;
    rows.push_back(obs);
  }
  if (!any_good || !any_bad) {
    throw Error(ErrorCode::EmptyClassAfterFilter,
                std::string(to_string(sample.period())) +
                    " sample has an empty class on common support");
  }
  return PeriodSample(sample.period(), std::move(rows));
}

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

void fill_design_row(std::span<const double> covariates, std::string_view segment,
                     const std::vector<FeatureScale>& scales,
                     const std::vector<std::string>& indicators,
                     Eigen::Ref<Eigen::RowVectorXd> row) {
  row(0) = 1.0;
  for (std::size_t j = 0; j < scales.size(); ++j) {
    row(1 + j) = (covariates[j] - scales[j].mean) / scales[j].scale;
  }
  const Eigen::Index offset = 1 + static_cast<Eigen::Index>(scales.size());
  for (std::size_t s = 0; s < indicators.size(); ++s) {
    row(offset + s) = indicators[s] == segment ? 1.0 : 0.0;
  }
}

}  // namespace

DomainDataset build_domain_dataset(const WeightedSample& ref_common,
                                   const PeriodSample& cur_common) {
  const PeriodSample& ref = ref_common.base();
  const std::size_t p = ref.dimension();
  if (p == 0 || cur_common.dimension() == 0) {
    throw Error(ErrorCode::NoCovariates,
                "covariate alignment needs at least one covariate column");
  }
  if (cur_common.dimension() != p) {
    throw Error(ErrorCode::RaggedCovariates,
                "reference and current covariate dimensions differ");
  }
  std::set<std::string> segments(ref.segment_universe().begin(),
                                 ref.segment_universe().end());
  segments.insert(cur_common.segment_universe().begin(),
                  cur_common.segment_universe().end());

  DomainDataset data;
  data.covariate_dim = p;
  data.indicator_segments.assign(std::next(segments.begin()), segments.end());
  data.single_segment = data.indicator_segments.empty();

  const auto n_ref = static_cast<Eigen::Index>(ref.size());
  const auto n = n_ref + static_cast<Eigen::Index>(cur_common.size());
  const auto k = static_cast<Eigen::Index>(p + data.indicator_segments.size());
  data.features.resize(n, k);
  data.labels.resize(n);
  data.weights.resize(n);

  auto put = [&](Eigen::Index row, const Observation& obs, double z, double w) {
    for (std::size_t j = 0; j < p; ++j) {
      data.features(row, static_cast<Eigen::Index>(j)) = obs.covariates[j];
    }
    for (std::size_t s = 0; s < data.indicator_segments.size(); ++s) {
      data.features(row, static_cast<Eigen::Index>(p + s)) =
          data.indicator_segments[s] == obs.segment ? 1.0 : 0.0;
    }
    data.labels(row) = z;
    data.weights(row) = w;
  };
  const auto ref_weights = ref_common.weights();
  for (Eigen::Index i = 0; i < n_ref; ++i) {
    put(i, ref[static_cast<std::size_t>(i)], 0.0,
        ref_weights[static_cast<std::size_t>(i)]);
  }
  for (std::size_t i = 0; i < cur_common.size(); ++i) {
    put(n_ref + static_cast<Eigen::Index>(i), cur_common[i], 1.0, 1.0);
  }

  const double total = data.weights.sum();
  for (std::size_t j = 0; j < p; ++j) {
    const auto col = data.features.col(static_cast<Eigen::Index>(j));
    const double mean = data.weights.dot(col) / total;
    const double var =
        data.weights.dot((col.array() - mean).square().matrix()) / total;
    double scale = std::sqrt(var);
    if (!(scale > 1e-12 * std::max(1.0, std::fabs(mean)))) scale = 1.0;
    data.standardization.push_back({mean, scale});
  }
  return data;
}

double DomainClassifier::log_odds(std::span<const double> covariates,
                                  std::string_view segment) const {
  Eigen::RowVectorXd row(coefficients.size());
  fill_design_row(covariates, segment, standardization, indicator_segments, row);
  return row.dot(coefficients);
}

double DomainClassifier::probability(std::span<const double> covariates,
                                     std::string_view segment) const {
  return std::clamp(sigmoid(log_odds(covariates, segment)), kProbabilityFloor,
                    1.0 - kProbabilityFloor);
}

double auroc(std::span<const double> scores, std::span<const int> labels,
             std::span<const double> weights) {
  if (scores.size() != labels.size() || scores.size() != weights.size()) {
    throw Error(ErrorCode::SingleClass, "auroc inputs differ in length");
  }
  long double pos_total = 0.0L;
  long double neg_total = 0.0L;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
      throw Error(ErrorCode::NonPositiveWeight, "auroc weights must be positive");
    }
    (labels[i] == 1 ? pos_total : neg_total) += weights[i];
  }
  if (!(pos_total > 0.0L) || !(neg_total > 0.0L)) {
    throw Error(ErrorCode::SingleClass, "auroc needs both classes");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b] || (scores[a] == scores[b] && a < b);
  });
  long double wins = 0.0L;
  long double neg_below = 0.0L;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    long double pos_tie = 0.0L;
    long double neg_tie = 0.0L;
    for (; i < order.size() && scores[order[i]] == s; ++i) {
      (labels[order[i]] == 1 ? pos_tie : neg_tie) += weights[order[i]];
    }
    wins += pos_tie * neg_below + 0.5L * pos_tie * neg_tie;
    neg_below += neg_tie;
  }
  return static_cast<double>(wins / (pos_total * neg_total));
}

DomainClassifier fit_domain_classifier(const DomainDataset& data,
                                       const GovernanceConfig& config) {
  const Eigen::Index n = data.rows();
  const Eigen::Index k = 1 + data.features.cols();
  const std::size_t p = data.covariate_dim;

  Eigen::MatrixXd design(n, k);
  design.col(0).setOnes();
  for (Eigen::Index j = 0; j < data.features.cols(); ++j) {
    if (static_cast<std::size_t>(j) < p) {
      const FeatureScale& fs = data.standardization[static_cast<std::size_t>(j)];
      design.col(1 + j) = (data.features.col(j).array() - fs.mean) / fs.scale;
    } else {
      design.col(1 + j) = data.features.col(j);
    }
  }

  std::vector<char> in_train(static_cast<std::size_t>(n), 1);
  bool holdout = false;
  if (config.holdout_fraction > 0.0) {
    Rng rng(config.seed, Stream::Holdout);
    double held_pos = 0.0, held_neg = 0.0, kept_pos = 0.0, kept_neg = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool held = rng.uniform() < config.holdout_fraction;
      in_train[static_cast<std::size_t>(i)] = held ? 0 : 1;
      double& bucket = data.labels(i) > 0.5 ? (held ? held_pos : kept_pos)
                                            : (held ? held_neg : kept_neg);
      bucket += data.weights(i);
    }
    holdout = held_pos > 0.0 && held_neg > 0.0 && kept_pos > 0.0 && kept_neg > 0.0;
    if (!holdout) std::fill(in_train.begin(), in_train.end(), 1);
  }

  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    w(i) = in_train[static_cast<std::size_t>(i)] ? data.weights(i) : 0.0;
  }
  const Eigen::VectorXd& y = data.labels;
  const double weight_total = w.sum();
  const double weight_pos = w.dot(y);
  if (!(weight_pos > 0.0) || !(weight_total - weight_pos > 0.0)) {
    throw Error(ErrorCode::SingleClass,
                "domain classifier needs both periods with positive weight");
  }

  DomainClassifier model;
  model.standardization = data.standardization;
  model.indicator_segments = data.indicator_segments;
  model.eta = weight_pos / weight_total;
  model.auroc_on_holdout = holdout;

  auto objective = [&](const Eigen::VectorXd& beta) {
    const Eigen::VectorXd lin = design * beta;
    long double value = 0.0L;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (w(i) == 0.0) continue;
      value += w(i) * (y(i) * lin(i) - softplus(lin(i)));
    }
    return static_cast<double>(value) -
           0.5 * kRidgePenalty * beta.tail(k - 1).squaredNorm();
  };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  beta(0) = std::log(model.eta / (1.0 - model.eta));
  double current = objective(beta);
  for (std::size_t iter = 1; iter <= kIrlsMaxIterations; ++iter) {
    const Eigen::VectorXd lin = design * beta;
    Eigen::VectorXd residual(n);
    Eigen::VectorXd curvature(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double prob = sigmoid(lin(i));
      residual(i) = w(i) * (y(i) - prob);
      curvature(i) = w(i) * std::max(prob * (1.0 - prob), 1e-12);
    }
    Eigen::VectorXd gradient = design.transpose() * residual;
    gradient.tail(k - 1) -= kRidgePenalty * beta.tail(k - 1);
    Eigen::MatrixXd hessian = design.transpose() * curvature.asDiagonal() * design;
    hessian.diagonal().tail(k - 1).array() += kRidgePenalty;
    const Eigen::VectorXd delta = hessian.ldlt().solve(gradient);

    double step = 1.0;
    Eigen::VectorXd candidate = beta + delta;
    double value = objective(candidate);
    while (!(value >= current - 1e-12 * std::fabs(current)) && step > 1e-10) {
      step *= 0.5;
      candidate = beta + step * delta;
      value = objective(candidate);
    }
    const double change = (step * delta).cwiseAbs().maxCoeff();
    beta = candidate;
    current = value;
    model.iterations = iter;
    if (change < kIrlsTolerance) {
      model.converged = true;
      break;
    }
  }
  if (!beta.allFinite()) {
    throw Error(ErrorCode::SingleClass, "domain classifier diverged");
  }
  model.coefficients = beta;

  const Eigen::VectorXd lin = design * beta;
  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<double> weights;
  double min_pos = INFINITY, max_pos = -INFINITY;
  double min_neg = INFINITY, max_neg = -INFINITY;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool train = in_train[static_cast<std::size_t>(i)] != 0;
    if (train) {
      if (y(i) > 0.5) {
        min_pos = std::min(min_pos, lin(i));
        max_pos = std::max(max_pos, lin(i));
      } else {
        min_neg = std::min(min_neg, lin(i));
        max_neg = std::max(max_neg, lin(i));
      }
    }
    if (train != holdout) {
      scores.push_back(lin(i));
      labels.push_back(y(i) > 0.5 ? 1 : 0);
      weights.push_back(data.weights(i));
    }
  }
  model.train_auroc = auroc(scores, labels, weights);
  model.separation_unstable = min_pos > max_neg || max_pos < min_neg ||
                              beta.tail(k - 1).cwiseAbs().maxCoeff() > 50.0;
  return model;
}

double covariate_shift_weight(double p, double eta) {
  return (p * (1.0 - eta)) / (eta * (1.0 - p));
}

CovariateWeights covariate_weights(const DomainClassifier& model,
                                   const PeriodSample& ref_common,
                                   const GovernanceConfig& config) {
  CovariateWeights out;
  out.values.reserve(ref_common.size());
  for (const Observation& obs : ref_common.observations()) {
    const double raw =
        covariate_shift_weight(model.probability(obs.covariates, obs.segment),
                               model.eta);
    const double clipped =
        std::clamp(raw, config.weight_clip_low, config.weight_clip_high);
    if (clipped != raw) ++out.clipped;
    out.values.push_back(clipped);
  }
  return out;
}

XAlignedKs x_aligned_ks(const PeriodSample& ref_common, const MixWeights& mix,
                        const CovariateWeights& cov_w,
                        const PeriodSample& cur_common,
                        const GovernanceConfig& config) {
  if (cov_w.values.size() != ref_common.size()) {
    throw Error(ErrorCode::NonPositiveWeight,
                "covariate weights are not aligned with reference rows");
  }
  XAlignedKs out;
  std::vector<double> total;
  total.reserve(ref_common.size());
  long double mix_sum = 0.0L;
  long double weighted_sum = 0.0L;
  double lo = INFINITY;
  double hi = -INFINITY;
  for (std::size_t i = 0; i < ref_common.size(); ++i) {
    const double wm = mix.weight_for(ref_common[i].segment);
    const double wx = cov_w.values[i];
    total.push_back(wm * wx);
    mix_sum += wm;
    weighted_sum += static_cast<long double>(wm) * wx;
    lo = std::min(lo, wx);
    hi = std::max(hi, wx);
  }
  out.weight_stats.min = lo;
  out.weight_stats.max = hi;
  out.weight_stats.mean = static_cast<double>(weighted_sum / mix_sum);
  out.weight_stats.fraction_clipped =
      static_cast<double>(cov_w.clipped) / static_cast<double>(ref_common.size());

  out.ks_x_aligned = ks_of_sample(WeightedSample(ref_common, std::move(total)));
  out.ks_cur_com = ks_of_sample(WeightedSample(cur_common));
  if (!(out.ks_x_aligned.value > kKsEpsilon)) {
    throw Error(ErrorCode::ZeroXAlignedKs,
                "covariate-aligned reference KS is zero; change is undefined");
  }
  out.pct_x_aligned =
      (out.ks_cur_com.value - out.ks_x_aligned.value) / out.ks_x_aligned.value;
  out.gateway = out.pct_x_aligned < config.tau ? Gate3Gateway::EscalateToStep4
                                               : Gate3Gateway::ExplainedByCovariateShift;
  return out;
}

CovariateShiftResult run_gate3(const PeriodSample& ref, const PeriodSample& cur,
                               const DecompositionResult& step2,
                               const GovernanceConfig& config) {
  const PeriodSample ref_common = restrict_to_segments(ref, step2.partition.common);
  const PeriodSample cur_common = restrict_to_segments(cur, step2.partition.common);
  const WeightedSample ref_weighted(ref_common,
                                    mix_row_weights(ref_common, step2.mix));

  CovariateShiftResult result;
  const DomainDataset data = build_domain_dataset(ref_weighted, cur_common);
  result.model = fit_domain_classifier(data, config);
  result.auroc = result.model.train_auroc;
  result.shift_negligible = result.auroc < config.auroc_negligible;
  result.ks_mix_adjusted = step2.ks_mix_adjusted;
  const CovariateWeights cov_w = covariate_weights(result.model, ref_common, config);
  result.aligned = x_aligned_ks(ref_common, step2.mix, cov_w, cur_common, config);
  return result;
}

}  // namespace ksdiag
