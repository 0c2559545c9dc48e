#pragma once

// Reference implementations used only by tests. They share no code with the
// library and favour the obvious O(n^2) formulation over speed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "ksdiag/data_model.hpp"

namespace oracle {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Closed-form KS between N(0,1) and N(sep,1).
inline double two_gaussian_ks(double sep) { return 2.0 * normal_cdf(sep / 2.0) - 1.0; }

// Weighted KS by evaluating both CDFs at every pooled score.
inline double brute_ks(const std::vector<double>& goods, const std::vector<double>& gw,
                       const std::vector<double>& bads, const std::vector<double>& bw) {
  double tg = 0.0;
  double tb = 0.0;
  for (double w : gw) tg += w;
  for (double w : bw) tb += w;
  std::vector<double> points = goods;
  points.insert(points.end(), bads.begin(), bads.end());
  double best = 0.0;
  for (double t : points) {
    double fg = 0.0;
    double fb = 0.0;
    for (std::size_t i = 0; i < goods.size(); ++i) {
      if (goods[i] <= t) fg += gw[i];
    }
    for (std::size_t i = 0; i < bads.size(); ++i) {
      if (bads[i] <= t) fb += bw[i];
    }
    best = std::max(best, std::fabs(fb / tb - fg / tg));
  }
  return best;
}

inline double brute_ks(const std::vector<double>& goods, const std::vector<double>& bads) {
  return brute_ks(goods, std::vector<double>(goods.size(), 1.0), bads,
                  std::vector<double>(bads.size(), 1.0));
}

// Weighted pairwise count: positive above negative scores 1, ties 1/2.
inline double brute_auroc(const std::vector<double>& scores, const std::vector<int>& labels,
                          const std::vector<double>& weights) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      const double w = weights[i] * weights[j];
      den += w;
      if (scores[i] > scores[j]) num += w;
      else if (scores[i] == scores[j]) num += 0.5 * w;
    }
  }
  return num / den;
}

// Class split of a sample, optionally keeping only some segments.
struct Split {
  std::vector<double> goods, good_w, bads, bad_w;
};

inline Split split(const ksdiag::PeriodSample& s, const std::vector<double>* weights = nullptr,
                   const std::vector<std::string>* keep = nullptr) {
  Split out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& o = s[i];
    if (keep && std::find(keep->begin(), keep->end(), o.segment) == keep->end()) continue;
    const double w = weights ? (*weights)[i] : 1.0;
    if (o.label == 1) {
      out.bads.push_back(o.score);
      out.bad_w.push_back(w);
    } else {
      out.goods.push_back(o.score);
      out.good_w.push_back(w);
    }
  }
  return out;
}

// Random scored sample: `segments` names with per-segment separations.
inline ksdiag::PeriodSample random_sample(std::mt19937_64& gen, ksdiag::Period period,
                                          std::size_t n, const std::vector<std::string>& segments,
                                          const std::vector<double>& shares,
                                          const std::vector<double>& seps,
                                          std::size_t covariate_dim = 0,
                                          bool coarse_scores = false) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::discrete_distribution<std::size_t> pick(shares.begin(), shares.end());
  std::vector<ksdiag::Observation> rows;
  rows.reserve(n + 2 * segments.size());
  auto make = [&](std::size_t g, int label) {
    ksdiag::Observation o;
    o.segment = segments[g];
    o.label = label;
    o.score = z(gen) + (label == 1 ? seps[g] : 0.0);
    if (coarse_scores) o.score = std::round(o.score * 4.0) / 4.0;
    for (std::size_t j = 0; j < covariate_dim; ++j) o.covariates.push_back(z(gen));
    rows.push_back(std::move(o));
  };
  for (std::size_t i = 0; i < n; ++i) make(pick(gen), u(gen) < 0.3 ? 1 : 0);
  // One good and one bad in every segment keeps each class present after
  // any segment filter.
  for (std::size_t g = 0; g < segments.size(); ++g) {
    if (shares[g] <= 0.0) continue;
    make(g, 0);
    make(g, 1);
  }
  return ksdiag::PeriodSample(period, std::move(rows));
}

}  // namespace oracle
