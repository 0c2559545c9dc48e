#include "ksdiag/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

#include "ksdiag/digest.hpp"
#include "ksdiag/error.hpp"

namespace ksdiag {

namespace {

constexpr FinalDiagnosis kAllDiagnoses[] = {
    FinalDiagnosis::NoActionSamplingVariation,
    FinalDiagnosis::SignificantNoBreach,
    FinalDiagnosis::MonitorBreachNotConfirmed,
    FinalDiagnosis::ExplainedByComposition,
    FinalDiagnosis::ExplainedByCovariateShift,
    FinalDiagnosis::ModelDegradationEscalation,
    FinalDiagnosis::DegenerateStopped,
};

// A pct component at least this large (in KS_ref units) earns its advisory.
constexpr double kMaterialComponent = 0.01;

}  // namespace

std::string_view to_string(FinalDiagnosis d) {
  switch (d) {
    case FinalDiagnosis::NoActionSamplingVariation: return "NO_ACTION_SAMPLING_VARIATION";
    case FinalDiagnosis::SignificantNoBreach: return "SIGNIFICANT_NO_BREACH";
    case FinalDiagnosis::MonitorBreachNotConfirmed: return "MONITOR_BREACH_NOT_CONFIRMED";
    case FinalDiagnosis::ExplainedByComposition: return "EXPLAINED_BY_COMPOSITION";
    case FinalDiagnosis::ExplainedByCovariateShift: return "EXPLAINED_BY_COVARIATE_SHIFT";
    case FinalDiagnosis::ModelDegradationEscalation: return "MODEL_DEGRADATION_ESCALATION";
    case FinalDiagnosis::DegenerateStopped: return "DEGENERATE_STOPPED";
  }
  return "DEGENERATE_STOPPED";
}

std::optional<FinalDiagnosis> parse_final_diagnosis(std::string_view text) {
  for (FinalDiagnosis d : kAllDiagnoses) {
    if (to_string(d) == text) return d;
  }
  return std::nullopt;
}

int exit_code(FinalDiagnosis d) {
  switch (d) {
    case FinalDiagnosis::NoActionSamplingVariation:
    case FinalDiagnosis::SignificantNoBreach:
    case FinalDiagnosis::ExplainedByComposition:
    case FinalDiagnosis::ExplainedByCovariateShift:
      return 0;
    case FinalDiagnosis::MonitorBreachNotConfirmed: return 2;
    case FinalDiagnosis::ModelDegradationEscalation: return 3;
    case FinalDiagnosis::DegenerateStopped: return 4;
  }
  return 4;
}

namespace {

std::string sample_digest(const PeriodSample& sample) {
  return sample.digest().empty() ? sha256_hex(format_period_csv(sample))
                                 : sample.digest();
}

void degenerate(DiagnosticReport& report, const Error& e, std::string_view step) {
  report.final_diagnosis = FinalDiagnosis::DegenerateStopped;
  report.warnings.push_back("DEGENERATE_STOPPED: " + std::string(step) + ": " +
                            std::string(to_string(e.code())) + ": " + e.what());
  report.advisory_codes.push_back("DEGENERATE_INPUT_REVIEW");
}

void gate2_advisories(DiagnosticReport& report, const DecompositionResult& d) {
  if (!d.partition.cur_only.empty()) {
    report.advisory_codes.push_back("CUR_ONLY_SEGMENT_MONITORING");
  }
  if (!d.partition.ref_only.empty()) {
    report.advisory_codes.push_back("REF_ONLY_BENCHMARK_EXCLUSION");
  }
  if (std::fabs(d.pct_components.mix) >= kMaterialComponent) {
    report.advisory_codes.push_back("MIX_ADJUSTED_BENCHMARK");
  }
}

void gate3_warnings(std::vector<std::string>& warnings,
                    const CovariateShiftResult& r, std::string_view prefix) {
  const std::string p(prefix);
  if (r.model.indicator_segments.empty()) {
    warnings.push_back(p + "STEP3_SINGLE_SEGMENT: classifier uses covariates only");
  }
  if (!r.model.converged) {
    warnings.push_back(p + "STEP3_CLASSIFIER_NOT_CONVERGED");
  }
  if (r.model.separation_unstable) {
    warnings.push_back(p + "STEP3_PERFECT_SEPARATION: weights come from the penalized fit");
  }
  if (r.shift_negligible) {
    warnings.push_back(p + "STEP3_NEGLIGIBLE_COVARIATE_SHIFT");
  }
  if (r.aligned.weight_stats.fraction_clipped > 0.0) {
    warnings.push_back(p + "STEP3_WEIGHTS_CLIPPED");
  }
}

void run_trace(DiagnosticReport& report, const PeriodSample& ref,
               const PeriodSample& cur, const GovernanceConfig& config) {
  try {
    if (!report.gate2) {
      report.trace_gate2 = decompose(ref, cur, config);
    }
    const DecompositionResult& step2 = report.gate2 ? *report.gate2 : *report.trace_gate2;
    if (!report.gate3) {
      report.trace_gate3 = run_gate3(ref, cur, step2, config);
      gate3_warnings(report.warnings, *report.trace_gate3, "TRACE_");
    }
  } catch (const Error& e) {
    report.warnings.push_back("TRACE_STOPPED: " + std::string(to_string(e.code())) +
                              ": " + e.what());
  }
}

}  // namespace

DiagnosticReport run_diagnosis(const PeriodSample& ref, const PeriodSample& cur,
                               const GovernanceConfig& config,
                               const RunOptions& options) {
  config.validate();
  DiagnosticReport report;
  report.config = config;
  report.full_trace = options.full_trace;
  report.provenance.ref_digest = sample_digest(ref);
  report.provenance.cur_digest = sample_digest(cur);
  report.provenance.seed = config.seed;

  [&] {
    try {
      report.gate1 = run_gate1(ref, cur, config);
    } catch (const Error& e) {
      degenerate(report, e, "STEP1");
      return;
    }
    const Gate1Result& g1 = *report.gate1;
    if (g1.dropped_warning) {
      report.warnings.push_back("STEP1_DEGENERATE_REPLICATES: " +
                                std::to_string(g1.replicates_dropped) + " of " +
                                std::to_string(g1.replicates_requested) +
                                " replicates had zero reference KS");
    }
    if (g1.outside_decision_table) {
      report.warnings.push_back("STEP1_INTERVAL_OUTSIDE_DECISION_TABLE");
    }
    switch (g1.classification) {
      case Gate1Class::NoDeterioration:
        report.final_diagnosis = FinalDiagnosis::NoActionSamplingVariation;
        report.advisory_codes.push_back("NO_FURTHER_ANALYSIS");
        return;
      case Gate1Class::SignificantNoBreach:
        report.final_diagnosis = FinalDiagnosis::SignificantNoBreach;
        report.advisory_codes.push_back("NO_FURTHER_ANALYSIS");
        return;
      case Gate1Class::BreachNotConfirmed:
        report.final_diagnosis = FinalDiagnosis::MonitorBreachNotConfirmed;
        report.advisory_codes.push_back("INCREASE_MONITORING_FREQUENCY");
        return;
      case Gate1Class::ConfirmedBreach:
        report.advisory_codes.push_back("ROOT_CAUSE_ANALYSIS");
        break;
    }

    try {
      report.gate2 = decompose(ref, cur, config);
    } catch (const Error& e) {
      degenerate(report, e, "STEP2");
      return;
    }
    gate2_advisories(report, *report.gate2);
    if (report.gate2->gateway == Gate2Gateway::ExplainedByComposition) {
      report.final_diagnosis = FinalDiagnosis::ExplainedByComposition;
      return;
    }
    report.advisory_codes.push_back("RESIDUAL_GAP_ESCALATION");

    try {
      report.gate3 = run_gate3(ref, cur, *report.gate2, config);
    } catch (const Error& e) {
      degenerate(report, e, "STEP3");
      return;
    }
    gate3_warnings(report.warnings, *report.gate3, "");
    if (report.gate3->aligned.gateway == Gate3Gateway::ExplainedByCovariateShift) {
      report.final_diagnosis = FinalDiagnosis::ExplainedByCovariateShift;
      report.advisory_codes.push_back("COVARIATE_SHIFT_MONITORING");
      return;
    }

    report.final_diagnosis = FinalDiagnosis::ModelDegradationEscalation;
    for (const char* code :
         {"MODEL_RECALIBRATION_REVIEW", "CHALLENGER_MODEL_ANALYSIS", "FEATURE_REVIEW",
          "SEGMENTATION_REDESIGN_REVIEW", "MODEL_REDEVELOPMENT_REVIEW"}) {
      report.advisory_codes.push_back(code);
    }
  }();

  if (options.full_trace) run_trace(report, ref, cur, config);
  return report;
}

void check_report_structure(const DiagnosticReport& report) {
  auto fail = [](const char* what) { throw std::logic_error(what); };
  const bool degenerate = report.final_diagnosis == FinalDiagnosis::DegenerateStopped;
  const bool confirmed =
      report.gate1 && report.gate1->classification == Gate1Class::ConfirmedBreach;
  if (!report.gate1 && !degenerate) fail("gate1 missing without degenerate stop");
  if (report.gate2 && !confirmed) fail("gate2 present without a confirmed breach");
  if (confirmed && !report.gate2 && !degenerate) fail("gate2 missing after a confirmed breach");
  const bool escalated2 =
      report.gate2 && report.gate2->gateway == Gate2Gateway::EscalateToStep3;
  if (report.gate3 && !escalated2) fail("gate3 present without step 2 escalation");
  if (escalated2 && !report.gate3 && !degenerate) fail("gate3 missing after step 2 escalation");
  const bool escalated3 =
      report.gate3 && report.gate3->aligned.gateway == Gate3Gateway::EscalateToStep4;
  if ((report.final_diagnosis == FinalDiagnosis::ModelDegradationEscalation) != escalated3) {
    fail("model degradation diagnosis disagrees with the step 3 gateway");
  }
}

nlohmann::json json_real(double value) {
  if (!std::isfinite(value)) return nullptr;
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value,
                                 std::chars_format::general, 10);
  double rounded = 0.0;
  std::from_chars(buf, res.ptr, rounded);
  return rounded == 0.0 ? 0.0 : rounded;
}

namespace {

using nlohmann::json;

json ks_json(const KsValue& ks) {
  return {{"value", json_real(ks.value)}, {"argmax_score", json_real(ks.argmax_score)}};
}

json components_json(const ComponentSet& c) {
  return {{"cur_only", json_real(c.cur_only)},
          {"residual", json_real(c.residual)},
          {"mix", json_real(c.mix)},
          {"ref_only", json_real(c.ref_only)}};
}

json config_json(const GovernanceConfig& c) {
  return {{"tau", json_real(c.tau)},
          {"alpha", json_real(c.alpha)},
          {"B", c.bootstrap_replicates},
          {"seed", c.seed},
          {"min_segment_count", c.min_segment_count},
          {"weight_clip", {{"low", json_real(c.weight_clip_low)},
                           {"high", json_real(c.weight_clip_high)}}},
          {"auroc_negligible", json_real(c.auroc_negligible)},
          {"holdout_fraction", json_real(c.holdout_fraction)}};
}

json gate1_json(const Gate1Result& g) {
  return {{"ks_ref", json_real(g.ks_ref)},
          {"ks_cur", json_real(g.ks_cur)},
          {"pct_change_observed", json_real(g.pct_change_observed)},
          {"ci_low", json_real(g.ci_low)},
          {"ci_high", json_real(g.ci_high)},
          {"classification", std::string(to_string(g.classification))},
          {"replicates_requested", g.replicates_requested},
          {"replicates_used", g.replicates_used},
          {"replicates_dropped", g.replicates_dropped},
          {"dropped_warning", g.dropped_warning},
          {"outside_decision_table", g.outside_decision_table}};
}

json gate2_json(const DecompositionResult& d) {
  json mix = json::object();
  for (const auto& [g, w] : d.mix.weight) {
    mix[g] = {{"share_ref", json_real(d.mix.shares_ref.at(g))},
              {"share_cur", json_real(d.mix.shares_cur.at(g))},
              {"weight", json_real(w)}};
  }
  json table = json::array();
  for (const SegmentKsRow& row : d.segment_table) {
    table.push_back({{"segment", row.segment},
                     {"n_ref", row.n_ref},
                     {"n_cur", row.n_cur},
                     {"ks_ref", row.ks_ref ? json_real(*row.ks_ref) : json(nullptr)},
                     {"ks_cur", row.ks_cur ? json_real(*row.ks_cur) : json(nullptr)}});
  }
  return {{"partition", {{"common", d.partition.common},
                         {"ref_only", d.partition.ref_only},
                         {"cur_only", d.partition.cur_only}}},
          {"mix_weights", mix},
          {"ks", {{"ref", ks_json(d.ks_ref)},
                  {"cur", ks_json(d.ks_cur)},
                  {"ref_com", ks_json(d.ks_ref_com)},
                  {"cur_com", ks_json(d.ks_cur_com)},
                  {"mix_adjusted", ks_json(d.ks_mix_adjusted)}}},
          {"components", components_json(d.components)},
          {"pct_components", components_json(d.pct_components)},
          {"pct_change_total", json_real(d.pct_change_total)},
          {"pct_aligned_residual", json_real(d.pct_aligned_residual)},
          {"gateway", std::string(to_string(d.gateway))},
          {"segment_table_non_normative", table}};
}

json gate3_json(const CovariateShiftResult& r) {
  std::vector<std::string> names{"intercept"};
  for (std::size_t j = 0; j < r.model.standardization.size(); ++j) {
    names.push_back("x" + std::to_string(j + 1));
  }
  for (const std::string& g : r.model.indicator_segments) names.push_back("segment=" + g);
  json coefficients = json::array();
  for (Eigen::Index i = 0; i < r.model.coefficients.size(); ++i) {
    coefficients.push_back({{"term", names[static_cast<std::size_t>(i)]},
                            {"value", json_real(r.model.coefficients(i))}});
  }
  const WeightStats& ws = r.aligned.weight_stats;
  return {{"auroc", json_real(r.auroc)},
          {"auroc_on_holdout", r.model.auroc_on_holdout},
          {"shift_negligible", r.shift_negligible},
          {"eta", json_real(r.model.eta)},
          {"converged", r.model.converged},
          {"iterations", r.model.iterations},
          {"separation_unstable", r.model.separation_unstable},
          {"coefficients", coefficients},
          {"weight_stats", {{"min", json_real(ws.min)},
                            {"max", json_real(ws.max)},
                            {"mean", json_real(ws.mean)},
                            {"fraction_clipped", json_real(ws.fraction_clipped)}}},
          {"ks_mix_adjusted", ks_json(r.ks_mix_adjusted)},
          {"ks_cur_com", ks_json(r.aligned.ks_cur_com)},
          {"ks_x_aligned", ks_json(r.aligned.ks_x_aligned)},
          {"pct_x_aligned", json_real(r.aligned.pct_x_aligned)},
          {"gateway", std::string(to_string(r.aligned.gateway))}};
}

}  // namespace

nlohmann::json to_json(const DiagnosticReport& report) {
  json trace = nullptr;
  if (report.full_trace) {
    trace = {{"gate2", report.trace_gate2 ? gate2_json(*report.trace_gate2) : json(nullptr)},
             {"gate3", report.trace_gate3 ? gate3_json(*report.trace_gate3) : json(nullptr)}};
  }
  return {{"schema_version", kSchemaVersion},
          {"config", config_json(report.config)},
          {"gate1", report.gate1 ? gate1_json(*report.gate1) : json(nullptr)},
          {"gate2", report.gate2 ? gate2_json(*report.gate2) : json(nullptr)},
          {"gate3", report.gate3 ? gate3_json(*report.gate3) : json(nullptr)},
          {"final_diagnosis", std::string(to_string(report.final_diagnosis))},
          {"advisory_codes", report.advisory_codes},
          {"warnings", report.warnings},
          {"provenance",
           {{"ref_digest", report.provenance.ref_digest},
            {"cur_digest", report.provenance.cur_digest},
            {"seed", report.provenance.seed},
            {"tool_version", report.provenance.tool_version},
            {"conventions",
             {"QUANTILE_LINEAR_INTERPOLATION", "PCT_COMPONENTS_OVER_KS_REF",
              "STEP2_GATEWAY_SAME_TAU", "STEP3_GATEWAY_SAME_TAU",
              "MIX_WEIGHTS_AS_INSTANCE_WEIGHTS", "ETA_WEIGHTED_PRIOR",
              "DECISION_TABLE_CONSERVATIVE_EXTENSION"}}}},
          {"trace", trace}};
}

}  // namespace ksdiag
