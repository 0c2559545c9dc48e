#include <doctest.h>

#include <random>

#include "ksdiag/config_io.hpp"
#include "ksdiag/error.hpp"
#include "ksdiag/pipeline.hpp"
#include "ksdiag/render.hpp"
#include "ksdiag/simgen.hpp"
#include "oracles.hpp"

using namespace ksdiag;

namespace {

GovernanceConfig quick_config() {
  GovernanceConfig c;
  c.bootstrap_replicates = 200;
  c.seed = 0;
  return c;
}

DiagnosticReport diagnose_scenario(ScenarioId id, bool trace = false,
                                   GovernanceConfig config = quick_config()) {
  const GeneratedPair pair = generate(builtin_scenario(id, 0));
  return run_diagnosis(pair.ref, pair.cur, config, RunOptions{.full_trace = trace});
}

bool has(const std::vector<std::string>& v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

TEST_CASE("pipeline: halts where the gateways say") {
  const DiagnosticReport c2 = diagnose_scenario(ScenarioId::Step1Case2);
  CHECK(c2.final_diagnosis == FinalDiagnosis::SignificantNoBreach);
  CHECK_FALSE(c2.gate2.has_value());
  CHECK_FALSE(c2.gate3.has_value());
  CHECK(c2.advisory_codes == std::vector<std::string>{"NO_FURTHER_ANALYSIS"});
  CHECK_NOTHROW(check_report_structure(c2));

  const DiagnosticReport a = diagnose_scenario(ScenarioId::S2A);
  CHECK(a.gate1->classification == Gate1Class::ConfirmedBreach);
  CHECK(a.final_diagnosis == FinalDiagnosis::ExplainedByComposition);
  CHECK(a.gate2.has_value());
  CHECK_FALSE(a.gate3.has_value());
  CHECK(has(a.advisory_codes, "MIX_ADJUSTED_BENCHMARK"));

  const DiagnosticReport b = diagnose_scenario(ScenarioId::S3B);
  CHECK(b.final_diagnosis == FinalDiagnosis::ModelDegradationEscalation);
  CHECK(b.gate3.has_value());
  CHECK(has(b.advisory_codes, "MODEL_REDEVELOPMENT_REVIEW"));
  CHECK(exit_code(b.final_diagnosis) == 3);

  const DiagnosticReport s3a = diagnose_scenario(ScenarioId::S3A);
  CHECK(s3a.final_diagnosis == FinalDiagnosis::ExplainedByCovariateShift);
  CHECK(has(s3a.advisory_codes, "COVARIATE_SHIFT_MONITORING"));
}

TEST_CASE("pipeline: full trace never changes the normative result") {
  for (ScenarioId id : {ScenarioId::Step1Case1, ScenarioId::S2A, ScenarioId::S3A}) {
    const DiagnosticReport plain = diagnose_scenario(id, false);
    const DiagnosticReport traced = diagnose_scenario(id, true);
    CHECK(plain.final_diagnosis == traced.final_diagnosis);
    CHECK(plain.gate2.has_value() == traced.gate2.has_value());
    CHECK(plain.gate3.has_value() == traced.gate3.has_value());
    CHECK((traced.gate2 || traced.trace_gate2));
    CHECK((traced.gate3 || traced.trace_gate3));
    nlohmann::json p = to_json(plain);
    nlohmann::json t = to_json(traced);
    p.erase("trace");
    t.erase("trace");
    p["warnings"] = nullptr;
    t["warnings"] = nullptr;
    CHECK(p == t);
  }
}

TEST_CASE("pipeline: structural invariant rejects inconsistent reports") {
  DiagnosticReport r = diagnose_scenario(ScenarioId::Step1Case1);
  CHECK_NOTHROW(check_report_structure(r));
  r.gate2 = diagnose_scenario(ScenarioId::S2A).gate2;
  CHECK_THROWS_AS(check_report_structure(r), std::logic_error);
}

TEST_CASE("pipeline: degenerate input becomes a report, not a crash") {
  // no common support
  const PeriodSample ref(Period::Reference,
                         {{0.1, 0, "A", {}}, {0.2, 0, "A", {}}, {0.9, 1, "A", {}}});
  std::vector<Observation> cur_rows;
  std::mt19937_64 gen(1);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int i = 0; i < 400; ++i) cur_rows.push_back({z(gen) + (i % 2) * 0.1, i % 2, "B", {}});
  const PeriodSample cur(Period::Current, cur_rows);
  const DiagnosticReport r = run_diagnosis(ref, cur, quick_config());
  CHECK(r.final_diagnosis == FinalDiagnosis::DegenerateStopped);
  CHECK(exit_code(r.final_diagnosis) == 4);
  CHECK_NOTHROW(check_report_structure(r));
  CHECK_FALSE(r.warnings.empty());
  CHECK(to_json(r)["final_diagnosis"] == "DEGENERATE_STOPPED");
}

TEST_CASE("pipeline: report json shape and determinism") {
  const GeneratedPair pair = generate(builtin_scenario(ScenarioId::S2D, 0));
  GovernanceConfig config = quick_config();
  config.parallelism = 1;
  const std::string one = to_json(run_diagnosis(pair.ref, pair.cur, config)).dump();
  config.parallelism = 4;
  const std::string four = to_json(run_diagnosis(pair.ref, pair.cur, config)).dump();
  CHECK(one == four);

  const nlohmann::json j = nlohmann::json::parse(one);
  CHECK(j["schema_version"] == 1);
  for (const char* key : {"config", "gate1", "gate2", "gate3", "final_diagnosis",
                          "advisory_codes", "warnings", "provenance"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["provenance"]["tool_version"] == std::string(kToolVersion));
  CHECK(j["config"]["B"] == 200);
}

TEST_CASE("exit codes and diagnosis names") {
  for (FinalDiagnosis d :
       {FinalDiagnosis::NoActionSamplingVariation, FinalDiagnosis::SignificantNoBreach,
        FinalDiagnosis::MonitorBreachNotConfirmed, FinalDiagnosis::ExplainedByComposition,
        FinalDiagnosis::ExplainedByCovariateShift, FinalDiagnosis::ModelDegradationEscalation,
        FinalDiagnosis::DegenerateStopped}) {
    CHECK(parse_final_diagnosis(to_string(d)) == d);
  }
  CHECK(exit_code(FinalDiagnosis::NoActionSamplingVariation) == 0);
  CHECK(exit_code(FinalDiagnosis::SignificantNoBreach) == 0);
  CHECK(exit_code(FinalDiagnosis::ExplainedByComposition) == 0);
  CHECK(exit_code(FinalDiagnosis::ExplainedByCovariateShift) == 0);
  CHECK(exit_code(FinalDiagnosis::MonitorBreachNotConfirmed) == 2);
  CHECK(exit_code(FinalDiagnosis::ModelDegradationEscalation) == 3);
  CHECK(exit_code(FinalDiagnosis::DegenerateStopped) == 4);
}

TEST_CASE("json_real rounds to ten significant digits") {
  CHECK(json_real(0.12345678901234).get<double>() == 0.123456789);
  CHECK(json_real(1.0 / 3.0).get<double>() == 0.3333333333);
  CHECK(json_real(std::nan("")).is_null());
}

TEST_CASE("config text") {
  const ConfigOverlay o = parse_config_text(
      "# governance\ntau = -0.15\nalpha=0.1\nB = 500\nseed = 9\n\nweight_clip_high = 50\n");
  CHECK(o.config.tau == -0.15);
  CHECK(o.config.alpha == 0.1);
  CHECK(o.config.bootstrap_replicates == 500);
  CHECK(o.config.seed == 9);
  CHECK(o.seed_set);
  CHECK(o.config.weight_clip_high == 50.0);
  CHECK(o.config.min_segment_count == 30);
  CHECK_FALSE(parse_config_text("tau=-0.1\n").seed_set);
  CHECK_THROWS_AS(parse_config_text("tua = 1\n"), Error);
  CHECK_THROWS_AS(parse_config_text("tau = abc\n"), Error);
  CHECK_THROWS_AS(parse_config_text("tau\n"), Error);
  CHECK_THROWS_AS(parse_config_text("alpha = 2\n").config.validate(), Error);
}

TEST_CASE("render: sections follow the gates present") {
  const std::string halted = render_report(to_json(diagnose_scenario(ScenarioId::Step1Case1)));
  CHECK(halted.find("Step 1") != std::string::npos);
  CHECK(halted.find("Step 2") == std::string::npos);
  CHECK(halted.find("Step 3") == std::string::npos);

  // S2_D breaches a looser tau and escalates past Step 2
  GovernanceConfig loose = quick_config();
  loose.tau = -0.10;
  const DiagnosticReport d = diagnose_scenario(ScenarioId::S2D, false, loose);
  REQUIRE(d.gate2.has_value());
  const std::string full = render_report(to_json(d));
  for (const char* s : {"reference-only universe", "mix within common support",
                        "residual aligned gap", "current-only universe", "Step 3"}) {
    CHECK(full.find(s) != std::string::npos);
  }
  CHECK(full.find("non-normative") == std::string::npos);
  const ComponentSet& c = d.gate2->components;
  CHECK(std::fabs(c.sum() - (d.gate2->ks_cur.value - d.gate2->ks_ref.value)) <= 1e-12);

  // at the default tau it halts at Step 1; a trace still shows the waterfall
  const std::string traced = render_report(to_json(diagnose_scenario(ScenarioId::S2D, true)));
  CHECK(traced.find("Step 2  regime decomposition  [full trace, non-normative]") !=
        std::string::npos);
  CHECK(traced.find("residual aligned gap") != std::string::npos);

  nlohmann::json bad = to_json(diagnose_scenario(ScenarioId::Step1Case1));
  bad["schema_version"] = 2;
  CHECK_THROWS_AS(render_report(bad), Error);
  CHECK_THROWS_AS(render_report(nlohmann::json::object()), Error);
  nlohmann::json no_gate1 = to_json(diagnose_scenario(ScenarioId::Step1Case1));
  no_gate1["gate1"] = "oops";
  CHECK_THROWS_AS(render_report(no_gate1), Error);
}
