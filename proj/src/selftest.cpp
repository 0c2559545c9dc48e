#include "ksdiag/selftest.hpp"

#include <cmath>
#include <cstdio>

#include "ksdiag/pipeline.hpp"
#include "ksdiag/simgen.hpp"

namespace ksdiag {

bool SelftestResult::all_passed() const {
  for (const SelftestCheck& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

bool within(double value, double target, double tol) {
  return std::fabs(value - target) <= tol;
}

const DecompositionResult* step2_of(const DiagnosticReport& r) {
  if (r.gate2) return &*r.gate2;
  if (r.trace_gate2) return &*r.trace_gate2;
  return nullptr;
}

const CovariateShiftResult* step3_of(const DiagnosticReport& r) {
  if (r.gate3) return &*r.gate3;
  if (r.trace_gate3) return &*r.trace_gate3;
  return nullptr;
}

}  // namespace

SelftestResult run_selftest(std::uint64_t seed, std::size_t parallelism) {
  SelftestResult result;
  result.reports = nlohmann::json::object();
  GovernanceConfig config;
  config.seed = seed;
  config.parallelism = parallelism;

  auto add = [&](std::string name, bool passed, std::string detail) {
    result.checks.push_back({std::move(name), passed, std::move(detail)});
  };

  for (ScenarioId id : all_scenarios()) {
    const GeneratedPair pair = generate(builtin_scenario(id, seed));
    const DiagnosticReport report =
        run_diagnosis(pair.ref, pair.cur, config, RunOptions{.full_trace = true});
    const std::string name(to_string(id));
    result.reports[name] = to_json(report);
    const Gate1Class g1 =
        report.gate1 ? report.gate1->classification : Gate1Class::NoDeterioration;
    const DecompositionResult* d = step2_of(report);
    const CovariateShiftResult* c = step3_of(report);

    switch (id) {
      case ScenarioId::Step1Case1:
      case ScenarioId::Step1Case2:
      case ScenarioId::Step1Case3:
      case ScenarioId::Step1Case4: {
        static constexpr Gate1Class kExpected[] = {
            Gate1Class::NoDeterioration, Gate1Class::SignificantNoBreach,
            Gate1Class::BreachNotConfirmed, Gate1Class::ConfirmedBreach};
        const Gate1Class want = kExpected[static_cast<int>(id)];
        add(name + " classification", report.gate1 && g1 == want,
            std::string(to_string(g1)) + " (want " + std::string(to_string(want)) +
                ")");
        break;
      }
      case ScenarioId::S2A:
      case ScenarioId::S2B: {
        const bool a = id == ScenarioId::S2A;
        const double ks_ref_target = a ? 0.598 : 0.689;
        const double ks_cur_target = a ? 0.458 : 0.550;
        const bool ok = d && within(d->ks_ref.value, ks_ref_target, 0.02) &&
                        within(d->ks_cur.value, ks_cur_target, 0.02) &&
                        std::fabs(d->pct_aligned_residual) <= 0.05 &&
                        (a || (d->components.cur_only != 0.0 &&
                               d->components.ref_only != 0.0)) &&
                        report.final_diagnosis == FinalDiagnosis::ExplainedByComposition;
        add(name + " decomposition", ok,
            d ? "KS " + num(d->ks_ref.value) + " -> " + num(d->ks_cur.value) +
                    ", aligned " + num(d->pct_aligned_residual) + ", " +
                    std::string(to_string(report.final_diagnosis))
              : "no decomposition");
        break;
      }
      case ScenarioId::S2C: {
        const double total = d ? d->components.sum() : 0.0;
        const bool ok = d && d->components.cur_only == 0.0 &&
                        d->components.ref_only == 0.0 &&
                        std::fabs(d->components.mix) <= 0.01 &&
                        d->components.residual / total >= 0.95 &&
                        d->gateway == Gate2Gateway::EscalateToStep3;
        add(name + " decomposition", ok,
            d ? "residual " + num(d->components.residual) + " of " + num(total) +
                    ", mix " + num(d->components.mix) + ", " +
                    std::string(to_string(d->gateway))
              : "no decomposition");
        break;
      }
      case ScenarioId::S2D: {
        const bool ok = d && d->components.cur_only != 0.0 &&
                        d->components.ref_only != 0.0 && d->components.mix != 0.0 &&
                        d->components.residual != 0.0 &&
                        within(d->pct_change_total, -0.165, 0.04) &&
                        d->pct_components.residual >= -0.12 &&
                        d->pct_components.residual <= -0.03;
        add(name + " decomposition", ok,
            d ? "total " + num(d->pct_change_total) + ", residual " +
                    num(d->pct_components.residual)
              : "no decomposition");
        break;
      }
      case ScenarioId::S3A:
      case ScenarioId::S3B: {
        const bool a = id == ScenarioId::S3A;
        bool ok = c && d;
        if (ok && a) {
          ok = within(c->auroc, 0.772, 0.04) &&
               std::fabs(c->aligned.ks_x_aligned.value - c->aligned.ks_cur_com.value) <=
                   0.03 &&
               report.final_diagnosis == FinalDiagnosis::ExplainedByCovariateShift;
        } else if (ok) {
          ok = c->auroc <= 0.70 &&
               std::fabs(c->aligned.ks_x_aligned.value - d->ks_ref_com.value) <= 0.04 &&
               report.final_diagnosis == FinalDiagnosis::ModelDegradationEscalation;
        }
        add(name + " covariate alignment", ok,
            c ? "AUROC " + num(c->auroc) + ", KS x-aligned " +
                    num(c->aligned.ks_x_aligned.value) + " vs cur " +
                    num(c->aligned.ks_cur_com.value) + ", " +
                    std::string(to_string(report.final_diagnosis))
              : "no covariate step");
        break;
      }
    }
  }
  return result;
}

}  // namespace ksdiag
