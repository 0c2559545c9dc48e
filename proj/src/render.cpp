#include "ksdiag/render.hpp"

#include <cstdio>
#include <string_view>

#include "ksdiag/error.hpp"
#include "ksdiag/pipeline.hpp"

namespace ksdiag {

namespace {

using nlohmann::json;

[[noreturn]] void mismatch(const std::string& what) {
  throw Error(ErrorCode::SchemaMismatch, "report schema mismatch: " + what);
}

double num(const json& j, std::string_view key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number()) mismatch("expected number '" + std::string(key) + "'");
  return it->get<double>();
}

std::string str(const json& j, std::string_view key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) mismatch("expected string '" + std::string(key) + "'");
  return it->get<std::string>();
}

const json& obj(const json& j, std::string_view key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_object()) mismatch("expected object '" + std::string(key) + "'");
  return *it;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

std::string pct(double v) { return fmt("%+.2f%%", 100.0 * v); }

std::string join(const json& list) {
  if (!list.is_array()) mismatch("expected array");
  if (list.empty()) return "-";
  std::string out;
  for (const auto& item : list) {
    if (!out.empty()) out += ", ";
    out += item.get<std::string>();
  }
  return out;
}

std::string ci_verdict(double low, double high, double tau) {
  if (high < tau) return "interval entirely below tau";
  if (low <= tau && high < 0.0) return "interval below zero and straddling tau";
  if (low <= tau) return "interval reaches zero and dips below tau";
  if (high < 0.0) return "interval below zero, above tau";
  if (low >= 0.0) return "interval at or above zero";
  return "interval contains zero, above tau";
}

void render_gate1(std::string& out, const json& g1, double tau, double alpha) {
  out += "Step 1  breach confirmation\n";
  out += "  KS_ref " + fmt("%.4f", num(g1, "ks_ref")) + "   KS_cur " +
         fmt("%.4f", num(g1, "ks_cur")) + "   change " +
         pct(num(g1, "pct_change_observed")) + "\n";
  const double low = num(g1, "ci_low");
  const double high = num(g1, "ci_high");
  out += "  " + fmt("%.0f", 100.0 * (1.0 - alpha)) + "% CI [" + pct(low) + ", " +
         pct(high) + "]   tau " + pct(tau) + "\n";
  out += "  verdict: " + str(g1, "classification") + " (" + ci_verdict(low, high, tau) +
         ")\n";
  out += "  replicates used " + fmt("%.0f", num(g1, "replicates_used")) + " of " +
         fmt("%.0f", num(g1, "replicates_requested")) + "\n";
}

void render_gate2(std::string& out, const json& g2, const std::string& tag) {
  const json& part = obj(g2, "partition");
  const json& ks = obj(g2, "ks");
  const json& comp = obj(g2, "components");
  const json& pcts = obj(g2, "pct_components");
  out += "\nStep 2  regime decomposition" + tag + "\n";
  out += "  common: " + join(part.at("common")) + "   ref-only: " +
         join(part.at("ref_only")) + "   cur-only: " + join(part.at("cur_only")) + "\n";
  out += "  KS_ref^com " + fmt("%.4f", num(obj(ks, "ref_com"), "value")) +
         "   KS_cur^com " + fmt("%.4f", num(obj(ks, "cur_com"), "value")) +
         "   mix-adjusted " + fmt("%.4f", num(obj(ks, "mix_adjusted"), "value")) + "\n";
  out += "  waterfall                     KS units   % of KS_ref\n";
  out += "    KS_ref                      " + fmt("%8.4f", num(obj(ks, "ref"), "value")) + "\n";
  static constexpr std::pair<const char*, const char*> kRows[] = {
      {"ref_only", "reference-only universe"},
      {"mix", "mix within common support"},
      {"residual", "residual aligned gap"},
      {"cur_only", "current-only universe"},
  };
  for (const auto& [key, label] : kRows) {
    char line[128];
    std::snprintf(line, sizeof(line), "    %-27s %+8.4f   %s\n", label, num(comp, key),
                  pct(num(pcts, key)).c_str());
    out += line;
  }
  out += "    KS_cur                      " + fmt("%8.4f", num(obj(ks, "cur"), "value")) +
         "   total " + pct(num(g2, "pct_change_total")) + "\n";
  out += "  aligned residual change " + pct(num(g2, "pct_aligned_residual")) +
         "   gateway " + str(g2, "gateway") + "\n";
}

void render_gate3(std::string& out, const json& g3, const std::string& tag) {
  const json& ws = obj(g3, "weight_stats");
  out += "\nStep 3  covariate alignment" + tag + "\n";
  const bool negligible = g3.value("shift_negligible", false);
  out += "  domain classifier AUROC " + fmt("%.3f", num(g3, "auroc")) +
         (negligible ? " (negligible shift)" : " (shift detectable)") + "\n";
  out += "  covariate weights min " + fmt("%.4g", num(ws, "min")) + "  max " +
         fmt("%.4g", num(ws, "max")) + "  mean " + fmt("%.4f", num(ws, "mean")) +
         "  clipped " + fmt("%.2f%%", 100.0 * num(ws, "fraction_clipped")) + "\n";
  out += "  KS mix-adjusted " + fmt("%.4f", num(obj(g3, "ks_mix_adjusted"), "value")) +
         "   KS x-aligned " + fmt("%.4f", num(obj(g3, "ks_x_aligned"), "value")) +
         "   KS_cur^com " + fmt("%.4f", num(obj(g3, "ks_cur_com"), "value")) + "\n";
  out += "  change after covariate alignment " + pct(num(g3, "pct_x_aligned")) +
         "   gateway " + str(g3, "gateway") + "\n";
}

}  // namespace

std::string render_report(const json& report) {
  if (!report.is_object()) mismatch("report is not a JSON object");
  const auto version = report.find("schema_version");
  if (version == report.end() || !version->is_number_integer() ||
      version->get<int>() != kSchemaVersion) {
    mismatch("schema_version must be " + std::to_string(kSchemaVersion));
  }
  for (const char* key : {"config", "gate1", "gate2", "gate3", "final_diagnosis",
                          "advisory_codes", "warnings", "provenance"}) {
    if (!report.contains(key)) mismatch(std::string("missing key '") + key + "'");
  }
  const json& config = obj(report, "config");
  const double tau = num(config, "tau");
  const double alpha = num(config, "alpha");

  std::string out = "KS deterioration diagnosis\n";
  out += "final diagnosis: " + str(report, "final_diagnosis") + "\n\n";
  try {
    for (const char* key : {"gate1", "gate2", "gate3"}) {
      const json& g = report.at(key);
      if (!g.is_object() && !g.is_null()) mismatch(std::string(key) + " must be an object or null");
    }
    // Forced steps from a full-trace run fill in whatever the gateways skipped.
    const json none;
    const json* trace = &none;
    if (const auto t = report.find("trace"); t != report.end() && t->is_object()) trace = &*t;
    const std::string forced = "  [full trace, non-normative]";
    if (report.at("gate1").is_object()) render_gate1(out, report.at("gate1"), tau, alpha);
    if (report.at("gate2").is_object()) {
      render_gate2(out, report.at("gate2"), "");
    } else if (trace->contains("gate2") && trace->at("gate2").is_object()) {
      render_gate2(out, trace->at("gate2"), forced);
    }
    if (report.at("gate3").is_object()) {
      render_gate3(out, report.at("gate3"), "");
    } else if (trace->contains("gate3") && trace->at("gate3").is_object()) {
      render_gate3(out, trace->at("gate3"), forced);
    }
    out += "\nadvisory codes: " + join(report.at("advisory_codes")) + "\n";
    const json& warnings = report.at("warnings");
    if (!warnings.is_array()) mismatch("warnings must be an array");
    for (const auto& w : warnings) out += "warning: " + w.get<std::string>() + "\n";
  } catch (const json::exception& e) {
    mismatch(e.what());
  }
  return out;
}

}  // namespace ksdiag
