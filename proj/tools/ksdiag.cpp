// ksdiag: diagnose KS deterioration between a reference and a current
// scored portfolio, simulate benchmark scenarios, and render reports.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "ksdiag/config_io.hpp"
#include "ksdiag/data_model.hpp"
#include "ksdiag/error.hpp"
#include "ksdiag/pipeline.hpp"
#include "ksdiag/render.hpp"
#include "ksdiag/selftest.hpp"
#include "ksdiag/simgen.hpp"

namespace fs = std::filesystem;
using namespace ksdiag;

namespace {

constexpr int kUsageError = 1;

struct GovernanceFlags {
  double tau = 0;
  double alpha = 0;
  std::size_t bootstrap = 0;
  std::uint64_t seed = 0;
  bool seed_from_entropy = false;
  std::size_t min_segment_count = 0;
  double clip_low = 0;
  double clip_high = 0;
  double auroc_negligible = 0;
  std::size_t threads = 0;
  double holdout_fraction = 0;
  std::string config_path;

  CLI::Option* tau_opt = nullptr;
  CLI::Option* alpha_opt = nullptr;
  CLI::Option* bootstrap_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* min_count_opt = nullptr;
  CLI::Option* clip_low_opt = nullptr;
  CLI::Option* clip_high_opt = nullptr;
  CLI::Option* auroc_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* holdout_opt = nullptr;
  CLI::Option* config_opt = nullptr;

  void attach(CLI::App& app) {
    tau_opt = app.add_option("--tau", tau, "Breach threshold on the KS % change (e.g. -0.20)");
    alpha_opt = app.add_option("--alpha", alpha, "Significance level of the bootstrap interval");
    bootstrap_opt = app.add_option("--bootstrap", bootstrap, "Bootstrap replicates B");
    seed_opt = app.add_option("--seed", seed, "RNG seed");
    app.add_flag("--seed-from-entropy", seed_from_entropy,
                 "Draw the seed from system entropy instead of --seed");
    min_count_opt = app.add_option("--min-segment-count", min_segment_count,
                                   "Rows a segment needs in each period to be common");
    clip_low_opt = app.add_option("--clip-low", clip_low, "Lower covariate-weight clip");
    clip_high_opt = app.add_option("--clip-high", clip_high, "Upper covariate-weight clip");
    auroc_opt = app.add_option("--auroc-negligible", auroc_negligible,
                               "AUROC below which covariate shift is flagged negligible");
    threads_opt = app.add_option("--threads", threads, "Worker threads (0 = auto)");
    holdout_opt = app.add_option("--holdout-fraction", holdout_fraction,
                                 "Share of the domain-classifier set held out for AUROC");
    config_opt = app.add_option("--config", config_path, "key=value governance config file");
  }

  // Defaults, then the config file, then explicit flags.
  GovernanceConfig resolve() const {
    GovernanceConfig config;
    bool seed_set = false;
    if (config_opt->count() > 0) {
      const ConfigOverlay overlay = load_config_file(config_path, config);
      config = overlay.config;
      seed_set = overlay.seed_set;
    }
    if (tau_opt->count() > 0) config.tau = tau;
    if (alpha_opt->count() > 0) config.alpha = alpha;
    if (bootstrap_opt->count() > 0) config.bootstrap_replicates = bootstrap;
    if (min_count_opt->count() > 0) config.min_segment_count = min_segment_count;
    if (clip_low_opt->count() > 0) config.weight_clip_low = clip_low;
    if (clip_high_opt->count() > 0) config.weight_clip_high = clip_high;
    if (auroc_opt->count() > 0) config.auroc_negligible = auroc_negligible;
    if (threads_opt->count() > 0) config.parallelism = threads;
    if (holdout_opt->count() > 0) config.holdout_fraction = holdout_fraction;
    config.seed = resolve_seed(seed_set ? std::optional(config.seed) : std::nullopt);
    config.validate();
    return config;
  }

  std::uint64_t resolve_seed(std::optional<std::uint64_t> fallback) const {
    if (seed_opt->count() > 0 && seed_from_entropy) {
      throw CLI::ValidationError("--seed and --seed-from-entropy are exclusive");
    }
    if (seed_opt->count() > 0) return seed;
    if (seed_from_entropy) {
      std::random_device rd;
      return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    }
    if (fallback) return *fallback;
    throw CLI::ValidationError(
        "--seed is required (or pass --seed-from-entropy for an unreproducible run)");
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential diagnosis of KS deterioration in scored portfolios"};
  app.require_subcommand(1);

  // diagnose
  CLI::App* diagnose = app.add_subcommand("diagnose", "Diagnose KS change between two periods");
  std::string ref_csv;
  std::string cur_csv;
  std::string diagnose_output;
  std::string summary_path;
  std::string bootstrap_csv;
  bool full_trace = false;
  GovernanceFlags diagnose_flags;
  diagnose->add_option("ref_csv", ref_csv, "Reference period CSV")->required();
  diagnose->add_option("cur_csv", cur_csv, "Current period CSV")->required();
  diagnose->add_option("-o,--output", diagnose_output, "Report JSON path (default stdout)");
  diagnose->add_option("--summary", summary_path, "Also write a text summary here");
  diagnose->add_option("--bootstrap-csv", bootstrap_csv,
                       "Write the bootstrap %change distribution as CSV");
  diagnose->add_flag("--full-trace", full_trace,
                     "Also compute Steps 2-3 when a gateway halts (non-normative)");
  diagnose_flags.attach(*diagnose);

  // simulate
  CLI::App* simulate = app.add_subcommand("simulate", "Generate a benchmark scenario");
  std::string scenario_id;
  std::string spec_file;
  std::string simulate_output = ".";
  std::uint64_t simulate_seed = 0;
  bool simulate_entropy = false;
  auto* scenario_opt = simulate->add_option("scenario", scenario_id,
                                            "Built-in scenario id (e.g. S2_A)");
  auto* spec_opt = simulate->add_option("--spec", spec_file, "Scenario spec JSON");
  scenario_opt->excludes(spec_opt);
  auto* simulate_seed_opt = simulate->add_option("--seed", simulate_seed, "RNG seed");
  simulate->add_flag("--seed-from-entropy", simulate_entropy, "Draw the seed from entropy");
  simulate->add_option("-o,--output", simulate_output, "Output directory");

  // render
  CLI::App* render = app.add_subcommand("render", "Render a report JSON as text");
  std::string report_path;
  std::string render_output;
  render->add_option("report_json", report_path, "Report produced by diagnose")->required();
  render->add_option("-o,--output", render_output, "Text output path (default stdout)");

  // selftest
  CLI::App* selftest = app.add_subcommand("selftest", "Run the built-in scenario suite");
  std::uint64_t selftest_seed = 0;
  std::size_t selftest_threads = 0;
  std::string selftest_output;
  selftest->add_option("--seed", selftest_seed, "Scenario seed")->capture_default_str();
  selftest->add_option("--threads", selftest_threads, "Worker threads (0 = auto)");
  selftest->add_option("-o,--output", selftest_output, "Write all scenario reports as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (diagnose->parsed()) {
      const GovernanceConfig config = diagnose_flags.resolve();
      const PeriodSample ref = load_period_csv(ref_csv, Period::Reference);
      const PeriodSample cur = load_period_csv(cur_csv, Period::Current);
      const DiagnosticReport report =
          run_diagnosis(ref, cur, config, RunOptions{.full_trace = full_trace});
      const nlohmann::json j = to_json(report);
      const std::string text = j.dump(2) + "\n";
      if (diagnose_output.empty()) {
        std::cout << text;
      } else {
        write_text(diagnose_output, text);
      }
      if (!summary_path.empty()) write_text(summary_path, render_report(j));
      if (!bootstrap_csv.empty() && report.gate1) {
        std::string csv = "replicate,pct_change\n";
        for (std::size_t b = 0; b < report.gate1->distribution.size(); ++b) {
          csv += std::to_string(b) + "," + format_double(report.gate1->distribution[b]) + "\n";
        }
        write_text(bootstrap_csv, csv);
      }
      std::cerr << "final diagnosis: " << to_string(report.final_diagnosis) << "\n";
      return exit_code(report.final_diagnosis);
    }

    if (simulate->parsed()) {
      ScenarioSpec spec;
      std::optional<std::uint64_t> seed;
      if (simulate_seed_opt->count() > 0 && simulate_entropy) {
        throw CLI::ValidationError("--seed and --seed-from-entropy are exclusive");
      }
      if (simulate_seed_opt->count() > 0) {
        seed = simulate_seed;
      } else if (simulate_entropy) {
        std::random_device rd;
        seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
      }
      if (spec_opt->count() > 0) {
        nlohmann::json j;
        try {
          j = nlohmann::json::parse(read_text(spec_file));
        } catch (const nlohmann::json::exception& e) {
          throw Error(ErrorCode::InvalidSpec, spec_file + ": " + e.what());
        }
        if (!seed && j.contains("seed")) seed = j.at("seed").get<std::uint64_t>();
        spec = scenario_from_json(j);
      } else if (scenario_opt->count() > 0) {
        const auto id = parse_scenario_id(scenario_id);
        if (!id) throw Error(ErrorCode::InvalidSpec, "unknown scenario id '" + scenario_id + "'");
        spec = builtin_scenario(*id, 0);
      } else {
        throw CLI::ValidationError("simulate needs a scenario id or --spec");
      }
      if (!seed) {
        throw CLI::ValidationError(
            "--seed is required (or pass --seed-from-entropy for an unreproducible run)");
      }
      spec.seed = *seed;
      const GeneratedPair pair = generate(spec);
      const fs::path dir(simulate_output);
      fs::create_directories(dir);
      write_period_csv(pair.ref, dir / "ref.csv");
      write_period_csv(pair.cur, dir / "cur.csv");
      write_text(dir / "scenario.json", to_json(spec).dump(2) + "\n");
      return 0;
    }

    if (render->parsed()) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(read_text(report_path));
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, report_path + ": " + e.what());
      }
      const std::string text = render_report(j);
      if (render_output.empty()) {
        std::cout << text;
      } else {
        write_text(render_output, text);
      }
      return 0;
    }

    if (selftest->parsed()) {
      const SelftestResult result = run_selftest(selftest_seed, selftest_threads);
      for (const SelftestCheck& c : result.checks) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
      }
      if (!selftest_output.empty()) write_text(selftest_output, result.reports.dump(2) + "\n");
      return result.all_passed() ? 0 : 1;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}
