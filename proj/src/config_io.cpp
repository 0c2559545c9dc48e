#include "ksdiag/config_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include "ksdiag/error.hpp"

namespace ksdiag {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_value(std::string_view key, std::string_view text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::InvalidConfig, "config key '" + std::string(key) +
                                              "' has an invalid value '" +
                                              std::string(text) + "'");
  }
  return value;
}

}  // namespace

ConfigOverlay parse_config_text(std::string_view text, GovernanceConfig base) {
  ConfigOverlay out{base, false};
  GovernanceConfig& c = out.config;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::InvalidConfig,
                  "config line " + std::to_string(line_no) + " has no '='");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key == "tau") {
      c.tau = parse_value<double>(key, value);
    } else if (key == "alpha") {
      c.alpha = parse_value<double>(key, value);
    } else if (key == "B") {
      c.bootstrap_replicates = parse_value<std::size_t>(key, value);
    } else if (key == "seed") {
      c.seed = parse_value<std::uint64_t>(key, value);
      out.seed_set = true;
    } else if (key == "min_segment_count") {
      c.min_segment_count = parse_value<std::size_t>(key, value);
    } else if (key == "weight_clip_low") {
      c.weight_clip_low = parse_value<double>(key, value);
    } else if (key == "weight_clip_high") {
      c.weight_clip_high = parse_value<double>(key, value);
    } else if (key == "auroc_negligible") {
      c.auroc_negligible = parse_value<double>(key, value);
    } else if (key == "parallelism") {
      c.parallelism = parse_value<std::size_t>(key, value);
    } else if (key == "holdout_fraction") {
      c.holdout_fraction = parse_value<double>(key, value);
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown config key '" + std::string(key) + "'");
    }
  }
  return out;
}

ConfigOverlay load_config_file(const std::filesystem::path& path,
                               GovernanceConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), base);
}

}  // namespace ksdiag
