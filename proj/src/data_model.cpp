#include "ksdiag/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "ksdiag/digest.hpp"
#include "ksdiag/error.hpp"

namespace ksdiag {

std::string_view to_string(Period period) {
  return period == Period::Reference ? "reference" : "current";
}

PeriodSample::PeriodSample(Period period, std::vector<Observation> observations)
    : period_(period), observations_(std::move(observations)) {
  if (observations_.empty()) {
    throw Error(ErrorCode::EmptyFile, "period sample has no observations");
  }
  dimension_ = observations_.front().covariates.size();
  bool any_good = false;
  bool any_bad = false;
  std::set<std::string> universe;
  for (std::size_t i = 0; i < observations_.size(); ++i) {
    const Observation& obs = observations_[i];
    if (!std::isfinite(obs.score)) {
      throw Error(ErrorCode::NonFiniteScore,
                  "observation " + std::to_string(i) + " has a non-finite score");
    }
    if (obs.label != 0 && obs.label != 1) {
      throw Error(ErrorCode::BadLabel,
                  "observation " + std::to_string(i) + " has label " +
                      std::to_string(obs.label));
    }
    if (obs.segment.empty()) {
      throw Error(ErrorCode::EmptySegment,
                  "observation " + std::to_string(i) + " has an empty segment");
    }
    if (obs.covariates.size() != dimension_) {
      throw Error(ErrorCode::RaggedCovariates,
                  "observation " + std::to_string(i) + " has " +
                      std::to_string(obs.covariates.size()) +
                      " covariates, expected " + std::to_string(dimension_));
    }
    for (double x : obs.covariates) {
      if (!std::isfinite(x)) {
        throw Error(ErrorCode::MalformedNumber,
                    "observation " + std::to_string(i) +
                        " has a non-finite covariate");
      }
    }
    (obs.label == 1 ? any_bad : any_good) = true;
    universe.insert(obs.segment);
  }
  if (!any_good || !any_bad) {
    throw Error(ErrorCode::SingleClassSample,
                std::string(to_string(period_)) +
                    " sample must contain both goods and bads");
  }
  universe_.assign(universe.begin(), universe.end());
}

bool PeriodSample::has_segment(std::string_view segment) const {
  return std::binary_search(universe_.begin(), universe_.end(), segment);
}

WeightedSample::WeightedSample(const PeriodSample& base)
    : base_(&base), weights_(base.size(), 1.0) {}

WeightedSample::WeightedSample(const PeriodSample& base,
                               std::vector<double> weights)
    : base_(&base), weights_(std::move(weights)) {
  if (weights_.size() != base.size()) {
    throw Error(ErrorCode::NonPositiveWeight,
                "weight vector length does not match sample size");
  }
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::NonPositiveWeight,
                  "weights must be strictly positive and finite");
    }
  }
}

ClassCounts class_counts(const PeriodSample& sample) {
  ClassCounts counts;
  for (const Observation& obs : sample.observations()) {
    ++(obs.label == 1 ? counts.n_bad : counts.n_good);
  }
  return counts;
}

void GovernanceConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::InvalidConfig, what);
  };
  if (!(tau < 0.0)) fail("tau must be negative");
  if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha must lie in (0, 1)");
  if (bootstrap_replicates < 1) fail("bootstrap replicate count must be >= 1");
  if (min_segment_count < 1) fail("min_segment_count must be >= 1");
  if (!(weight_clip_low > 0.0) || !(weight_clip_low <= 1.0) ||
      !(weight_clip_high >= 1.0) || !std::isfinite(weight_clip_high)) {
    fail("weight clip must satisfy 0 < low <= 1 <= high < inf");
  }
  if (!(auroc_negligible >= 0.5 && auroc_negligible < 1.0)) {
    fail("auroc_negligible must lie in [0.5, 1)");
  }
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    fail("holdout_fraction must lie in [0, 1)");
  }
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_real(std::string_view field, std::size_t line_no,
                  std::string_view column) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec == std::errc::result_out_of_range && ptr == last) {
    // overflow reads as +-inf, underflow as the nearest tiny value
    value = std::strtod(std::string(first, last).c_str(), nullptr);
    ec = std::errc();
  }
  if (field.empty() || ec != std::errc() || ptr != last) {
    throw Error(ErrorCode::MalformedNumber,
                "line " + std::to_string(line_no) + ": column '" +
                    std::string(column) + "' is not a number: '" +
                    std::string(field) + "'");
  }
  return value;
}

}  // namespace

PeriodSample parse_period_csv(std::string_view text, Period period) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw Error(ErrorCode::EmptyFile, "file is empty");

  const std::vector<std::string_view> header = split_fields(lines.front());
  static constexpr std::string_view kRequired[] = {"score", "label", "segment"};
  for (std::size_t k = 0; k < 3; ++k) {
    if (header.size() <= k || header[k] != kRequired[k]) {
      const bool present =
          std::find(header.begin(), header.end(), kRequired[k]) != header.end();
      throw Error(present ? ErrorCode::UnexpectedColumn : ErrorCode::MissingColumn,
                  "header column " + std::to_string(k + 1) + " must be '" +
                      std::string(kRequired[k]) + "'");
    }
  }
  const std::size_t dimension = header.size() - 3;
  for (std::size_t j = 0; j < dimension; ++j) {
    const std::string expected = "x" + std::to_string(j + 1);
    if (header[3 + j] != expected) {
      throw Error(ErrorCode::UnexpectedColumn,
                  "unexpected header column '" + std::string(header[3 + j]) +
                      "', expected '" + expected + "'");
    }
  }
  if (lines.size() < 2) throw Error(ErrorCode::EmptyFile, "file has no data rows");

  std::vector<Observation> observations;
  observations.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const std::vector<std::string_view> fields = split_fields(lines[i]);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::RaggedCovariates,
                  "line " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields, header has " +
                      std::to_string(header.size()));
    }
    Observation obs;
    obs.score = parse_real(fields[0], line_no, "score");
    if (!std::isfinite(obs.score)) {
      throw Error(ErrorCode::NonFiniteScore,
                  "line " + std::to_string(line_no) + ": score is not finite");
    }
    if (fields[1] == "0") {
      obs.label = 0;
    } else if (fields[1] == "1") {
      obs.label = 1;
    } else {
      throw Error(ErrorCode::BadLabel, "line " + std::to_string(line_no) +
                                           ": label must be 0 or 1, got '" +
                                           std::string(fields[1]) + "'");
    }
    if (fields[2].empty()) {
      throw Error(ErrorCode::EmptySegment,
                  "line " + std::to_string(line_no) + ": empty segment");
    }
    obs.segment = std::string(fields[2]);
    obs.covariates.reserve(dimension);
    for (std::size_t j = 0; j < dimension; ++j) {
      obs.covariates.push_back(parse_real(fields[3 + j], line_no, header[3 + j]));
    }
    observations.push_back(std::move(obs));
  }
  return PeriodSample(period, std::move(observations));
}

PeriodSample load_period_csv(const std::filesystem::path& path, Period period) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string bytes = buffer.str();
  try {
    PeriodSample sample = parse_period_csv(bytes, period);
    sample.set_digest(sha256_hex(bytes));
    return sample;
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string format_period_csv(const PeriodSample& sample) {
  std::string out = "score,label,segment";
  for (std::size_t j = 0; j < sample.dimension(); ++j) {
    out += ",x" + std::to_string(j + 1);
  }
  out += '\n';
  for (const Observation& obs : sample.observations()) {
    out += format_double(obs.score);
    out += obs.label == 1 ? ",1," : ",0,";
    out += obs.segment;
    for (double x : obs.covariates) {
      out += ',';
      out += format_double(x);
    }
    out += '\n';
  }
  return out;
}

void write_period_csv(const PeriodSample& sample,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << format_period_csv(sample);
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

}  // namespace ksdiag
