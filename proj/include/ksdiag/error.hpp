#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ksdiag {

enum class ErrorCode {
  // ingestion
  MissingColumn,
  UnexpectedColumn,
  NonFiniteScore,
  BadLabel,
  RaggedCovariates,
  EmptyFile,
  SingleClassSample,
  MalformedNumber,
  EmptySegment,
  Io,
  // configuration
  InvalidConfig,
  InvalidSpec,
  // ks kernel
  EmptyClass,
  NonPositiveWeight,
  EmptyClassAfterFilter,
  ZeroReferenceKs,
  // step 1
  EmptyVector,
  AllReplicatesDegenerate,
  // step 2
  EmptyCommonSupport,
  ZeroMixAdjustedKs,
  // step 3
  NoCovariates,
  SingleClass,
  ZeroXAlignedKs,
  // reports
  SchemaMismatch,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (the pipeline in particular) can turn it into a report entry.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ksdiag
