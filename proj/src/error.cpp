#include "ksdiag/error.hpp"

namespace ksdiag {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MISSING_COLUMN";
    case ErrorCode::UnexpectedColumn: return "UNEXPECTED_COLUMN";
    case ErrorCode::NonFiniteScore: return "NON_FINITE_SCORE";
    case ErrorCode::BadLabel: return "BAD_LABEL";
    case ErrorCode::RaggedCovariates: return "RAGGED_COVARIATES";
    case ErrorCode::EmptyFile: return "EMPTY_FILE";
    case ErrorCode::SingleClassSample: return "SINGLE_CLASS_SAMPLE";
    case ErrorCode::MalformedNumber: return "MALFORMED_NUMBER";
    case ErrorCode::EmptySegment: return "EMPTY_SEGMENT";
    case ErrorCode::Io: return "IO";
    case ErrorCode::InvalidConfig: return "INVALID_CONFIG";
    case ErrorCode::InvalidSpec: return "INVALID_SPEC";
    case ErrorCode::EmptyClass: return "EMPTY_CLASS";
    case ErrorCode::NonPositiveWeight: return "NON_POSITIVE_WEIGHT";
    case ErrorCode::EmptyClassAfterFilter: return "EMPTY_CLASS_AFTER_FILTER";
    case ErrorCode::ZeroReferenceKs: return "ZERO_REFERENCE_KS";
    case ErrorCode::EmptyVector: return "EMPTY_VECTOR";
    case ErrorCode::AllReplicatesDegenerate: return "ALL_REPLICATES_DEGENERATE";
    case ErrorCode::EmptyCommonSupport: return "EMPTY_COMMON_SUPPORT";
    case ErrorCode::ZeroMixAdjustedKs: return "ZERO_MIX_ADJUSTED_KS";
    case ErrorCode::NoCovariates: return "NO_COVARIATES";
    case ErrorCode::SingleClass: return "SINGLE_CLASS";
    case ErrorCode::ZeroXAlignedKs: return "ZERO_X_ALIGNED_KS";
    case ErrorCode::SchemaMismatch: return "SCHEMA_MISMATCH";
  }
  return "UNKNOWN";
}

}  // namespace ksdiag
