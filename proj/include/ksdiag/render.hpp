#pragma once

#include <string>

#include <json.hpp>

namespace ksdiag {

/// Plain-text summary of a schema_version 1 report: the Step 1 interval
/// against tau, the four-component waterfall, the covariate check and the
/// advisory codes. Steps that did not run are omitted.
/// Throws Error(SchemaMismatch).
std::string render_report(const nlohmann::json& report);

}  // namespace ksdiag
