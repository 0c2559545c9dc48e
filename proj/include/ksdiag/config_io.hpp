#pragma once

#include <filesystem>
#include <string_view>

#include "ksdiag/data_model.hpp"

namespace ksdiag {

struct ConfigOverlay {
  GovernanceConfig config;
  bool seed_set = false;
};

/// Flat `key = value` lines named after GovernanceConfig fields (tau, alpha,
/// B, seed, min_segment_count, weight_clip_low, weight_clip_high,
/// auroc_negligible, parallelism, holdout_fraction). Blank lines and lines
/// starting with '#' are ignored; unknown keys are rejected.
ConfigOverlay parse_config_text(std::string_view text, GovernanceConfig base = {});
ConfigOverlay load_config_file(const std::filesystem::path& path,
                               GovernanceConfig base = {});

}  // namespace ksdiag
