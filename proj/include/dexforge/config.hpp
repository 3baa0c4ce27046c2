#pragma once

#include "dexforge/energy.hpp"
#include "dexforge/optimizer.hpp"
#include "dexforge/part_init.hpp"
#include "dexforge/validation.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace dexforge {

inline constexpr const char* kToolVersion = "0.1.0";

struct PipelineConfig {
  std::string hand_file;  // absolute after loading
  EnergyWeights energy;
  OptimizerConfig optimizer;
  ClassifyOptions classify;
  JitterConfig jitter;
  ValidationParams validation;
  int batch = 64;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Defaults, with the bundled hand description.
PipelineConfig default_config();

/// Keys absent from the file keep their defaults; unknown keys are rejected. A relative
/// hand_file is resolved against the config file's directory.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);

nlohmann::json config_to_json(const PipelineConfig& config);

/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const PipelineConfig& config);

}  // namespace dexforge
