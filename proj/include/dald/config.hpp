#pragma once

#include <string>

#include "dald/harness.hpp"

namespace dald {

// Loads an ExperimentConfig from a JSON or TOML file (decided by extension,
// .toml vs anything else). Unknown keys are rejected; missing keys keep
// their defaults. Throws ConfigError / ParseError.
ExperimentConfig load_experiment_config(const std::string& path);

ExperimentConfig experiment_config_from_json(const std::string& json_text);

// Canonical JSON rendering of the semantic fields (out_dir and jobs are
// execution details and excluded), used for the config digest.
std::string experiment_config_canonical_json(const ExperimentConfig& cfg);

// Minimal TOML subset -> JSON text: [section] / [a.b] tables, key = value
// with string, integer, float, boolean and flat array values, # comments.
std::string toml_to_json(const std::string& toml_text);

}  // namespace dald
