#pragma once

#include <json.hpp>
#include <string>

#include "shiftgan/training.hpp"

namespace shiftgan {

/// Key/value config file: one `key = value` per line, '#' comments, lists
/// comma-separated. Unknown keys are configuration errors.
TrainConfig parse_config_file(const std::string& path);
void apply_config_entry(TrainConfig& cfg, const std::string& key, const std::string& value);

nlohmann::json config_to_json(const TrainConfig& cfg);

} // namespace shiftgan
