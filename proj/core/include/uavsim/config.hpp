#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "uavsim/scenario.hpp"

namespace uavsim {

/// Reads a JSON scenario config. Missing keys take defaults, unknown keys are rejected.
/// Parse failures report line and column; field errors name the key path.
ScenarioConfig load_config(const std::filesystem::path& path);
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ScenarioConfig& config);

nlohmann::json scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const nlohmann::json& j);

/// Named presets. "paper": 16 UAVs / 4 stations / 110 tasks / 400 episodes.
/// "desk": 4 UAVs / 2 stations / 30 tasks sized for a laptop.
ScenarioConfig profile_config(const std::string& name);

}  // namespace uavsim
