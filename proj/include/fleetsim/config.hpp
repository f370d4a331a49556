#pragma once

// Scenario config files: JSON with one object per section. Every key is
// optional and falls back to the built-in default, but unknown keys and
// wrongly typed values are hard errors.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "fleetsim/sim.hpp"

namespace fleetsim {

// Overlays `j` on `base`; throws Error(config) naming the offending key path.
ScenarioConfig scenario_from_json(const nlohmann::json& j, ScenarioConfig base = default_scenario());

// Full resolved config; scenario_from_json(scenario_to_json(c)) == c field for field.
nlohmann::json scenario_to_json(const ScenarioConfig& c);

// Reads and validates a config file. Throws Error(io) when unreadable.
ScenarioConfig load_scenario(const std::filesystem::path& path);

}  // namespace fleetsim
