#pragma once

#include <string>

#include "enspace/config.hpp"

#ifndef ENSPACE_PRESET_DIR
#error "ENSPACE_PRESET_DIR must point at the presets directory"
#endif

namespace enspace::testing {

inline ScenarioConfig preset_config(const std::string& name) {
    return load_config_file(std::string(ENSPACE_PRESET_DIR) + "/" + name + ".ini");
}

inline Scenario preset(const std::string& name) { return to_scenario(preset_config(name)); }

}  // namespace enspace::testing
