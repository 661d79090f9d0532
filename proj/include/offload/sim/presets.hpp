#pragma once

#include <string>
#include <vector>

#include "offload/sim/scenario.hpp"

namespace offload::sim {

// Calibrated device models shared by the presets. The wattages and speeds are
// chosen so that heavy tasks pass the offload decision; they are not measurements.
DeviceModel preset_client();
DeviceModel preset_laptop_server();
DeviceModel preset_phone_server();

// "fd50", "fr" or "mixed_fleet". Throws NotFound otherwise.
ScenarioConfig preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace offload::sim
