#include "offload/sim/presets.hpp"

#include "offload/core/error.hpp"
#include "offload/tasklib/demo_tasks.hpp"

namespace offload::sim {

DeviceModel preset_client() {
  DeviceModel d;
  d.device_id = "client";
  d.kind = DeviceKind::client;
  d.cpu_score = 1.0;
  d.power_idle_w = 0.5;
  d.power_active_w = 2.5;
  d.power_tx_w = 1.0;
  return d;
}

DeviceModel preset_laptop_server() {
  DeviceModel d;
  d.device_id = "laptop";
  d.kind = DeviceKind::generic_server;
  d.cpu_score = 3.0;
  d.power_idle_w = 8.0;
  d.power_active_w = 20.0;
  d.power_tx_w = 1.5;
  d.charging = true;
  return d;
}

DeviceModel preset_phone_server() {
  DeviceModel d;
  d.device_id = "phone";
  d.kind = DeviceKind::android_server;
  d.cpu_score = 0.8;
  d.power_idle_w = 0.5;
  d.power_active_w = 2.5;
  d.power_tx_w = 1.0;
  d.battery_j = 25000.0;
  return d;
}

namespace {

ScenarioConfig base(const std::string& name) {
  ScenarioConfig cfg;
  cfg.name = name;
  cfg.devices = {preset_client(), preset_laptop_server(), preset_phone_server()};
  cfg.links = {LinkSpec{"client", "laptop", 20e6, 0.01, true}, LinkSpec{"client", "phone", 20e6, 0.01, true}};
  cfg.optimizer.latency_budget_s = 0.5;
  cfg.seed = 1;
  cfg.unit_time_s = 0.001;
  return cfg;
}

WorkloadEntry face_detect(std::uint32_t count, InterArrival ia = {}) {
  // Pictures of 120 to 180 KB, 1.2 s of detection each on the client.
  return WorkloadEntry{demo::kFaceDetect, count, 150000, 0.2, 1200.0, ia};
}

WorkloadEntry find_route(std::uint32_t count, InterArrival ia = {}) {
  // 128-node maps (16 KB), 1.8 s of routing each on the client.
  return WorkloadEntry{demo::kFindRoute, count, 16384, 0.0, 1800.0, ia};
}

}  // namespace

ScenarioConfig preset(const std::string& name) {
  if (name == "fd50") {
    auto cfg = base(name);
    cfg.workload = {face_detect(50)};
    return cfg;
  }
  if (name == "fr") {
    auto cfg = base(name);
    cfg.workload = {find_route(30)};
    return cfg;
  }
  if (name == "mixed_fleet") {
    auto cfg = base(name);
    const InterArrival ia{InterArrival::Kind::exponential, 0.2};
    cfg.workload = {face_detect(20, ia), find_route(10, ia),
                    WorkloadEntry{demo::kUpdateInfo, 10, 0, 0.0, 50.0, ia}};
    return cfg;
  }
  throw Error(ErrorCode::NotFound, "unknown preset " + name);
}

std::vector<std::string> preset_names() { return {"fd50", "fr", "mixed_fleet"}; }

}  // namespace offload::sim
