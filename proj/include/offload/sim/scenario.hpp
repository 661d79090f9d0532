#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "offload/core/types.hpp"
#include "offload/optimizer/optimizer.hpp"

namespace offload::sim {

struct InterArrival {
  enum class Kind { fixed, exponential };
  Kind kind = Kind::fixed;
  double mean_s = 0.0;
};

struct WorkloadEntry {
  TaskClassId class_id;
  std::uint32_t count = 0;
  std::uint64_t payload_bytes = 0;
  // Relative spread of payload sizes: each size is drawn uniformly from
  // payload_bytes * [1 - spread, 1 + spread].
  double payload_spread = 0.0;
  // Reference work per task, in units of unit_time_s on a cpu_score 1.0 device.
  double work_units = 0.0;
  InterArrival inter_arrival;
};

struct LinkSpec {
  std::string client;
  std::string server;
  double throughput_bps = 20e6;
  double latency_s = 0.01;
  bool up = true;
};

struct FaultEvent {
  enum class Kind { link_down, link_up, server_crash };
  double time_s = 0.0;
  Kind kind = Kind::link_down;
  std::string server;
};

struct SchedulerKnobs {
  std::optional<double> edp_threshold_js;
  std::uint32_t steal_capacity = 1;
  std::uint32_t low_watermark = 1;
  double steal_backoff_s = 0.1;
  double steal_backoff_max_s = 2.0;
  double class_threshold = 1.5;
};

struct ScenarioConfig {
  std::string name = "custom";
  std::vector<DeviceModel> devices;  // exactly one client
  std::vector<LinkSpec> links;
  std::vector<WorkloadEntry> workload;
  OptimizerConfig optimizer;
  SchedulerKnobs scheduler;
  std::uint64_t seed = 1;
  std::vector<FaultEvent> faults;
  bool offloading = true;
  double unit_time_s = 0.001;
  // Profiling and connection setup happen before this; the measured window starts here.
  double warmup_s = 0.1;
  double remote_fail_probability = 0.0;
  double max_sim_time_s = 1e6;

  // Throws ConfigError naming the offending field.
  void validate() const;
  const DeviceModel& client() const;
  std::vector<const DeviceModel*> servers() const;
  std::size_t task_count() const;
  // Hash of the workload description; independent of the seed.
  std::string workload_hash() const;
};

nlohmann::ordered_json to_json(const ScenarioConfig& cfg);
// Throws ConfigError naming the offending field.
ScenarioConfig scenario_from_json(const nlohmann::json& j);
ScenarioConfig load_scenario(const std::string& path);

}  // namespace offload::sim
