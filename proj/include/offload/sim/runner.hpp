#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "offload/profiler/profiler.hpp"
#include "offload/protocol/client_endpoint.hpp"
#include "offload/sim/metrics.hpp"
#include "offload/sim/scenario.hpp"
#include "offload/tasklib/task.hpp"

namespace offload::sim {

struct RunOptions {
  bool keep_trace = true;
  // Persistent profile file; classes already in it skip the warm-up run.
  std::optional<std::filesystem::path> profile_db;
};

struct TimedInstance {
  double arrival_s = 0.0;
  TaskInstance instance;
};

struct RunResult {
  RunMetrics metrics;
  std::vector<std::string> trace;
  std::vector<TimedInstance> instances;  // in arrival order
  std::vector<TaskOutcome> outcomes;     // in completion order
  std::map<TaskInstanceId, int> listener_calls;
  std::map<TaskInstanceId, Bytes> final_client_data;
  std::vector<std::string> client_messages;
  std::vector<std::string> offload_table;
  std::size_t trace_order_violations = 0;
  std::size_t frames_dropped = 0;
  std::uint64_t events = 0;
};

// Deterministic instance list for a scenario.
std::vector<TimedInstance> generate_workload(const ScenarioConfig& cfg, const TaskRegistry& registry);

// Client-side link estimate from synthetic transfers over the simulated link.
LinkModel calibrate_link(const DeviceModel& client, const LinkSpec& link);

// Runs the scenario to its last completion. Throws ConfigError for an invalid
// config and InvalidParameter if the workload cannot complete.
RunResult run_scenario(const ScenarioConfig& cfg, const TaskRegistry& registry, const RunOptions& options = {});

// Writes trace.jsonl, metrics.csv and summary.txt.
void write_run(const RunResult& result, const std::filesystem::path& dir);

}  // namespace offload::sim
