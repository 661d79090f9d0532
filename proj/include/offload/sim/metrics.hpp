#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "offload/core/types.hpp"
#include "offload/sim/sim_network.hpp"
#include "offload/tasklib/task.hpp"

namespace offload::sim {

inline constexpr double kSampleIntervalS = 0.1;

struct PowerSample {
  double t_s = 0.0;
  std::string device;
  double power_w = 0.0;  // mean over the sample interval
  double cpu_load = 0.0;
};

struct TaskMetric {
  TaskInstanceId id;
  std::string executed_on;
  ResultStatus status = ResultStatus::pending;
  double arrival_s = 0.0;
  double started_s = 0.0;
  double completed_s = 0.0;
  double exec_time_s = 0.0;   // completed - started
  double queue_wait_s = 0.0;  // started - arrival
  double energy_j = 0.0;      // client energy attributed to the task
  bool recovered = false;
};

struct RunMetrics {
  std::string scenario;
  std::string workload_hash;
  std::uint64_t seed = 0;
  bool offloading = false;
  double window_start_s = 0.0;
  double window_end_s = 0.0;

  std::vector<PowerSample> samples;
  std::vector<TaskMetric> tasks;

  double makespan_s = 0.0;
  double client_energy_j = 0.0;
  double avg_client_power_w = 0.0;
  double offload_fraction = 0.0;
  double task_energy_j = 0.0;
  double idle_energy_j = 0.0;
  double control_energy_j = 0.0;
  std::map<std::string, double> device_energy_j;
};

// Energy of a segment list over [from, to].
double integrate_segments(const std::vector<PowerSegment>& segments, double from_s, double to_s);

// Fills the series and aggregates from the closed meters and completed tasks.
RunMetrics collect_metrics(const SimNetwork& net, const std::string& client_id, double start_s, double end_s,
                           std::vector<TaskMetric> tasks);

void write_metrics_csv(const RunMetrics& m, const std::filesystem::path& file);
void write_summary(const RunMetrics& m, const std::filesystem::path& file,
                   const std::vector<std::pair<std::string, std::string>>& extra = {});
// Reads the aggregates back from summary.txt.
RunMetrics load_summary(const std::filesystem::path& file);

struct CompareReport {
  double power_reduction_pct = 0.0;
  double makespan_reduction_pct = 0.0;
  double energy_reduction_pct = 0.0;
};

// Deltas (off - on) / off * 100. Throws IncomparableRuns if the workloads differ.
CompareReport compare_runs(const RunMetrics& off, const RunMetrics& on);

}  // namespace offload::sim
