#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "offload/core/types.hpp"

namespace offload {

struct TaskRecord {
  TaskClassId class_id;
  TaskProfile profile;
  double first_seen_s = 0.0;
  std::uint64_t sample_count = 1;

  bool operator==(const TaskRecord&) const = default;
};

// Per-class task records, optionally persisted to an append-wins text file:
// one line per write, "class_id\tT\tE\tS\tn". The last line for a class wins.
class ProfileStore {
 public:
  ProfileStore() = default;
  // Loads the file if it exists; later writes are appended to it.
  explicit ProfileStore(std::filesystem::path file);

  // First run of a class. Throws DuplicateRecord if already profiled.
  const TaskRecord& profile_first_execution(const TaskClassId& id, const TaskProfile& observed,
                                            double now_s);
  // Running mean over all samples. Throws NotProfiled, or InvalidParameter
  // (record untouched) for a non-finite or invalid observation.
  const TaskRecord& update_profile(const TaskClassId& id, const TaskProfile& observed);

  // Throws NotProfiled: the class must be run locally first.
  const TaskRecord& lookup(const TaskClassId& id) const;
  const TaskRecord* find(const TaskClassId& id) const;
  bool contains(const TaskClassId& id) const { return records_.contains(id); }
  std::vector<TaskRecord> records() const;

  // Incremented on every change.
  std::uint64_t version() const { return version_; }
  // Median EDP over all records (mean of the middle pair for even counts); nullopt if empty.
  std::optional<double> median_edp() const;

  static std::string format_line(const TaskRecord& record);
  static TaskRecord parse_line(const std::string& line);

 private:
  void persist(const TaskRecord& record);

  std::map<TaskClassId, TaskRecord> records_;
  std::optional<std::filesystem::path> file_;
  std::uint64_t version_ = 0;
};

// EWMA over the observed throughput 8*bytes/duration; latency is untouched.
// alpha in (0, 1]; 1 means no smoothing.
LinkModel update_throughput(const LinkModel& link, std::uint64_t observed_bytes,
                            double observed_duration_s, double alpha = 0.5);

struct TransferEnergySample {
  std::uint64_t bytes = 0;
  double joules = 0.0;
};

struct TransferEnergyFit {
  double intercept_j = 0.0;     // a
  double per_byte_j = 0.0;      // b
};

// Least-squares E = a + b*bytes with a, b >= 0. Needs two distinct sizes.
TransferEnergyFit fit_transfer_energy(const std::vector<TransferEnergySample>& samples);

struct DeviceStatus {
  std::string device_id;
  double battery_level = 1.0;
  bool charging = false;
  double cpu_load = 0.0;
  bool link_up = true;
  double measured_throughput_bps = 0.0;
  double timestamp_s = 0.0;

  void validate() const;
  bool operator==(const DeviceStatus&) const = default;
};

// Latest status per device. A write older than the stored one is rejected so
// readers never observe a stale measurement.
class StatusBoard {
 public:
  bool publish(const DeviceStatus& status);
  const DeviceStatus* latest(const std::string& device_id) const;

 private:
  std::map<std::string, DeviceStatus> latest_;
};

}  // namespace offload
