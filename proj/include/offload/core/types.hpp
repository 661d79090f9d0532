#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace offload {

using Bytes = std::vector<std::uint8_t>;

// Unique name of a remotable task class, rendered "namespace/class_name".
class TaskClassId {
 public:
  TaskClassId() = default;
  TaskClassId(std::string ns, std::string class_name);

  // Parses the rendered "namespace/class_name" form.
  static TaskClassId parse(const std::string& rendered);

  const std::string& ns() const { return ns_; }
  const std::string& class_name() const { return class_name_; }
  std::string str() const { return ns_ + "/" + class_name_; }

  auto operator<=>(const TaskClassId&) const = default;

 private:
  std::string ns_;
  std::string class_name_;
};

struct TaskInstanceId {
  TaskClassId class_id;
  std::uint64_t sequence = 0;

  // "namespace/class_name#0007"
  std::string str() const;

  auto operator<=>(const TaskInstanceId&) const = default;
};

// Measured characteristics of one task class (execution on the client).
struct TaskProfile {
  double exec_time_local_s = 0.0;
  double energy_local_j = 0.0;
  std::uint64_t payload_bytes = 0;
  double avg_power_w = 0.0;

  // Builds a profile from time and energy; power is derived.
  static TaskProfile from_measurement(double exec_time_s, double energy_j,
                                      std::uint64_t payload_bytes);

  // Throws InvalidParameter when the invariants do not hold.
  void validate() const;

  bool operator==(const TaskProfile&) const = default;
};

enum class DeviceKind { client, android_server, generic_server };
enum class PerfClass { H, C, unclassified };

std::string to_string(DeviceKind kind);
std::string to_string(PerfClass cls);
DeviceKind device_kind_from_string(const std::string& s);
PerfClass perf_class_from_string(const std::string& s);

struct DeviceModel {
  std::string device_id;
  DeviceKind kind = DeviceKind::client;
  double cpu_score = 1.0;
  double power_idle_w = 0.0;
  double power_active_w = 0.0;
  double power_tx_w = 0.0;
  std::optional<double> battery_j;  // nullopt = unlimited (mains powered)
  bool charging = false;
  PerfClass perf_class = PerfClass::unclassified;

  bool is_server() const { return kind != DeviceKind::client; }
  void validate() const;
};

struct LinkModel {
  double throughput_bps = 1.0;
  double latency_s = 0.0;
  double tx_energy_intercept_j = 0.0;
  double tx_energy_per_byte_j = 0.0;
  bool up = true;

  void validate() const;
};

// Simulated time. Only the event engine advances it.
class Clock {
 public:
  double now() const { return now_s_; }
  void advance_to(double t_s);

 private:
  double now_s_ = 0.0;
};

}  // namespace offload
