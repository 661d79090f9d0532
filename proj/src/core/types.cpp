#include "offload/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "offload/core/error.hpp"

namespace offload {

TaskClassId::TaskClassId(std::string ns, std::string class_name)
    : ns_(std::move(ns)), class_name_(std::move(class_name)) {
  if (ns_.empty() || class_name_.empty()) {
    throw Error(ErrorCode::InvalidParameter, "task class id parts must be non-empty");
  }
  if (ns_.find('/') != std::string::npos) {
    throw Error(ErrorCode::InvalidParameter, "task namespace must not contain '/': " + ns_);
  }
}

TaskClassId TaskClassId::parse(const std::string& rendered) {
  const auto slash = rendered.find('/');
  if (slash == std::string::npos) {
    throw Error(ErrorCode::InvalidParameter, "task class id must be namespace/class_name: " + rendered);
  }
  return TaskClassId(rendered.substr(0, slash), rendered.substr(slash + 1));
}

std::string TaskInstanceId::str() const {
  char seq[32];
  std::snprintf(seq, sizeof(seq), "%04llu", static_cast<unsigned long long>(sequence));
  return class_id.str() + "#" + seq;
}

TaskProfile TaskProfile::from_measurement(double exec_time_s, double energy_j,
                                          std::uint64_t payload_bytes) {
  TaskProfile p;
  p.exec_time_local_s = exec_time_s;
  p.energy_local_j = energy_j;
  p.payload_bytes = payload_bytes;
  p.avg_power_w = exec_time_s > 0.0 ? energy_j / exec_time_s : 0.0;
  p.validate();
  return p;
}

void TaskProfile::validate() const {
  if (!std::isfinite(exec_time_local_s) || !std::isfinite(energy_local_j) ||
      !std::isfinite(avg_power_w)) {
    throw Error(ErrorCode::InvalidParameter, "task profile values must be finite");
  }
  if (exec_time_local_s <= 0.0) {
    throw Error(ErrorCode::InvalidParameter, "task profile execution time must be > 0");
  }
  if (energy_local_j < 0.0 || avg_power_w < 0.0) {
    throw Error(ErrorCode::InvalidParameter, "task profile energy and power must be >= 0");
  }
  const double expected = avg_power_w * exec_time_local_s;
  const double scale = std::max(std::abs(expected), std::abs(energy_local_j));
  if (std::abs(expected - energy_local_j) > 1e-9 * scale) {
    throw Error(ErrorCode::InvalidParameter, "task profile energy != power * time");
  }
}

std::string to_string(DeviceKind kind) {
  switch (kind) {
    case DeviceKind::client: return "client";
    case DeviceKind::android_server: return "android_server";
    case DeviceKind::generic_server: return "generic_server";
  }
  return "client";
}

std::string to_string(PerfClass cls) {
  switch (cls) {
    case PerfClass::H: return "H";
    case PerfClass::C: return "C";
    case PerfClass::unclassified: return "unclassified";
  }
  return "unclassified";
}

DeviceKind device_kind_from_string(const std::string& s) {
  if (s == "client") return DeviceKind::client;
  if (s == "android_server") return DeviceKind::android_server;
  if (s == "generic_server") return DeviceKind::generic_server;
  throw Error(ErrorCode::InvalidParameter, "unknown device kind: " + s);
}

PerfClass perf_class_from_string(const std::string& s) {
  if (s == "H") return PerfClass::H;
  if (s == "C") return PerfClass::C;
  if (s == "unclassified") return PerfClass::unclassified;
  throw Error(ErrorCode::InvalidParameter, "unknown perf class: " + s);
}

void DeviceModel::validate() const {
  if (device_id.empty()) throw Error(ErrorCode::InvalidParameter, "device id must be non-empty");
  if (!(cpu_score > 0.0) || !std::isfinite(cpu_score)) {
    throw Error(ErrorCode::InvalidParameter, device_id + ": cpu_score must be > 0");
  }
  if (!(power_idle_w >= 0.0) || !(power_active_w >= power_idle_w) || !(power_tx_w >= 0.0)) {
    throw Error(ErrorCode::InvalidParameter,
                device_id + ": require power_active_w >= power_idle_w >= 0 and power_tx_w >= 0");
  }
  if (battery_j && !(*battery_j >= 0.0)) {
    throw Error(ErrorCode::InvalidParameter, device_id + ": battery_j must be >= 0");
  }
}

void LinkModel::validate() const {
  if (!(throughput_bps > 0.0) || !std::isfinite(throughput_bps)) {
    throw Error(ErrorCode::InvalidParameter, "link throughput must be > 0");
  }
  if (!(latency_s >= 0.0) || !(tx_energy_intercept_j >= 0.0) || !(tx_energy_per_byte_j >= 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "link latency and energy coefficients must be >= 0");
  }
}

void Clock::advance_to(double t_s) {
  if (t_s < now_s_) {
    throw Error(ErrorCode::InvalidParameter, "clock cannot move backwards");
  }
  now_s_ = t_s;
}

}  // namespace offload
