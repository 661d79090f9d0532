#include "offload/core/energy.hpp"

#include "offload/core/error.hpp"

namespace offload {

double compute_edp(const TaskProfile& profile) {
  return profile.exec_time_local_s * profile.energy_local_j;
}

TransferCost transfer_cost(const LinkModel& link, std::uint64_t bytes) {
  if (!link.up) throw Error(ErrorCode::LinkDown, "transfer over a link that is down");
  const double b = static_cast<double>(bytes);
  return {link.latency_s + 8.0 * b / link.throughput_bps,
          link.tx_energy_intercept_j + link.tx_energy_per_byte_j * b};
}

PerfClass classify_device(double benchmark_score, double threshold) {
  if (!(benchmark_score > 0.0) || !(threshold > 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "benchmark score and threshold must be > 0");
  }
  return benchmark_score >= threshold ? PerfClass::H : PerfClass::C;
}

double instantaneous_power(const DeviceModel& device, double activity, int active_transfers) {
  return device.power_idle_w + activity * (device.power_active_w - device.power_idle_w) +
         static_cast<double>(active_transfers) * device.power_tx_w;
}

}  // namespace offload
