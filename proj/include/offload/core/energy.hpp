#pragma once

#include <cstdint>

#include "offload/core/types.hpp"

namespace offload {

// Energy-delay product T * E of a task profile, in joule-seconds.
double compute_edp(const TaskProfile& profile);

struct TransferCost {
  double time_s = 0.0;
  double energy_j = 0.0;
};

// Time latency + 8*bytes/throughput and energy a + b*bytes. Throws LinkDown.
TransferCost transfer_cost(const LinkModel& link, std::uint64_t bytes);

// H iff score >= threshold (ties go to H).
PerfClass classify_device(double benchmark_score, double threshold);

// Instantaneous power of a device under the piecewise-constant model.
// activity in [0, 1]; active_transfers counts concurrent radio transfers.
double instantaneous_power(const DeviceModel& device, double activity, int active_transfers);

}  // namespace offload
