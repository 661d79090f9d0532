#pragma once

#include <cstdint>
#include <vector>

#include "offload/core/types.hpp"
#include "offload/profiler/profiler.hpp"

namespace offload {

// Inputs of the per-task cost model.
struct OffloadCosts {
  double e_exec_local_j = 0.0;  // energy to execute locally
  double e_transfer_j = 0.0;    // energy to transfer task and data
  double t_local_s = 0.0;
  double t_remote_s = 0.0;
  double t_transfer_s = 0.0;

  void validate() const;
};

struct OptimizerConfig {
  double latency_budget_s = 0.5;          // l
  std::uint64_t state_overhead_bytes = 512;  // framing/status added to payload when costing transfers
};

enum class Placement : std::uint8_t { local = 0, remote = 1 };

struct OffloadDecision {
  Placement indicator = Placement::local;
  double predicted_saving_j = 0.0;

  bool operator==(const OffloadDecision&) const = default;
};

// Remote iff the energy saving is strictly positive and the remote time
// penalty T_r + T_t - T_l does not exceed the latency budget.
OffloadDecision decide(const OffloadCosts& costs, const OptimizerConfig& cfg);

// Throws LinkDown when the link is down.
OffloadCosts estimate_costs(const TaskRecord& record, const DeviceModel& server, const LinkModel& link,
                            const OptimizerConfig& cfg = {});

struct GlobalAssignment {
  std::vector<Placement> placements;
  double objective_j = 0.0;
};

// Exhaustive search maximizing sum I_i * (E_e - E_t) with each remote task
// meeting its own latency constraint. Test oracle only: at most 20 tasks
// (InstanceTooLarge). Ties prefer fewer remote tasks, then the smaller mask.
GlobalAssignment global_optimize_oracle(const std::vector<OffloadCosts>& tasks, const OptimizerConfig& cfg);

}  // namespace offload
