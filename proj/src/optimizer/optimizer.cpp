#include "offload/optimizer/optimizer.hpp"

#include <bit>
#include <cmath>

#include "offload/core/energy.hpp"
#include "offload/core/error.hpp"

namespace offload {

namespace {

bool meets_latency(const OffloadCosts& c, const OptimizerConfig& cfg) {
  return c.t_remote_s + c.t_transfer_s - c.t_local_s <= cfg.latency_budget_s;
}

}  // namespace

void OffloadCosts::validate() const {
  for (double v : {e_exec_local_j, e_transfer_j, t_local_s, t_remote_s, t_transfer_s}) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::InvalidParameter, "offload costs must be finite and >= 0");
    }
  }
}

OffloadDecision decide(const OffloadCosts& costs, const OptimizerConfig& cfg) {
  const double saving = costs.e_exec_local_j - costs.e_transfer_j;
  if (saving > 0.0 && meets_latency(costs, cfg)) return {Placement::remote, saving};
  return {Placement::local, 0.0};
}

OffloadCosts estimate_costs(const TaskRecord& record, const DeviceModel& server, const LinkModel& link,
                            const OptimizerConfig& cfg) {
  const auto transfer = transfer_cost(link, record.profile.payload_bytes + cfg.state_overhead_bytes);
  OffloadCosts c;
  c.e_exec_local_j = record.profile.energy_local_j;
  c.e_transfer_j = transfer.energy_j;
  c.t_local_s = record.profile.exec_time_local_s;
  c.t_remote_s = record.profile.exec_time_local_s / server.cpu_score;
  c.t_transfer_s = transfer.time_s;
  return c;
}

GlobalAssignment global_optimize_oracle(const std::vector<OffloadCosts>& tasks, const OptimizerConfig& cfg) {
  const auto n = tasks.size();
  if (n > 20) throw Error(ErrorCode::InstanceTooLarge, std::to_string(n) + " tasks (max 20)");

  std::uint32_t best_mask = 0;
  double best_objective = 0.0;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    double objective = 0.0;
    bool feasible = true;
    for (std::size_t i = 0; i < n && feasible; ++i) {
      if (!(mask & (1u << i))) continue;
      feasible = meets_latency(tasks[i], cfg);
      objective += tasks[i].e_exec_local_j - tasks[i].e_transfer_j;
    }
    if (!feasible) continue;
    const bool better = objective > best_objective ||
                        (objective == best_objective && std::popcount(mask) < std::popcount(best_mask));
    if (better) {
      best_mask = mask;
      best_objective = objective;
    }
  }

  GlobalAssignment out;
  out.objective_j = best_objective;
  for (std::size_t i = 0; i < n; ++i) {
    out.placements.push_back((best_mask & (1u << i)) ? Placement::remote : Placement::local);
  }
  return out;
}

}  // namespace offload
