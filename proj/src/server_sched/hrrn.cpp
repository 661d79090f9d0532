#include "offload/server_sched/hrrn.hpp"

#include <algorithm>
#include <cmath>

#include "offload/core/error.hpp"

namespace offload {

double hrrn_priority(const HrrnEntry& entry, double now_s) {
  if (!(entry.est_run_s > 0.0) || !std::isfinite(entry.est_run_s)) {
    throw Error(ErrorCode::InvalidParameter, "estimated run time must be finite and > 0");
  }
  if (now_s < entry.arrival_s) {
    throw Error(ErrorCode::InvalidParameter, "priority evaluated before arrival");
  }
  return ((now_s - entry.arrival_s) + entry.est_run_s) / entry.est_run_s;
}

void ServerQueueState::push(HrrnEntry entry) {
  const bool queued = std::any_of(queue.begin(), queue.end(),
                                  [&](const HrrnEntry& e) { return e.instance == entry.instance; });
  if (queued || running == entry.instance) throw Error(ErrorCode::DuplicateTask, entry.instance.str());
  if (!(entry.est_run_s > 0.0) || !std::isfinite(entry.est_run_s)) {
    throw Error(ErrorCode::InvalidParameter, "estimated run time must be finite and > 0");
  }
  queue.push_back(std::move(entry));
}

std::optional<HrrnEntry> pick_next(ServerQueueState& state, double now_s) {
  if (state.queue.empty()) return std::nullopt;
  auto best = state.queue.begin();
  double best_priority = hrrn_priority(*best, now_s);
  for (auto it = std::next(state.queue.begin()); it != state.queue.end(); ++it) {
    const double p = hrrn_priority(*it, now_s);
    const bool better =
        p > best_priority ||
        (p == best_priority && (it->arrival_s < best->arrival_s ||
                                (it->arrival_s == best->arrival_s && it->instance < best->instance)));
    if (better) {
      best = it;
      best_priority = p;
    }
  }
  HrrnEntry out = *best;
  state.queue.erase(best);
  return out;
}

bool should_steal(const ServerQueueState& state) { return state.load() <= state.low_watermark; }

}  // namespace offload
