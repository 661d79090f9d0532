#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "offload/core/types.hpp"

namespace offload {

struct HrrnEntry {
  TaskInstanceId instance;
  double arrival_s = 0.0;
  double est_run_s = 1.0;
};

// (waiting + estimated run) / estimated run. Throws InvalidParameter for a
// non-positive estimate or now_s before arrival.
double hrrn_priority(const HrrnEntry& entry, double now_s);

struct ServerQueueState {
  std::vector<HrrnEntry> queue;
  std::optional<TaskInstanceId> running;
  std::uint32_t low_watermark = 1;

  // Throws DuplicateTask if the instance is queued or running.
  void push(HrrnEntry entry);
  std::size_t load() const { return queue.size() + (running ? 1 : 0); }
};

// Removes and returns the entry with the highest response ratio. Ties go to
// the earlier arrival, then the smaller instance id.
std::optional<HrrnEntry> pick_next(ServerQueueState& state, double now_s);

// True iff queued + running <= low_watermark.
bool should_steal(const ServerQueueState& state);

}  // namespace offload
