#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "offload/core/types.hpp"
#include "offload/profiler/profiler.hpp"

namespace offload {

enum class BufferId : std::uint8_t { H, L };

std::string to_string(BufferId id);

struct StealRequest {
  std::string server_id;
  PerfClass server_class = PerfClass::unclassified;
  std::uint32_t capacity = 1;
};

// Which server classes are currently registered with the client.
struct FleetInfo {
  bool has_h = false;
  bool has_c = false;

  bool mixed() const { return has_h && has_c; }
};

struct StolenTask {
  TaskInstanceId id;
  BufferId from = BufferId::H;

  bool operator==(const StolenTask&) const = default;
};

using TaskPredicate = std::function<bool(const TaskInstanceId&)>;

// Client-side buffers H (heavy EDP) and L (light EDP) of remotable tasks
// waiting to be stolen. FIFO within each buffer; every task also carries a
// global enqueue sequence used for age ordering across buffers.
class DualBuffer {
 public:
  explicit DualBuffer(double edp_threshold_js);

  double threshold() const { return threshold_; }
  // Applies to future enqueues only. Throws InvalidParameter unless > 0.
  void set_threshold(double edp_threshold_js);

  // H iff edp >= threshold. Throws DuplicateTask.
  BufferId enqueue(const TaskInstanceId& id, double edp_js);
  BufferId enqueue_remotable(const TaskInstanceId& id, const TaskRecord& record);

  // Removes and returns up to request.capacity tasks. In a mixed fleet H servers
  // drain H before L and C servers drain L before H; with a single class present
  // both buffers are served oldest first. Tasks failing `eligible` are skipped
  // and stay queued. Returned tasks are held as in transit until confirmed.
  std::vector<StolenTask> service_steal(const StealRequest& request, const FleetInfo& fleet,
                                        const TaskPredicate& eligible = {});

  // The transfer of a stolen task started; it can no longer be requeued.
  void confirm_transferred(const TaskInstanceId& id);
  // Restores a stolen task whose transfer never started to the head of its
  // original buffer. Throws NotFound otherwise.
  void requeue_failed(const TaskInstanceId& id);

  // Removes the oldest queued task accepted by `pred` (for local fallback).
  std::optional<TaskInstanceId> take_oldest(const TaskPredicate& pred);

  std::size_t count_eligible(BufferId buffer, const TaskPredicate& eligible) const;
  std::size_t size(BufferId buffer) const;
  bool empty() const { return h_.empty() && l_.empty(); }
  bool contains(const TaskInstanceId& id) const;
  std::vector<TaskInstanceId> snapshot(BufferId buffer) const;

 private:
  struct Entry {
    TaskInstanceId id;
    std::uint64_t seq = 0;
  };

  std::deque<Entry>& queue(BufferId b) { return b == BufferId::H ? h_ : l_; }
  const std::deque<Entry>& queue(BufferId b) const { return b == BufferId::H ? h_ : l_; }

  double threshold_;
  std::uint64_t next_seq_ = 0;
  std::deque<Entry> h_;
  std::deque<Entry> l_;
  std::map<TaskInstanceId, std::pair<BufferId, Entry>> in_transit_;
};

}  // namespace offload
