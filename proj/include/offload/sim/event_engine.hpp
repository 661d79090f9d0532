#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <unordered_map>
#include <vector>

#include "offload/core/types.hpp"

namespace offload::sim {

using EventId = std::uint64_t;

// Single-threaded discrete-event engine. Events at equal times run in
// scheduling order, so a run is a pure function of its inputs.
class EventEngine {
 public:
  double now() const { return clock_.now(); }

  // Throws InvalidParameter for a time in the past.
  EventId schedule_at(double t_s, std::function<void()> fn);
  EventId schedule_after(double delay_s, std::function<void()> fn);
  void cancel(EventId id);

  // Runs the next event; false when none is left.
  bool step();
  // Runs until `stop` returns true (checked after each event), the queue
  // drains, or the next event lies beyond max_time_s.
  void run(const std::function<bool()>& stop = {},
           double max_time_s = std::numeric_limits<double>::infinity());

  std::size_t pending() const { return handlers_.size(); }
  std::uint64_t executed() const { return executed_; }

 private:
  struct Item {
    double t;
    std::uint64_t seq;
    bool operator>(const Item& o) const { return t != o.t ? t > o.t : seq > o.seq; }
  };

  Clock clock_;
  std::uint64_t next_seq_ = 1;
  std::uint64_t executed_ = 0;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue_;
  std::unordered_map<EventId, std::function<void()>> handlers_;
};

}  // namespace offload::sim
