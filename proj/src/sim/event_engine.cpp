#include "offload/sim/event_engine.hpp"

#include <cmath>

#include "offload/core/error.hpp"

namespace offload::sim {

EventId EventEngine::schedule_at(double t_s, std::function<void()> fn) {
  if (!std::isfinite(t_s) || t_s < now()) {
    throw Error(ErrorCode::InvalidParameter, "event scheduled in the past or at a non-finite time");
  }
  const auto id = next_seq_++;
  queue_.push({t_s, id});
  handlers_.emplace(id, std::move(fn));
  return id;
}

EventId EventEngine::schedule_after(double delay_s, std::function<void()> fn) {
  if (!(delay_s >= 0.0)) throw Error(ErrorCode::InvalidParameter, "negative event delay");
  return schedule_at(now() + delay_s, std::move(fn));
}

void EventEngine::cancel(EventId id) { handlers_.erase(id); }

bool EventEngine::step() {
  while (!queue_.empty()) {
    const auto item = queue_.top();
    queue_.pop();
    auto it = handlers_.find(item.seq);
    if (it == handlers_.end()) continue;  // cancelled
    auto fn = std::move(it->second);
    handlers_.erase(it);
    clock_.advance_to(item.t);
    ++executed_;
    fn();
    return true;
  }
  return false;
}

void EventEngine::run(const std::function<bool()>& stop, double max_time_s) {
  while (!(stop && stop())) {
    while (!queue_.empty() && !handlers_.contains(queue_.top().seq)) queue_.pop();
    if (queue_.empty() || queue_.top().t > max_time_s) return;
    step();
  }
}

}  // namespace offload::sim
