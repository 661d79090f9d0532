#include "offload/client_sched/dual_buffer.hpp"

#include <algorithm>
#include <cmath>

#include "offload/core/energy.hpp"
#include "offload/core/error.hpp"

namespace offload {

std::string to_string(BufferId id) { return id == BufferId::H ? "H" : "L"; }

DualBuffer::DualBuffer(double edp_threshold_js) : threshold_(0.0) { set_threshold(edp_threshold_js); }

void DualBuffer::set_threshold(double edp_threshold_js) {
  if (!(edp_threshold_js > 0.0) || !std::isfinite(edp_threshold_js)) {
    throw Error(ErrorCode::InvalidParameter, "EDP threshold must be > 0");
  }
  threshold_ = edp_threshold_js;
}

BufferId DualBuffer::enqueue(const TaskInstanceId& id, double edp_js) {
  if (contains(id) || in_transit_.contains(id)) throw Error(ErrorCode::DuplicateTask, id.str());
  const auto target = edp_js >= threshold_ ? BufferId::H : BufferId::L;
  queue(target).push_back({id, next_seq_++});
  return target;
}

BufferId DualBuffer::enqueue_remotable(const TaskInstanceId& id, const TaskRecord& record) {
  return enqueue(id, compute_edp(record.profile));
}

std::vector<StolenTask> DualBuffer::service_steal(const StealRequest& request, const FleetInfo& fleet,
                                                  const TaskPredicate& eligible) {
  std::vector<StolenTask> out;
  const auto ok = [&](const Entry& e) { return !eligible || eligible(e.id); };
  const auto take = [&](BufferId b, std::deque<Entry>::iterator it) {
    out.push_back({it->id, b});
    in_transit_.emplace(it->id, std::make_pair(b, *it));
    return queue(b).erase(it);
  };
  const auto drain = [&](BufferId b) {
    auto& q = queue(b);
    for (auto it = q.begin(); it != q.end() && out.size() < request.capacity;) {
      it = ok(*it) ? take(b, it) : std::next(it);
    }
  };

  const bool class_policy = fleet.mixed() && request.server_class != PerfClass::unclassified;
  if (class_policy) {
    const auto first = request.server_class == PerfClass::H ? BufferId::H : BufferId::L;
    const auto second = first == BufferId::H ? BufferId::L : BufferId::H;
    drain(first);
    drain(second);
    return out;
  }

  // Single device class: oldest first across both buffers.
  while (out.size() < request.capacity) {
    auto hi = std::find_if(h_.begin(), h_.end(), ok);
    auto li = std::find_if(l_.begin(), l_.end(), ok);
    if (hi == h_.end() && li == l_.end()) break;
    if (li == l_.end() || (hi != h_.end() && hi->seq < li->seq)) {
      take(BufferId::H, hi);
    } else {
      take(BufferId::L, li);
    }
  }
  return out;
}

void DualBuffer::confirm_transferred(const TaskInstanceId& id) { in_transit_.erase(id); }

void DualBuffer::requeue_failed(const TaskInstanceId& id) {
  auto it = in_transit_.find(id);
  if (it == in_transit_.end()) throw Error(ErrorCode::NotFound, id.str() + " is not awaiting transfer");
  auto [buffer, entry] = it->second;
  in_transit_.erase(it);
  queue(buffer).push_front(entry);
}

std::optional<TaskInstanceId> DualBuffer::take_oldest(const TaskPredicate& pred) {
  auto hi = std::find_if(h_.begin(), h_.end(), [&](const Entry& e) { return pred(e.id); });
  auto li = std::find_if(l_.begin(), l_.end(), [&](const Entry& e) { return pred(e.id); });
  if (hi == h_.end() && li == l_.end()) return std::nullopt;
  TaskInstanceId id;
  if (li == l_.end() || (hi != h_.end() && hi->seq < li->seq)) {
    id = hi->id;
    h_.erase(hi);
  } else {
    id = li->id;
    l_.erase(li);
  }
  return id;
}

std::size_t DualBuffer::count_eligible(BufferId buffer, const TaskPredicate& eligible) const {
  const auto& q = queue(buffer);
  if (!eligible) return q.size();
  return static_cast<std::size_t>(
      std::count_if(q.begin(), q.end(), [&](const Entry& e) { return eligible(e.id); }));
}

std::size_t DualBuffer::size(BufferId buffer) const { return queue(buffer).size(); }

bool DualBuffer::contains(const TaskInstanceId& id) const {
  const auto match = [&](const Entry& e) { return e.id == id; };
  return std::any_of(h_.begin(), h_.end(), match) || std::any_of(l_.begin(), l_.end(), match);
}

std::vector<TaskInstanceId> DualBuffer::snapshot(BufferId buffer) const {
  std::vector<TaskInstanceId> out;
  for (const auto& e : queue(buffer)) out.push_back(e.id);
  return out;
}

}  // namespace offload
