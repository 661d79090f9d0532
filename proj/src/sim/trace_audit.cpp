#include "offload/sim/trace_audit.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

#include <json.hpp>

namespace offload::sim {
namespace {

using nlohmann::json;

struct Event {
  double t = 0.0;
  std::string device;
  std::string kind;
  json detail;
};

std::vector<Event> parse(const std::vector<std::string>& lines, std::vector<std::string>& violations) {
  std::vector<Event> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      const auto j = json::parse(lines[i]);
      out.push_back({j.at("time_s").get<double>(), j.at("device").get<std::string>(),
                     j.at("event_kind").get<std::string>(), j.at("detail")});
    } catch (const json::exception& e) {
      violations.push_back("line " + std::to_string(i + 1) + ": unparseable: " + e.what());
    }
  }
  return out;
}

struct Queued {
  std::string task;
  std::uint64_t age = 0;
};

class BufferReplay {
 public:
  void enqueue(const std::string& task, const std::string& buffer) {
    ages_[task] = next_age_++;
    origin_[task] = buffer;
    q(buffer).push_back({task, ages_[task]});
  }
  // Position of task in buffer, or -1.
  long position(const std::string& buffer, const std::string& task) const {
    const auto& d = buffer == "H" ? h_ : l_;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d[i].task == task) return static_cast<long>(i);
    }
    return -1;
  }
  bool remove(const std::string& task) {
    for (auto* d : {&h_, &l_}) {
      auto it = std::find_if(d->begin(), d->end(), [&](const Queued& e) { return e.task == task; });
      if (it != d->end()) {
        d->erase(it);
        return true;
      }
    }
    return false;
  }
  void requeue(const std::string& task) { q(origin_[task]).push_front({task, ages_[task]}); }
  std::size_t size(const std::string& buffer) const { return (buffer == "H" ? h_ : l_).size(); }
  std::uint64_t age(const std::string& task) const { return ages_.at(task); }
  bool known(const std::string& task) const { return ages_.contains(task); }

 private:
  std::deque<Queued>& q(const std::string& b) { return b == "H" ? h_ : l_; }
  std::deque<Queued> h_, l_;
  std::map<std::string, std::uint64_t> ages_;
  std::map<std::string, std::string> origin_;
  std::uint64_t next_age_ = 0;
};

std::string at(const Event& e) { return "t=" + std::to_string(e.t) + " " + e.device + " " + e.kind; }

}  // namespace

AuditReport audit_steal_policy(const std::vector<std::string>& trace_lines) {
  AuditReport r;
  const auto events = parse(trace_lines, r.violations);
  BufferReplay buf;
  for (const auto& e : events) {
    if (e.kind == "enqueue") {
      buf.enqueue(e.detail.at("task").get<std::string>(), e.detail.at("buffer").get<std::string>());
    } else if (e.kind == "offload_aborted") {
      buf.requeue(e.detail.at("task").get<std::string>());
    } else if (e.kind == "local_fallback") {
      if (!buf.remove(e.detail.at("task").get<std::string>())) {
        r.violations.push_back(at(e) + ": fallback task was not queued");
      }
    } else if (e.kind == "steal_serviced") {
      ++r.checked;
      const auto& d = e.detail;
      const auto cls = d.at("server_class").get<std::string>();
      const bool mixed = d.at("fleet_mixed").get<bool>();
      const auto capacity = d.at("capacity").get<std::size_t>();
      const auto h_elig = d.at("h_eligible").get<std::size_t>();
      const auto l_elig = d.at("l_eligible").get<std::size_t>();
      if (d.at("h_size").get<std::size_t>() != buf.size("H") || d.at("l_size").get<std::size_t>() != buf.size("L")) {
        r.violations.push_back(at(e) + ": reported buffer sizes disagree with replay");
      }
      std::vector<std::pair<std::string, std::string>> taken;
      for (const auto& t : d.at("taken")) taken.emplace_back(t.at("task"), t.at("buffer"));
      if (taken.size() != std::min(capacity, h_elig + l_elig)) {
        r.violations.push_back(at(e) + ": granted " + std::to_string(taken.size()) + " of " +
                               std::to_string(h_elig + l_elig) + " eligible with capacity " +
                               std::to_string(capacity));
      }
      std::map<std::string, long> last_pos{{"H", -1}, {"L", -1}};
      std::size_t h_taken = 0;
      std::size_t l_taken = 0;
      bool seen_second = false;
      std::uint64_t last_age = 0;
      bool first = true;
      const std::string preferred = cls == "H" ? "H" : "L";
      const bool class_policy = mixed && cls != "unclassified";
      for (const auto& [task, b] : taken) {
        const long pos = buf.position(b, task);
        if (pos < 0) {
          r.violations.push_back(at(e) + ": " + task + " was not queued in buffer " + b);
          continue;
        }
        if (pos <= last_pos[b]) r.violations.push_back(at(e) + ": " + task + " taken out of FIFO order");
        last_pos[b] = pos;
        (b == "H" ? h_taken : l_taken)++;
        if (class_policy) {
          if (b != preferred) seen_second = true;
          if (b == preferred && seen_second) {
            r.violations.push_back(at(e) + ": " + cls + " server took buffer " + b + " after the other buffer");
          }
        } else {
          const auto a = buf.age(task);
          if (!first && a < last_age) r.violations.push_back(at(e) + ": " + task + " taken out of age order");
          last_age = a;
          first = false;
        }
      }
      if (class_policy) {
        const auto pref_taken = preferred == "H" ? h_taken : l_taken;
        const auto pref_elig = preferred == "H" ? h_elig : l_elig;
        if (pref_taken != std::min(capacity, pref_elig)) {
          r.violations.push_back(at(e) + ": " + cls + " server took " + std::to_string(pref_taken) +
                                 " from its preferred buffer " + preferred + " with " + std::to_string(pref_elig) +
                                 " eligible");
        }
      }
      for (const auto& [task, _] : taken) buf.remove(task);
    }
  }
  return r;
}

AuditReport audit_conservation(const std::vector<std::string>& trace_lines) {
  AuditReport r;
  const auto events = parse(trace_lines, r.violations);
  std::map<std::string, int> arrived, completed, net_removed;
  std::set<std::string> enqueued;
  for (const auto& e : events) {
    if (e.kind == "task_arrival") {
      ++arrived[e.detail.at("task").get<std::string>()];
    } else if (e.kind == "complete") {
      ++completed[e.detail.at("task").get<std::string>()];
    } else if (e.kind == "enqueue") {
      enqueued.insert(e.detail.at("task").get<std::string>());
    } else if (e.kind == "steal_serviced") {
      for (const auto& t : e.detail.at("taken")) ++net_removed[t.at("task").get<std::string>()];
    } else if (e.kind == "local_fallback") {
      ++net_removed[e.detail.at("task").get<std::string>()];
    } else if (e.kind == "offload_aborted") {
      --net_removed[e.detail.at("task").get<std::string>()];
    }
  }
  for (const auto& [task, n] : arrived) {
    ++r.checked;
    if (n != 1) r.violations.push_back(task + ": arrived " + std::to_string(n) + " times");
    const int c = completed.contains(task) ? completed.at(task) : 0;
    if (c != 1) r.violations.push_back(task + ": completed " + std::to_string(c) + " times");
  }
  for (const auto& [task, _] : completed) {
    if (!arrived.contains(task)) r.violations.push_back(task + ": completed without arriving");
  }
  for (const auto& task : enqueued) {
    const int n = net_removed.contains(task) ? net_removed.at(task) : 0;
    if (n != 1) r.violations.push_back(task + ": left the buffers " + std::to_string(n) + " times");
  }
  for (const auto& [task, _] : net_removed) {
    if (!enqueued.contains(task)) r.violations.push_back(task + ": removed from buffers without being enqueued");
  }
  return r;
}

AuditReport audit_causality(const std::vector<std::string>& trace_lines) {
  AuditReport r;
  const auto events = parse(trace_lines, r.violations);
  double last = 0.0;
  std::map<std::string, std::multiset<std::string>> offloaded_to;  // server -> tasks
  std::map<std::string, std::multiset<std::string>> finished_on;   // server -> tasks
  std::string client;
  for (const auto& e : events) {
    ++r.checked;
    if (e.t < last) r.violations.push_back(at(e) + ": timestamp earlier than previous event");
    last = std::max(last, e.t);
    if (e.kind == "offload") {
      offloaded_to[e.detail.at("server").get<std::string>()].insert(e.detail.at("task").get<std::string>());
    } else if (e.kind == "server_start") {
      const auto task = e.detail.at("task").get<std::string>();
      if (!offloaded_to[e.device].contains(task)) {
        r.violations.push_back(at(e) + ": " + task + " started before the client offloaded it here");
      }
    } else if (e.kind == "server_done") {
      finished_on[e.device].insert(e.detail.at("task").get<std::string>());
    } else if (e.kind == "result") {
      const auto task = e.detail.at("task").get<std::string>();
      if (!finished_on[e.detail.at("server").get<std::string>()].contains(task)) {
        r.violations.push_back(at(e) + ": result for " + task + " before the server finished it");
      }
    }
  }
  return r;
}

}  // namespace offload::sim
