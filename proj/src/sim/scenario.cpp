#include "offload/sim/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "offload/core/error.hpp"

namespace offload::sim {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ConfigError, path + ": " + what);
}

template <typename T>
T field(const json& obj, const std::string& path, const char* name, T fallback) {
  auto it = obj.find(name);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    config_error(path + "." + name, e.what());
  }
}

template <typename T>
T required(const json& obj, const std::string& path, const char* name) {
  if (!obj.contains(name)) config_error(path + "." + name, "missing");
  return field<T>(obj, path, name, T{});
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) config_error(path, "expected an object");
}

const json& array_field(const json& obj, const std::string& path, const char* name) {
  static const json empty = json::array();
  auto it = obj.find(name);
  if (it == obj.end() || it->is_null()) return empty;
  if (!it->is_array()) config_error(path + "." + name, "expected an array");
  return *it;
}

std::string inter_arrival_name(InterArrival::Kind k) {
  return k == InterArrival::Kind::fixed ? "fixed" : "exponential";
}

std::string fault_name(FaultEvent::Kind k) {
  switch (k) {
    case FaultEvent::Kind::link_down: return "link_down";
    case FaultEvent::Kind::link_up: return "link_up";
    case FaultEvent::Kind::server_crash: return "server_crash";
  }
  return "?";
}

template <typename Fn>
void wrap(const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    config_error(path, e.what());
  }
}

}  // namespace

const DeviceModel& ScenarioConfig::client() const {
  for (const auto& d : devices) {
    if (d.kind == DeviceKind::client) return d;
  }
  config_error("devices", "no client device");
}

std::vector<const DeviceModel*> ScenarioConfig::servers() const {
  std::vector<const DeviceModel*> out;
  for (const auto& d : devices) {
    if (d.is_server()) out.push_back(&d);
  }
  return out;
}

std::size_t ScenarioConfig::task_count() const {
  std::size_t n = 0;
  for (const auto& w : workload) n += w.count;
  return n;
}

void ScenarioConfig::validate() const {
  std::set<std::string> ids;
  std::size_t clients = 0;
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const auto path = "devices[" + std::to_string(i) + "]";
    wrap(path, [&] { devices[i].validate(); });
    if (!ids.insert(devices[i].device_id).second) config_error(path + ".device_id", "duplicate device id");
    if (devices[i].kind == DeviceKind::client) ++clients;
  }
  if (clients != 1) config_error("devices", "exactly one client device is required");
  std::set<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i < links.size(); ++i) {
    const auto path = "links[" + std::to_string(i) + "]";
    const auto& l = links[i];
    if (!ids.contains(l.client)) config_error(path + ".client", "unknown device " + l.client);
    if (!ids.contains(l.server)) config_error(path + ".server", "unknown device " + l.server);
    if (l.client != client().device_id) config_error(path + ".client", "must be the client device");
    for (const auto& d : devices) {
      if (d.device_id == l.server && !d.is_server()) config_error(path + ".server", "not a server device");
    }
    if (!pairs.emplace(l.client, l.server).second) config_error(path, "duplicate link");
    if (!(l.throughput_bps > 0.0) || !std::isfinite(l.throughput_bps)) {
      config_error(path + ".throughput_bps", "must be > 0");
    }
    if (!(l.latency_s >= 0.0) || !std::isfinite(l.latency_s)) config_error(path + ".latency_s", "must be >= 0");
  }
  for (std::size_t i = 0; i < workload.size(); ++i) {
    const auto path = "workload[" + std::to_string(i) + "]";
    const auto& w = workload[i];
    if (w.class_id.ns().empty() || w.class_id.class_name().empty()) config_error(path + ".class_id", "empty");
    if (!(w.payload_spread >= 0.0 && w.payload_spread < 1.0)) {
      config_error(path + ".payload_spread", "must be in [0, 1)");
    }
    if (!(w.work_units >= 0.0) || !std::isfinite(w.work_units)) config_error(path + ".work_units", "must be >= 0");
    if (!(w.inter_arrival.mean_s >= 0.0) || !std::isfinite(w.inter_arrival.mean_s)) {
      config_error(path + ".inter_arrival.mean_s", "must be >= 0");
    }
  }
  if (!(optimizer.latency_budget_s >= 0.0)) config_error("optimizer.latency_budget_s", "must be >= 0");
  if (scheduler.edp_threshold_js && !(*scheduler.edp_threshold_js >= 0.0)) {
    config_error("scheduler.edp_threshold_js", "must be >= 0");
  }
  if (scheduler.steal_capacity == 0) config_error("scheduler.steal_capacity", "must be >= 1");
  if (!(scheduler.steal_backoff_s > 0.0)) config_error("scheduler.steal_backoff_s", "must be > 0");
  if (!(scheduler.steal_backoff_max_s >= scheduler.steal_backoff_s)) {
    config_error("scheduler.steal_backoff_max_s", "must be >= steal_backoff_s");
  }
  if (!(scheduler.class_threshold > 0.0)) config_error("scheduler.class_threshold", "must be > 0");
  for (std::size_t i = 0; i < faults.size(); ++i) {
    const auto path = "faults[" + std::to_string(i) + "]";
    if (!(faults[i].time_s >= 0.0) || !std::isfinite(faults[i].time_s)) config_error(path + ".time_s", "must be >= 0");
    bool linked = false;
    for (const auto& l : links) linked = linked || l.server == faults[i].server;
    if (!linked) config_error(path + ".server", "no link to " + faults[i].server);
  }
  if (!(unit_time_s > 0.0)) config_error("unit_time_s", "must be > 0");
  if (!(warmup_s >= 0.0)) config_error("warmup_s", "must be >= 0");
  if (!(remote_fail_probability >= 0.0 && remote_fail_probability <= 1.0)) {
    config_error("remote_fail_probability", "must be in [0, 1]");
  }
  if (!(max_sim_time_s > warmup_s)) config_error("max_sim_time_s", "must exceed warmup_s");
}

std::string ScenarioConfig::workload_hash() const {
  ordered_json w = ordered_json::array();
  for (const auto& e : workload) {
    w.push_back({{"class_id", e.class_id.str()},
                 {"count", e.count},
                 {"payload_bytes", e.payload_bytes},
                 {"payload_spread", e.payload_spread},
                 {"work_units", e.work_units},
                 {"inter_arrival", inter_arrival_name(e.inter_arrival.kind)},
                 {"mean_s", e.inter_arrival.mean_s}});
  }
  w.push_back({{"unit_time_s", unit_time_s}});
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : w.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ordered_json to_json(const ScenarioConfig& cfg) {
  ordered_json devices = ordered_json::array();
  for (const auto& d : cfg.devices) {
    ordered_json j{{"device_id", d.device_id},
                   {"kind", to_string(d.kind)},
                   {"cpu_score", d.cpu_score},
                   {"power_idle_w", d.power_idle_w},
                   {"power_active_w", d.power_active_w},
                   {"power_tx_w", d.power_tx_w}};
    j["battery_j"] = d.battery_j ? ordered_json(*d.battery_j) : ordered_json(nullptr);
    j["charging"] = d.charging;
    devices.push_back(std::move(j));
  }
  ordered_json links = ordered_json::array();
  for (const auto& l : cfg.links) {
    links.push_back({{"client", l.client},
                     {"server", l.server},
                     {"throughput_bps", l.throughput_bps},
                     {"latency_s", l.latency_s},
                     {"up", l.up}});
  }
  ordered_json workload = ordered_json::array();
  for (const auto& w : cfg.workload) {
    workload.push_back({{"class_id", w.class_id.str()},
                        {"count", w.count},
                        {"payload_bytes", w.payload_bytes},
                        {"payload_spread", w.payload_spread},
                        {"work_units", w.work_units},
                        {"inter_arrival",
                         {{"kind", inter_arrival_name(w.inter_arrival.kind)}, {"mean_s", w.inter_arrival.mean_s}}}});
  }
  ordered_json faults = ordered_json::array();
  for (const auto& f : cfg.faults) {
    faults.push_back({{"time_s", f.time_s}, {"event", fault_name(f.kind)}, {"server", f.server}});
  }
  ordered_json sched{{"edp_threshold_js", cfg.scheduler.edp_threshold_js ? ordered_json(*cfg.scheduler.edp_threshold_js)
                                                                         : ordered_json(nullptr)},
                     {"steal_capacity", cfg.scheduler.steal_capacity},
                     {"low_watermark", cfg.scheduler.low_watermark},
                     {"steal_backoff_s", cfg.scheduler.steal_backoff_s},
                     {"steal_backoff_max_s", cfg.scheduler.steal_backoff_max_s},
                     {"class_threshold", cfg.scheduler.class_threshold}};
  return ordered_json{{"name", cfg.name},
                      {"devices", devices},
                      {"links", links},
                      {"workload", workload},
                      {"optimizer",
                       {{"latency_budget_s", cfg.optimizer.latency_budget_s},
                        {"state_overhead_bytes", cfg.optimizer.state_overhead_bytes}}},
                      {"scheduler", sched},
                      {"seed", cfg.seed},
                      {"faults", faults},
                      {"offloading", cfg.offloading},
                      {"unit_time_s", cfg.unit_time_s},
                      {"warmup_s", cfg.warmup_s},
                      {"remote_fail_probability", cfg.remote_fail_probability},
                      {"max_sim_time_s", cfg.max_sim_time_s}};
}

ScenarioConfig scenario_from_json(const json& j) {
  require_object(j, "$");
  ScenarioConfig cfg;
  cfg.name = field<std::string>(j, "$", "name", cfg.name);

  const auto& devices = array_field(j, "$", "devices");
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const auto path = "devices[" + std::to_string(i) + "]";
    const auto& d = devices[i];
    require_object(d, path);
    DeviceModel m;
    m.device_id = required<std::string>(d, path, "device_id");
    const auto kind = required<std::string>(d, path, "kind");
    wrap(path + ".kind", [&] { m.kind = device_kind_from_string(kind); });
    m.cpu_score = field<double>(d, path, "cpu_score", m.cpu_score);
    m.power_idle_w = field<double>(d, path, "power_idle_w", m.power_idle_w);
    m.power_active_w = field<double>(d, path, "power_active_w", m.power_active_w);
    m.power_tx_w = field<double>(d, path, "power_tx_w", m.power_tx_w);
    if (d.contains("battery_j") && !d["battery_j"].is_null()) m.battery_j = field<double>(d, path, "battery_j", 0.0);
    m.charging = field<bool>(d, path, "charging", false);
    cfg.devices.push_back(std::move(m));
  }

  const auto& links = array_field(j, "$", "links");
  for (std::size_t i = 0; i < links.size(); ++i) {
    const auto path = "links[" + std::to_string(i) + "]";
    const auto& l = links[i];
    require_object(l, path);
    LinkSpec s;
    s.client = required<std::string>(l, path, "client");
    s.server = required<std::string>(l, path, "server");
    s.throughput_bps = field<double>(l, path, "throughput_bps", s.throughput_bps);
    s.latency_s = field<double>(l, path, "latency_s", s.latency_s);
    s.up = field<bool>(l, path, "up", s.up);
    cfg.links.push_back(std::move(s));
  }

  const auto& workload = array_field(j, "$", "workload");
  for (std::size_t i = 0; i < workload.size(); ++i) {
    const auto path = "workload[" + std::to_string(i) + "]";
    const auto& w = workload[i];
    require_object(w, path);
    WorkloadEntry e;
    const auto cls = required<std::string>(w, path, "class_id");
    wrap(path + ".class_id", [&] { e.class_id = TaskClassId::parse(cls); });
    e.count = required<std::uint32_t>(w, path, "count");
    e.payload_bytes = field<std::uint64_t>(w, path, "payload_bytes", 0);
    e.payload_spread = field<double>(w, path, "payload_spread", 0.0);
    e.work_units = field<double>(w, path, "work_units", 0.0);
    if (w.contains("inter_arrival")) {
      const auto ipath = path + ".inter_arrival";
      const auto& ia = w["inter_arrival"];
      require_object(ia, ipath);
      const auto kind = field<std::string>(ia, ipath, "kind", "fixed");
      if (kind == "fixed") {
        e.inter_arrival.kind = InterArrival::Kind::fixed;
      } else if (kind == "exponential") {
        e.inter_arrival.kind = InterArrival::Kind::exponential;
      } else {
        config_error(ipath + ".kind", "expected fixed or exponential");
      }
      e.inter_arrival.mean_s = field<double>(ia, ipath, "mean_s", 0.0);
    }
    cfg.workload.push_back(std::move(e));
  }

  if (j.contains("optimizer")) {
    const auto& o = j["optimizer"];
    require_object(o, "optimizer");
    cfg.optimizer.latency_budget_s = field<double>(o, "optimizer", "latency_budget_s", cfg.optimizer.latency_budget_s);
    cfg.optimizer.state_overhead_bytes =
        field<std::uint64_t>(o, "optimizer", "state_overhead_bytes", cfg.optimizer.state_overhead_bytes);
  }
  if (j.contains("scheduler")) {
    const auto& s = j["scheduler"];
    require_object(s, "scheduler");
    if (s.contains("edp_threshold_js") && !s["edp_threshold_js"].is_null()) {
      cfg.scheduler.edp_threshold_js = field<double>(s, "scheduler", "edp_threshold_js", 0.0);
    }
    cfg.scheduler.steal_capacity = field<std::uint32_t>(s, "scheduler", "steal_capacity", cfg.scheduler.steal_capacity);
    cfg.scheduler.low_watermark = field<std::uint32_t>(s, "scheduler", "low_watermark", cfg.scheduler.low_watermark);
    cfg.scheduler.steal_backoff_s = field<double>(s, "scheduler", "steal_backoff_s", cfg.scheduler.steal_backoff_s);
    cfg.scheduler.steal_backoff_max_s =
        field<double>(s, "scheduler", "steal_backoff_max_s", cfg.scheduler.steal_backoff_max_s);
    cfg.scheduler.class_threshold = field<double>(s, "scheduler", "class_threshold", cfg.scheduler.class_threshold);
  }
  cfg.seed = field<std::uint64_t>(j, "$", "seed", cfg.seed);

  const auto& faults = array_field(j, "$", "faults");
  for (std::size_t i = 0; i < faults.size(); ++i) {
    const auto path = "faults[" + std::to_string(i) + "]";
    const auto& f = faults[i];
    require_object(f, path);
    FaultEvent e;
    e.time_s = required<double>(f, path, "time_s");
    const auto ev = required<std::string>(f, path, "event");
    if (ev == "link_down") {
      e.kind = FaultEvent::Kind::link_down;
    } else if (ev == "link_up") {
      e.kind = FaultEvent::Kind::link_up;
    } else if (ev == "server_crash") {
      e.kind = FaultEvent::Kind::server_crash;
    } else {
      config_error(path + ".event", "expected link_down, link_up or server_crash");
    }
    e.server = required<std::string>(f, path, "server");
    cfg.faults.push_back(std::move(e));
  }

  cfg.offloading = field<bool>(j, "$", "offloading", cfg.offloading);
  cfg.unit_time_s = field<double>(j, "$", "unit_time_s", cfg.unit_time_s);
  cfg.warmup_s = field<double>(j, "$", "warmup_s", cfg.warmup_s);
  cfg.remote_fail_probability = field<double>(j, "$", "remote_fail_probability", cfg.remote_fail_probability);
  cfg.max_sim_time_s = field<double>(j, "$", "max_sim_time_s", cfg.max_sim_time_s);
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    config_error("$", std::string("invalid JSON: ") + e.what());
  }
  return scenario_from_json(j);
}

}  // namespace offload::sim
