#pragma once

#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "offload/protocol/client_endpoint.hpp"
#include "offload/protocol/server_endpoint.hpp"
#include "offload/protocol/tcp_runtime.hpp"
#include "offload/sim/presets.hpp"
#include "offload/sim/runner.hpp"
#include "offload/sim/sim_network.hpp"
#include "offload/tasklib/demo_tasks.hpp"

namespace offload::testing {

inline TaskInstance fd_instance(const TaskRegistry& registry, std::uint64_t seq, std::uint64_t payload = 150000,
                                double work_s = 1.2) {
  return registry.instantiate(demo::kFaceDetect, InstanceParams{seq, payload, work_s, seq * 7919});
}

// Profile a class as a run of t_s on the preset client.
inline void seed_profile(ProfileStore& profiles, const TaskClassId& cls, double t_s, std::uint64_t bytes) {
  const auto client = sim::preset_client();
  profiles.profile_first_execution(cls, TaskProfile::from_measurement(t_s, client.power_active_w * t_s, bytes),
                                   0.0);
}

inline ServerConfig server_config(const DeviceModel& device, std::uint32_t capacity = 1,
                                  std::uint32_t low_watermark = 1) {
  ServerConfig s;
  s.device = device;
  s.steal_capacity = capacity;
  s.low_watermark = low_watermark;
  return s;
}

inline ClientConfig client_config() {
  ClientConfig c;
  c.device = sim::preset_client();
  c.default_link = sim::calibrate_link(c.device, sim::LinkSpec{});
  return c;
}

// One client and a set of servers on a simulated network. Tasks handed to
// submit_when_registered are submitted once that many servers said HELLO.
struct SimRig {
  sim::EventEngine engine;
  sim::TraceWriter tracer;
  sim::SimNetwork net{engine, tracer};
  TaskRegistry registry;
  ProfileStore profiles;
  std::unique_ptr<ClientEndpoint> client;
  std::map<std::string, std::unique_ptr<ServerEndpoint>> servers;
  std::map<TaskInstanceId, int> calls;
  std::vector<TaskOutcome> outcomes;
  std::size_t total = 0;

  explicit SimRig(const std::vector<ServerConfig>& server_cfgs, ClientConfig ccfg = client_config()) {
    demo::register_demo_tasks(registry);
    net.add_device(ccfg.device);
    const auto client_id = ccfg.device.device_id;
    for (const auto& s : server_cfgs) net.add_device(s.device);
    client = std::make_unique<ClientEndpoint>(ccfg, registry, profiles, net.env(client_id));
    net.set_handler(client_id, client.get());
    for (const auto& s : server_cfgs) {
      auto ep = std::make_unique<ServerEndpoint>(s, registry, net.env(s.device.device_id), client_id);
      net.set_handler(s.device.device_id, ep.get());
      servers.emplace(s.device.device_id, std::move(ep));
      sim::LinkSpec spec{client_id, s.device.device_id};
      net.add_link(client_id, s.device.device_id, LinkModel{spec.throughput_bps, spec.latency_s, 0.0, 0.0, false});
      client->set_link_estimate(s.device.device_id, sim::calibrate_link(ccfg.device, spec));
      engine.schedule_at(0.0, [this, client_id, id = s.device.device_id] { net.set_link_up(client_id, id, true); });
    }
    client->set_listener([this](const TaskOutcome& o) {
      ++calls[o.id];
      outcomes.push_back(o);
    });
  }

  void submit_when_registered(std::vector<TaskInstance> tasks, std::size_t servers_needed) {
    total += tasks.size();
    auto registered = std::make_shared<std::size_t>(0);
    client->set_on_server_registered([this, registered, servers_needed, tasks = std::move(tasks)](const std::string&) {
      if (++*registered != servers_needed) return;
      for (const auto& t : tasks) client->submit(t);
    });
  }

  bool run(double max_s = 1e4) {
    engine.run([this] { return total > 0 && client->completed() == total; }, max_s);
    return client->completed() == total;
  }
};

// Pure local oracle for an instance.
inline std::pair<TaskStateBlob, Bytes> local_oracle(const TaskRegistry& registry, const TaskInstance& instance) {
  ClientDataStore store;
  store.put(instance.id, instance.client_data);
  auto blob = run_lifecycle_local(registry, instance, store);
  return {blob, store.read(instance.id)};
}

struct TcpTranscript {
  bool completed = false;
  std::vector<std::string> client_log;
  std::vector<TaskOutcome> outcomes;
};

// Runs one client and one server over loopback TCP and records the client's
// message log up to the last completion.
inline TcpTranscript run_tcp(const std::vector<TaskInstance>& tasks, const ProfileStore& seeded,
                             const ServerConfig& server_cfg, double timeout_s = 60.0) {
  TaskRegistry registry;
  demo::register_demo_tasks(registry);
  ProfileStore profiles = seeded;
  auto ccfg = client_config();
  TcpRuntime client_rt(ccfg.device.device_id);
  client_rt.set_trace_sink([](const std::string&) {});
  ClientEndpoint client(ccfg, registry, profiles, client_rt);
  client_rt.set_handler(&client);
  client.set_link_estimate(server_cfg.device.device_id,
                           sim::calibrate_link(ccfg.device, sim::LinkSpec{ccfg.device.device_id, server_cfg.device.device_id}));

  TcpTranscript out;
  client.set_on_server_registered([&](const std::string&) {
    for (const auto& t : tasks) client.submit(t);
  });
  client.set_listener([&](const TaskOutcome& o) {
    out.outcomes.push_back(o);
    if (out.outcomes.size() == tasks.size()) out.client_log = client.message_log();
  });
  const auto port = client_rt.listen("127.0.0.1", 0);

  std::thread server_thread([&server_cfg, port, timeout_s] {
    TaskRegistry server_registry;
    demo::register_demo_tasks(server_registry);
    TcpRuntime rt(server_cfg.device.device_id);
    rt.set_trace_sink([](const std::string&) {});
    ServerEndpoint server(server_cfg, server_registry, rt, "client");
    rt.set_handler(&server);
    rt.connect("127.0.0.1", port, "client");
    bool seen = false;
    rt.run_until(
        [&] {
          seen = seen || server.connected();
          return seen && !server.connected();
        },
        timeout_s);
  });
  out.completed = client_rt.run_until([&] { return client.completed() == tasks.size(); }, timeout_s);
  client_rt.disconnect(server_cfg.device.device_id);
  server_thread.join();
  return out;
}

}  // namespace offload::testing
