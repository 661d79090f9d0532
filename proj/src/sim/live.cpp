#include "offload/sim/live.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "offload/core/error.hpp"
#include "offload/protocol/client_endpoint.hpp"
#include "offload/protocol/server_endpoint.hpp"
#include "offload/protocol/tcp_runtime.hpp"
#include "offload/sim/presets.hpp"
#include "offload/sim/runner.hpp"
#include "offload/tasklib/demo_tasks.hpp"

namespace offload::sim {
namespace {

std::pair<std::string, std::uint16_t> split_endpoint(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::ConfigError, "expected host:port, got " + s);
  try {
    const auto port = std::stoul(s.substr(colon + 1));
    if (port > 65535) throw std::out_of_range("port");
    return {s.substr(0, colon), static_cast<std::uint16_t>(port)};
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError, "bad port in " + s);
  }
}

void attach_trace(TcpRuntime& rt, const std::string& path, std::ofstream& file) {
  if (path.empty()) {
    rt.set_trace_sink([](const std::string&) {});
    return;
  }
  file.open(path);
  if (!file) throw Error(ErrorCode::IoError, "cannot write " + path);
  rt.set_trace_sink([&file](const std::string& line) { file << line << '\n'; });
}

int run_client(const LiveOptions& o) {
  TaskRegistry registry;
  demo::register_demo_tasks(registry);
  const auto cfg = preset(o.preset);
  auto instances = generate_workload(cfg, registry);
  if (o.task_limit > 0 && instances.size() > o.task_limit) instances.resize(o.task_limit);

  // First-run profiling: each class once, timed on this machine.
  ProfileStore profiles;
  const auto device = preset_client();
  for (const auto& ti : instances) {
    const auto& cls = ti.instance.id.class_id;
    if (profiles.contains(cls)) continue;
    ClientDataStore scratch;
    scratch.put(ti.instance.id, ti.instance.client_data);
    const auto t0 = std::chrono::steady_clock::now();
    run_lifecycle_local(registry, ti.instance, scratch);
    double t = std::max(1e-6, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (o.pace) {
      const auto& spec = registry.get(cls);
      t = std::max(t, (spec.work_s ? spec.work_s(ti.instance.initial_state) : 0.0) / device.cpu_score);
    }
    profiles.profile_first_execution(
        cls,
        TaskProfile::from_measurement(t, device.power_active_w * t,
                                      ti.instance.initial_state.size() + ti.instance.client_data.size()),
        0.0);
  }

  TcpRuntime rt(device.device_id);
  rt.set_pacing(o.pace);
  std::ofstream trace_file;
  attach_trace(rt, o.trace_path, trace_file);
  ClientConfig ccfg;
  ccfg.device = device;
  ccfg.optimizer = cfg.optimizer;
  ccfg.class_threshold = cfg.scheduler.class_threshold;
  ccfg.response_timeout_s = 5.0;
  ccfg.default_link = calibrate_link(device, LinkSpec{});
  ClientEndpoint client(ccfg, registry, profiles, rt);
  rt.set_handler(&client);

  std::set<std::string> registered;
  bool submitted = false;
  double t_start = 0.0;
  client.set_on_server_registered([&](const std::string& server) {
    registered.insert(server);
    std::printf("server registered: %s\n", server.c_str());
    if (!submitted && registered.size() >= o.expect_servers) {
      submitted = true;
      t_start = rt.now();
      for (const auto& ti : instances) client.submit(ti.instance);
    }
  });
  std::map<std::string, std::size_t> where;
  client.set_listener([&](const TaskOutcome& out) {
    ++where[out.executed_on];
    std::printf("%s %s on %s%s\n", out.id.str().c_str(), to_string(out.blob.status).c_str(),
                out.executed_on.c_str(), out.recovered ? " (recovered)" : "");
  });

  const auto [host, port] = split_endpoint(o.listen);
  const auto bound = rt.listen(host, port);
  std::printf("listening on %s:%u, waiting for %zu server(s)\n", host.c_str(), bound, o.expect_servers);
  std::fflush(stdout);
  const bool done = rt.run_until([&] { return submitted && client.completed() == instances.size(); }, 3600.0);
  std::printf("completed %zu/%zu tasks in %.3f s\n", client.completed(), instances.size(), rt.now() - t_start);
  for (const auto& [w, n] : where) std::printf("  %s: %zu\n", w.c_str(), n);
  return done ? 0 : 1;
}

int run_server(const LiveOptions& o) {
  TaskRegistry registry;
  demo::register_demo_tasks(registry);
  DeviceModel device = o.kind == "android_server" ? preset_phone_server() : preset_laptop_server();
  device.kind = device_kind_from_string(o.kind);
  device.cpu_score = o.cpu_score;
  if (!o.device_id.empty()) device.device_id = o.device_id;
  device.validate();

  TcpRuntime rt(device.device_id);
  rt.set_pacing(o.pace);
  std::ofstream trace_file;
  attach_trace(rt, o.trace_path, trace_file);
  ServerConfig scfg;
  scfg.device = device;
  ServerEndpoint server(scfg, registry, rt, "client");
  rt.set_handler(&server);
  const auto [host, port] = split_endpoint(o.connect);
  rt.connect(host, port, "client");
  std::printf("%s connected to %s:%u\n", device.device_id.c_str(), host.c_str(), port);
  std::fflush(stdout);
  bool seen = false;
  rt.run_until(
      [&] {
        seen = seen || server.connected();
        return seen && !server.connected();
      },
      1e9);
  std::printf("client gone; executed %zu task(s)\n", server.executed());
  return 0;
}

}  // namespace

int run_live(const LiveOptions& options) {
  if (options.role == "client") return run_client(options);
  if (options.role == "server") return run_server(options);
  throw Error(ErrorCode::ConfigError, "role must be client or server");
}

}  // namespace offload::sim
