#include "offload/sim/runner.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <random>
#include <set>

#include "offload/core/energy.hpp"
#include "offload/core/error.hpp"
#include "offload/protocol/server_endpoint.hpp"
#include "offload/sim/event_engine.hpp"
#include "offload/sim/sim_network.hpp"

namespace offload::sim {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Runs the first instance of each class once on the client and records the
// modelled time and energy.
void warm_up_profiles(const ScenarioConfig& cfg, const TaskRegistry& registry,
                      const std::vector<TimedInstance>& instances, ProfileStore& profiles) {
  const auto& client = cfg.client();
  std::set<TaskClassId> done;
  for (const auto& ti : instances) {
    const auto& cls = ti.instance.id.class_id;
    if (done.contains(cls) || profiles.contains(cls)) continue;
    done.insert(cls);
    ClientDataStore scratch;
    scratch.put(ti.instance.id, ti.instance.client_data);
    run_lifecycle_local(registry, ti.instance, scratch);
    const auto& spec = registry.get(cls);
    const double t = (spec.work_s ? spec.work_s(ti.instance.initial_state) : 0.0) / client.cpu_score;
    if (!(t > 0.0)) continue;  // nothing to measure; the class profiles on its first real run
    const auto observed = TaskProfile::from_measurement(
        t, client.power_active_w * t, ti.instance.initial_state.size() + ti.instance.client_data.size());
    profiles.profile_first_execution(cls, observed, 0.0);
  }
}

}  // namespace

std::vector<TimedInstance> generate_workload(const ScenarioConfig& cfg, const TaskRegistry& registry) {
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<TimedInstance> out;
  std::uint64_t seq = 1;
  for (const auto& w : cfg.workload) {
    const auto& spec = registry.get(w.class_id);
    double t = cfg.warmup_s;
    for (std::uint32_t k = 0; k < w.count; ++k) {
      if (k > 0) {
        if (w.inter_arrival.kind == InterArrival::Kind::fixed) {
          t += w.inter_arrival.mean_s;
        } else if (w.inter_arrival.mean_s > 0.0) {
          t += -std::log(1.0 - unit(rng)) * w.inter_arrival.mean_s;
        }
      }
      auto payload = w.payload_bytes;
      if (w.payload_spread > 0.0) {
        const double f = 1.0 + w.payload_spread * (2.0 * unit(rng) - 1.0);
        payload = static_cast<std::uint64_t>(std::llround(static_cast<double>(w.payload_bytes) * f));
      }
      InstanceParams p{seq++, payload, w.work_units * cfg.unit_time_s, rng()};
      out.push_back({t, spec.make_instance(p)});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const TimedInstance& a, const TimedInstance& b) { return a.arrival_s < b.arrival_s; });
  return out;
}

LinkModel calibrate_link(const DeviceModel& client, const LinkSpec& link) {
  LinkModel model{link.throughput_bps, link.latency_s, 0.0, 0.0, true};
  std::vector<TransferEnergySample> samples;
  for (std::uint64_t bytes : {4096ULL, 65536ULL, 262144ULL}) {
    const double airtime = link.latency_s + 8.0 * static_cast<double>(bytes) / link.throughput_bps;
    samples.push_back({bytes, client.power_tx_w * airtime});
  }
  const auto fit = fit_transfer_energy(samples);
  model.tx_energy_intercept_j = fit.intercept_j;
  model.tx_energy_per_byte_j = fit.per_byte_j;
  return model;
}

RunResult run_scenario(const ScenarioConfig& cfg, const TaskRegistry& registry, const RunOptions& options) {
  cfg.validate();
  RunResult result;
  result.instances = generate_workload(cfg, registry);

  auto profiles = options.profile_db ? ProfileStore(*options.profile_db) : ProfileStore();
  warm_up_profiles(cfg, registry, result.instances, profiles);

  EventEngine engine;
  TraceWriter tracer(options.keep_trace);
  SimNetwork net(engine, tracer);
  const auto& client_model = cfg.client();
  for (const auto& d : cfg.devices) net.add_device(d);

  ClientConfig ccfg;
  ccfg.device = client_model;
  ccfg.optimizer = cfg.optimizer;
  ccfg.edp_threshold_js = cfg.scheduler.edp_threshold_js;
  ccfg.class_threshold = cfg.scheduler.class_threshold;
  ccfg.offloading_enabled = cfg.offloading;
  ClientEndpoint client(ccfg, registry, profiles, net.env(client_model.device_id));
  net.set_handler(client_model.device_id, &client);

  std::map<std::string, std::unique_ptr<ServerEndpoint>> servers;
  std::uint64_t index = 0;
  for (const auto* s : cfg.servers()) {
    ++index;
    if (!cfg.offloading) continue;
    ServerConfig scfg;
    scfg.device = *s;
    scfg.steal_capacity = cfg.scheduler.steal_capacity;
    scfg.low_watermark = cfg.scheduler.low_watermark;
    scfg.steal_backoff_s = cfg.scheduler.steal_backoff_s;
    scfg.steal_backoff_max_s = cfg.scheduler.steal_backoff_max_s;
    scfg.remote_fail_probability = cfg.remote_fail_probability;
    scfg.seed = splitmix(cfg.seed ^ splitmix(index));
    auto ep = std::make_unique<ServerEndpoint>(scfg, registry, net.env(s->device_id), client_model.device_id);
    net.set_handler(s->device_id, ep.get());
    servers.emplace(s->device_id, std::move(ep));
  }

  for (const auto& l : cfg.links) {
    net.add_link(l.client, l.server, LinkModel{l.throughput_bps, l.latency_s, 0.0, 0.0, false});
    client.set_link_estimate(l.server, calibrate_link(client_model, l));
    if (l.up) engine.schedule_at(0.0, [&net, l] { net.set_link_up(l.client, l.server, true); });
  }

  std::set<std::string> crashed;
  for (const auto& f : cfg.faults) {
    engine.schedule_at(f.time_s, [&, f] {
      if (crashed.contains(f.server)) return;
      switch (f.kind) {
        case FaultEvent::Kind::link_down: net.set_link_up(client_model.device_id, f.server, false); break;
        case FaultEvent::Kind::link_up: net.set_link_up(client_model.device_id, f.server, true); break;
        case FaultEvent::Kind::server_crash:
          crashed.insert(f.server);
          if (auto it = servers.find(f.server); it != servers.end()) it->second->crash();
          net.set_link_up(client_model.device_id, f.server, false);
          break;
      }
    });
  }

  engine.schedule_at(cfg.warmup_s, [&] {
    for (const auto& id : net.device_ids()) net.meter(id).start_window(engine.now());
  });
  for (const auto& ti : result.instances) {
    engine.schedule_at(ti.arrival_s, [&client, inst = ti.instance] { client.submit(inst); });
  }

  const std::size_t total = result.instances.size();
  client.set_listener([&](const TaskOutcome& o) {
    ++result.listener_calls[o.id];
    result.outcomes.push_back(o);
  });

  engine.run([&] { return client.completed() == total && engine.now() >= cfg.warmup_s; }, cfg.max_sim_time_s);
  if (client.completed() != total) {
    throw Error(ErrorCode::InvalidParameter, "simulation ended with " + std::to_string(client.completed()) + " of " +
                                                 std::to_string(total) + " tasks complete");
  }

  double end_s = cfg.warmup_s;
  for (const auto& o : result.outcomes) end_s = std::max(end_s, o.completed_s);
  for (const auto& id : net.device_ids()) net.meter(id).close(end_s);

  std::vector<TaskMetric> tasks;
  for (const auto& o : result.outcomes) {
    TaskMetric t;
    t.id = o.id;
    t.executed_on = o.executed_on;
    t.status = o.blob.status;
    t.arrival_s = o.arrival_s;
    t.started_s = o.started_s;
    t.completed_s = o.completed_s;
    t.exec_time_s = o.completed_s - o.started_s;
    t.queue_wait_s = o.started_s - o.arrival_s;
    t.recovered = o.recovered;
    tasks.push_back(std::move(t));
  }
  result.metrics = collect_metrics(net, client_model.device_id, cfg.warmup_s, end_s, std::move(tasks));
  result.metrics.scenario = cfg.name;
  result.metrics.workload_hash = cfg.workload_hash();
  result.metrics.seed = cfg.seed;
  result.metrics.offloading = cfg.offloading;

  for (const auto& ti : result.instances) result.final_client_data[ti.instance.id] = client.data_store().read(ti.instance.id);
  result.client_messages = client.message_log();
  for (const auto& row : client.table().rows()) result.offload_table.push_back(format_row(row));
  result.trace = tracer.lines();
  result.trace_order_violations = tracer.ordering_violations();
  result.frames_dropped = net.frames_dropped();
  result.events = engine.executed();
  return result;
}

void write_run(const RunResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "trace.jsonl");
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + (dir / "trace.jsonl").string());
    for (const auto& line : result.trace) out << line << '\n';
  }
  write_metrics_csv(result.metrics, dir / "metrics.csv");
  write_summary(result.metrics, dir / "summary.txt");
}

}  // namespace offload::sim
