#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "offload/core/energy.hpp"
#include "offload/core/error.hpp"
#include "offload/optimizer/optimizer.hpp"
#include "offload/sim/event_engine.hpp"
#include "offload/sim/metrics.hpp"
#include "offload/sim/presets.hpp"
#include "offload/sim/runner.hpp"
#include "offload/sim/trace_audit.hpp"
#include "offload/tasklib/demo_tasks.hpp"

using namespace offload;
using namespace offload::sim;

namespace {

TaskRegistry demo_registry() {
  TaskRegistry r;
  demo::register_demo_tasks(r);
  return r;
}

ScenarioConfig with_offload(ScenarioConfig cfg, bool on) {
  cfg.offloading = on;
  return cfg;
}

std::optional<ErrorCode> code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("events run in time order, ties in scheduling order") {
  EventEngine e;
  std::vector<int> order;
  e.schedule_at(2.0, [&] { order.push_back(3); });
  e.schedule_at(1.0, [&] { order.push_back(1); });
  e.schedule_at(1.0, [&] { order.push_back(2); });
  const auto dropped = e.schedule_at(1.5, [&] { order.push_back(99); });
  e.cancel(dropped);
  e.run([] { return false; }, 10.0);
  CHECK(order == std::vector{1, 2, 3});
  CHECK(e.now() == 2.0);
  CHECK_THROWS_AS(e.schedule_at(1.0, [] {}), Error);
}

TEST_CASE("empty workload has zero makespan") {
  auto cfg = preset("fd50");
  cfg.workload.clear();
  const auto r = run_scenario(cfg, demo_registry());
  CHECK(r.metrics.makespan_s == 0.0);
  CHECK(r.outcomes.empty());
}

TEST_CASE("a single task with no servers runs locally") {
  auto cfg = preset("fd50");
  cfg.devices = {preset_client()};
  cfg.links.clear();
  cfg.workload[0].count = 1;
  const auto r = run_scenario(cfg, demo_registry());
  REQUIRE(r.outcomes.size() == 1);
  CHECK(r.outcomes[0].executed_on == "local");
  CHECK(r.metrics.offload_fraction == 0.0);
  CHECK(r.metrics.makespan_s == doctest::Approx(1.2));
}

TEST_CASE("fd50 without offloading matches the closed form") {
  const auto r = run_scenario(with_offload(preset("fd50"), false), demo_registry());
  // 50 tasks of 1.2 s run back to back at full client power.
  CHECK(r.metrics.makespan_s == doctest::Approx(60.0).epsilon(1e-9));
  CHECK(r.metrics.avg_client_power_w == doctest::Approx(preset_client().power_active_w).epsilon(1e-9));
  CHECK(r.metrics.offload_fraction == 0.0);
}

TEST_CASE("fd50 with offloading follows the per-task decision") {
  const auto registry = demo_registry();
  const auto cfg = preset("fd50");
  const auto r = run_scenario(cfg, registry);
  const auto off = run_scenario(with_offload(cfg, false), registry);

  // Each task class is profiled from its first instance.
  const auto& first = r.instances.front().instance;
  const double t = 1.2;
  TaskRecord rec{demo::kFaceDetect,
                 TaskProfile::from_measurement(t, preset_client().power_active_w * t,
                                               first.initial_state.size() + first.client_data.size())};
  bool any_remote = false;
  for (const auto* s : cfg.servers()) {
    const auto link = calibrate_link(cfg.client(), LinkSpec{"client", s->device_id});
    any_remote = any_remote || decide(estimate_costs(rec, *s, link, cfg.optimizer), cfg.optimizer).indicator ==
                                   Placement::remote;
  }
  REQUIRE(any_remote);
  for (const auto& o : r.outcomes) CHECK(o.executed_on != "local");
  CHECK(r.metrics.offload_fraction == 1.0);
  CHECK(r.metrics.makespan_s < off.metrics.makespan_s);
  CHECK(r.metrics.avg_client_power_w < off.metrics.avg_client_power_w);
  // No schedule beats perfect sharing of the work among the servers.
  double speed = 0.0;
  for (const auto* s : cfg.servers()) speed += s->cpu_score;
  CHECK(r.metrics.makespan_s >= 60.0 / speed);
}

TEST_CASE("presets") {
  CHECK(preset("fd50").task_count() == 50);
  CHECK(preset("fd50").workload.at(0).class_id == demo::kFaceDetect);
  CHECK(preset("fr").workload.at(0).class_id.str() == "demo/FindRoute");
  std::set<PerfClass> classes;
  const auto mixed = preset("mixed_fleet");
  for (const auto* s : mixed.servers()) classes.insert(classify_device(s->cpu_score, mixed.scheduler.class_threshold));
  CHECK(classes == std::set{PerfClass::H, PerfClass::C});
  CHECK(code_of([] { preset("nope"); }) == ErrorCode::NotFound);
  for (const auto& n : preset_names()) CHECK_NOTHROW(preset(n).validate());
}

TEST_CASE("compare_runs") {
  RunMetrics off, on;
  off.workload_hash = on.workload_hash = "h";
  off.avg_client_power_w = 2.0;
  on.avg_client_power_w = 1.32;
  off.makespan_s = 10.0;
  on.makespan_s = 5.0;
  off.client_energy_j = 20.0;
  on.client_energy_j = 6.6;
  const auto c = compare_runs(off, on);
  CHECK(c.power_reduction_pct == doctest::Approx(34.0));
  CHECK(c.makespan_reduction_pct == doctest::Approx(50.0));
  CHECK(c.energy_reduction_pct == doctest::Approx(67.0));
  CHECK(compare_runs(off, off).power_reduction_pct == 0.0);
  on.workload_hash = "other";
  CHECK(code_of([&] { compare_runs(off, on); }) == ErrorCode::IncomparableRuns);

  auto a = preset("fd50");
  auto b = a;
  b.seed = 99;
  CHECK(a.workload_hash() == b.workload_hash());
  b.workload[0].count = 49;
  CHECK(a.workload_hash() != b.workload_hash());
}

TEST_CASE("invalid configs name the offending field") {
  auto cfg = preset("fd50");
  cfg.workload[0].payload_spread = 1.5;
  try {
    cfg.validate();
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(std::string(e.what()).find("workload[0].payload_spread") != std::string::npos);
  }
  auto j = nlohmann::json::parse(to_json(preset("fd50")).dump());
  j["links"][1]["latency_s"] = -1;
  try {
    scenario_from_json(j);
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("links[1].latency_s") != std::string::npos);
  }
}

TEST_CASE("scenario JSON round-trips") {
  for (const auto& n : preset_names()) {
    auto cfg = preset(n);
    cfg.faults = {FaultEvent{3.0, FaultEvent::Kind::link_down, "phone"}};
    const auto back = scenario_from_json(nlohmann::json::parse(to_json(cfg).dump()));
    CHECK(to_json(back).dump() == to_json(cfg).dump());
    CHECK(back.workload_hash() == cfg.workload_hash());
  }
}

TEST_CASE("runs are deterministic") {
  const auto registry = demo_registry();
  const auto a = run_scenario(preset("mixed_fleet"), registry);
  const auto b = run_scenario(preset("mixed_fleet"), registry);
  CHECK(a.trace == b.trace);
  CHECK(a.metrics.makespan_s == b.metrics.makespan_s);
  auto other = preset("mixed_fleet");
  other.seed = 2;
  CHECK(run_scenario(other, registry).trace != a.trace);
}

TEST_CASE("client energy splits into task, idle and control energy") {
  const auto registry = demo_registry();
  for (const auto& n : preset_names()) {
    for (bool on : {false, true}) {
      CAPTURE(n);
      CAPTURE(on);
      const auto r = run_scenario(with_offload(preset(n), on), registry);
      const auto& m = r.metrics;
      CHECK(std::abs(m.task_energy_j + m.idle_energy_j + m.control_energy_j - m.client_energy_j) <= 1e-6);
      double from_samples = 0.0;
      for (const auto& s : m.samples) {
        if (s.device == "client") from_samples += s.power_w * kSampleIntervalS;
      }
      // The last bin may be partial.
      CHECK(from_samples >= m.client_energy_j - 1e-6);
      CHECK(from_samples <= m.client_energy_j + preset_client().power_active_w * 2 * kSampleIntervalS);
    }
  }
}

TEST_CASE("traces pass the policy, conservation and causality audits") {
  const auto registry = demo_registry();
  for (const auto& n : preset_names()) {
    CAPTURE(n);
    const auto r = run_scenario(preset(n), registry);
    const auto policy = audit_steal_policy(r.trace);
    const auto cons = audit_conservation(r.trace);
    const auto caus = audit_causality(r.trace);
    CHECK(policy.ok());
    CHECK(policy.checked > 0);
    CHECK(cons.ok());
    CHECK(caus.ok());
    for (const auto& v : policy.violations) MESSAGE(v);
    for (const auto& v : cons.violations) MESSAGE(v);
    for (const auto& v : caus.violations) MESSAGE(v);
  }
}

TEST_CASE("the audits catch a broken trace") {
  const auto r = run_scenario(preset("fd50"), demo_registry());
  auto broken = r.trace;
  for (auto it = broken.begin(); it != broken.end(); ++it) {
    if (it->find("\"event_kind\":\"complete\"") != std::string::npos) {
      broken.insert(it, *it);
      break;
    }
  }
  CHECK(!audit_conservation(broken).ok());
  auto reordered = r.trace;
  std::swap(reordered[reordered.size() / 2], reordered.back());
  CHECK(!audit_causality(reordered).ok());
}

TEST_CASE("with every link down offloading degrades to the local baseline") {
  const auto registry = demo_registry();
  auto cfg = preset("fd50");
  for (auto& l : cfg.links) l.up = false;
  const auto r = run_scenario(cfg, registry);
  const auto off = run_scenario(with_offload(preset("fd50"), false), registry);
  CHECK(r.metrics.offload_fraction == 0.0);
  CHECK(r.metrics.makespan_s == doctest::Approx(off.metrics.makespan_s));
  CHECK(r.metrics.avg_client_power_w == doctest::Approx(off.metrics.avg_client_power_w));
}

TEST_CASE("a crashed server's tasks complete locally") {
  const auto registry = demo_registry();
  auto cfg = preset("fd50");
  cfg.faults = {FaultEvent{2.0, FaultEvent::Kind::server_crash, "laptop"}};
  const auto r = run_scenario(cfg, registry);
  CHECK(r.outcomes.size() == 50);
  for (const auto& [id, n] : r.listener_calls) CHECK(n == 1);
  CHECK(audit_conservation(r.trace).ok());
}

TEST_CASE("run output files") {
  const auto dir = std::filesystem::temp_directory_path() / "offload_sim_out";
  std::filesystem::remove_all(dir);
  const auto r = run_scenario(preset("fr"), demo_registry());
  write_run(r, dir);
  CHECK(std::filesystem::exists(dir / "trace.jsonl"));
  CHECK(std::filesystem::exists(dir / "metrics.csv"));
  const auto back = load_summary(dir / "summary.txt");
  CHECK(back.makespan_s == r.metrics.makespan_s);
  CHECK(back.avg_client_power_w == r.metrics.avg_client_power_w);
  CHECK(back.workload_hash == r.metrics.workload_hash);
  std::filesystem::remove_all(dir);
}
