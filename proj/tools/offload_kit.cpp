#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "offload/core/error.hpp"
#include "offload/sim/live.hpp"
#include "offload/sim/metrics.hpp"
#include "offload/sim/presets.hpp"
#include "offload/sim/runner.hpp"
#include "offload/tasklib/demo_tasks.hpp"

namespace {

using namespace offload;
using namespace offload::sim;

int cmd_sim(const std::string& preset_name, const std::string& config_path, const std::string& offload_mode,
            std::optional<std::uint64_t> seed, const std::string& out_dir, std::optional<double> latency_budget,
            const std::string& profile_db, bool dump_config) {
  auto cfg = config_path.empty() ? preset(preset_name) : load_scenario(config_path);
  if (!offload_mode.empty()) cfg.offloading = offload_mode == "on";
  if (seed) cfg.seed = *seed;
  if (latency_budget) cfg.optimizer.latency_budget_s = *latency_budget;
  cfg.validate();
  if (dump_config) {
    std::cout << to_json(cfg).dump(2) << '\n';
    return 0;
  }
  TaskRegistry registry;
  demo::register_demo_tasks(registry);
  RunOptions options;
  if (!profile_db.empty()) options.profile_db = profile_db;
  const auto result = run_scenario(cfg, registry, options);
  write_run(result, out_dir);
  const auto& m = result.metrics;
  std::printf("%s offloading=%s tasks=%zu makespan_s=%.3f avg_client_power_w=%.3f offload_fraction=%.3f\n",
              cfg.name.c_str(), cfg.offloading ? "on" : "off", m.tasks.size(), m.makespan_s, m.avg_client_power_w,
              m.offload_fraction);
  return 0;
}

int cmd_compare(const std::string& a, const std::string& b) {
  const auto off = load_summary(std::filesystem::path(a) / "summary.txt");
  const auto on = load_summary(std::filesystem::path(b) / "summary.txt");
  const auto r = compare_runs(off, on);
  std::printf("avg_power_reduction_pct: %.2f\nmakespan_reduction_pct: %.2f\nenergy_reduction_pct: %.2f\n",
              r.power_reduction_pct, r.makespan_reduction_pct, r.energy_reduction_pct);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task offloading toolkit: simulator, run comparison and live TCP mode"};
  app.require_subcommand(1);

  std::string preset_name = "fd50", config_path, offload_mode = "on", out_dir = "out", profile_db;
  std::optional<std::uint64_t> seed;
  std::optional<double> latency_budget;
  bool dump_config = false;
  auto* sim = app.add_subcommand("sim", "Run a simulated scenario");
  sim->add_option("--preset", preset_name, "fd50, fr or mixed_fleet")->check(CLI::IsMember(preset_names()));
  sim->add_option("--config", config_path, "Scenario JSON file (overrides --preset)");
  sim->add_option("--offload", offload_mode, "on or off")->check(CLI::IsMember({"on", "off"}));
  sim->add_option("--seed", seed, "Workload and fault seed");
  sim->add_option("--out", out_dir, "Output directory");
  sim->add_option("--latency-budget", latency_budget, "Latency budget in seconds");
  sim->add_option("--profile-db", profile_db, "Persistent task profile file");
  sim->add_flag("--dump-config", dump_config, "Print the resolved scenario JSON and exit");

  std::string cmp_a, cmp_b;
  auto* compare = app.add_subcommand("compare", "Compare an offloading-off run with an offloading-on run");
  compare->add_option("baseline", cmp_a, "Run directory with offloading off")->required();
  compare->add_option("candidate", cmp_b, "Run directory with offloading on")->required();

  LiveOptions live_opts;
  auto* live = app.add_subcommand("live", "Run one endpoint over TCP");
  live->add_option("--role", live_opts.role, "client or server")->required()->check(CLI::IsMember({"client", "server"}));
  live->add_option("--listen", live_opts.listen, "client: host:port to listen on");
  live->add_option("--connect", live_opts.connect, "server: client host:port");
  live->add_option("--device", live_opts.device_id, "Device id");
  live->add_option("--cpu-score", live_opts.cpu_score, "Benchmark score of this device");
  live->add_option("--kind", live_opts.kind, "server kind: generic_server or android_server");
  live->add_option("--preset", live_opts.preset, "client: workload preset");
  live->add_option("--tasks", live_opts.task_limit, "client: submit at most this many tasks");
  live->add_option("--servers", live_opts.expect_servers, "client: servers to wait for before submitting");
  live->add_option("--trace", live_opts.trace_path, "Write the endpoint trace to this file");
  live->add_option("--pace", live_opts.pace, "Stretch computations to their modelled duration")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  try {
    if (sim->parsed()) {
      return cmd_sim(preset_name, config_path, offload_mode, seed, out_dir, latency_budget, profile_db, dump_config);
    }
    if (compare->parsed()) return cmd_compare(cmp_a, cmp_b);
    if (live->parsed()) return run_live(live_opts);
  } catch (const offload::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
