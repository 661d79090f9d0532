#include "offload/sim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "offload/core/error.hpp"

namespace offload::sim {

double integrate_segments(const std::vector<PowerSegment>& segments, double from_s, double to_s) {
  double e = 0.0;
  for (const auto& s : segments) {
    const double a = std::max(s.start_s, from_s);
    const double b = std::min(s.end_s, to_s);
    if (b > a) e += s.power_w * (b - a);
  }
  return e;
}

namespace {

double integrate_load(const std::vector<PowerSegment>& segments, double from_s, double to_s) {
  double l = 0.0;
  for (const auto& s : segments) {
    const double a = std::max(s.start_s, from_s);
    const double b = std::min(s.end_s, to_s);
    if (b > a) l += s.cpu_load * (b - a);
  }
  return l;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

double pct(double off, double on) { return off == 0.0 ? 0.0 : (off - on) / off * 100.0; }

}  // namespace

RunMetrics collect_metrics(const SimNetwork& net, const std::string& client_id, double start_s, double end_s,
                           std::vector<TaskMetric> tasks) {
  RunMetrics m;
  m.window_start_s = start_s;
  m.window_end_s = end_s;
  m.makespan_s = end_s - start_s;

  for (const auto& device : net.device_ids()) {
    const auto& meter = net.meter(device);
    const auto& segs = meter.segments();
    m.device_energy_j[device] = integrate_segments(segs, start_s, end_s);
    // Sample bins cover the window; the last one may be partial.
    const auto bins = static_cast<std::size_t>(std::ceil(m.makespan_s / kSampleIntervalS - 1e-9));
    for (std::size_t k = 0; k < bins; ++k) {
      const double a = start_s + static_cast<double>(k) * kSampleIntervalS;
      const double b = std::min(end_s, a + kSampleIntervalS);
      const double w = b - a;
      if (w <= 0.0) break;
      m.samples.push_back({a, device, integrate_segments(segs, a, b) / w, integrate_load(segs, a, b) / w});
    }
  }
  std::stable_sort(m.samples.begin(), m.samples.end(),
                   [](const PowerSample& x, const PowerSample& y) { return x.t_s < y.t_s; });

  const auto& client = net.meter(client_id);
  m.client_energy_j = m.device_energy_j[client_id];
  m.avg_client_power_w = m.makespan_s > 0.0 ? m.client_energy_j / m.makespan_s : 0.0;
  m.idle_energy_j = client.idle_energy_j();
  m.control_energy_j = client.control_energy_j();
  std::size_t remote = 0;
  for (auto& t : tasks) {
    auto it = client.task_energy_j().find(t.id);
    t.energy_j = it == client.task_energy_j().end() ? 0.0 : it->second;
    if (t.executed_on != "local") ++remote;
  }
  for (const auto& [_, e] : client.task_energy_j()) m.task_energy_j += e;
  m.offload_fraction = tasks.empty() ? 0.0 : static_cast<double>(remote) / static_cast<double>(tasks.size());
  m.tasks = std::move(tasks);
  return m;
}

void write_metrics_csv(const RunMetrics& m, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + file.string());
  out << "t_s,device,power_w,cpu_load\n";
  for (const auto& s : m.samples) {
    out << fmt_short(s.t_s) << ',' << s.device << ',' << fmt_short(s.power_w) << ',' << fmt_short(s.cpu_load) << '\n';
  }
}

void write_summary(const RunMetrics& m, const std::filesystem::path& file,
                   const std::vector<std::pair<std::string, std::string>>& extra) {
  std::ofstream out(file);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + file.string());
  out << "scenario: " << m.scenario << '\n'
      << "workload_hash: " << m.workload_hash << '\n'
      << "seed: " << m.seed << '\n'
      << "offloading: " << (m.offloading ? "on" : "off") << '\n'
      << "tasks: " << m.tasks.size() << '\n'
      << "makespan_s: " << fmt(m.makespan_s) << '\n'
      << "client_energy_j: " << fmt(m.client_energy_j) << '\n'
      << "avg_client_power_w: " << fmt(m.avg_client_power_w) << '\n'
      << "offload_fraction: " << fmt(m.offload_fraction) << '\n'
      << "task_energy_j: " << fmt(m.task_energy_j) << '\n'
      << "idle_energy_j: " << fmt(m.idle_energy_j) << '\n'
      << "control_energy_j: " << fmt(m.control_energy_j) << '\n';
  for (const auto& [device, e] : m.device_energy_j) out << "device_energy_j." << device << ": " << fmt(e) << '\n';
  std::map<std::string, std::size_t> where;
  for (const auto& t : m.tasks) ++where[t.executed_on];
  for (const auto& [w, n] : where) out << "executed_on." << w << ": " << n << '\n';
  for (const auto& [k, v] : extra) out << k << ": " << v << '\n';
}

RunMetrics load_summary(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + file.string());
  RunMetrics m;
  std::string line;
  while (std::getline(in, line)) {
    const auto colon = line.find(": ");
    if (colon == std::string::npos) continue;
    const auto key = line.substr(0, colon);
    const auto value = line.substr(colon + 2);
    try {
      if (key == "scenario") m.scenario = value;
      else if (key == "workload_hash") m.workload_hash = value;
      else if (key == "seed") m.seed = std::stoull(value);
      else if (key == "offloading") m.offloading = value == "on";
      else if (key == "makespan_s") m.makespan_s = std::stod(value);
      else if (key == "client_energy_j") m.client_energy_j = std::stod(value);
      else if (key == "avg_client_power_w") m.avg_client_power_w = std::stod(value);
      else if (key == "offload_fraction") m.offload_fraction = std::stod(value);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, file.string() + ": bad value for " + key);
    }
  }
  if (m.workload_hash.empty()) throw Error(ErrorCode::ConfigError, file.string() + ": no workload_hash");
  return m;
}

CompareReport compare_runs(const RunMetrics& off, const RunMetrics& on) {
  if (off.workload_hash != on.workload_hash) {
    throw Error(ErrorCode::IncomparableRuns,
                "workload hashes differ: " + off.workload_hash + " vs " + on.workload_hash);
  }
  return CompareReport{pct(off.avg_client_power_w, on.avg_client_power_w), pct(off.makespan_s, on.makespan_s),
                       pct(off.client_energy_j, on.client_energy_j)};
}

}  // namespace offload::sim
