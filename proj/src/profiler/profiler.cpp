#include "offload/profiler/profiler.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "offload/core/energy.hpp"
#include "offload/core/error.hpp"

namespace offload {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& field, const std::string& line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::IoError, "bad number '" + field + "' in profile line: " + line);
  }
}

std::uint64_t parse_u64(const std::string& field, const std::string& line) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw Error(ErrorCode::IoError, "bad integer '" + field + "' in profile line: " + line);
  }
  return v;
}

}  // namespace

ProfileStore::ProfileStore(std::filesystem::path file) : file_(std::move(file)) {
  std::ifstream in(*file_);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    auto record = parse_line(line);
    records_.insert_or_assign(record.class_id, std::move(record));
  }
  ++version_;
}

const TaskRecord& ProfileStore::profile_first_execution(const TaskClassId& id,
                                                        const TaskProfile& observed, double now_s) {
  if (records_.contains(id)) throw Error(ErrorCode::DuplicateRecord, id.str());
  observed.validate();
  auto [it, _] = records_.emplace(id, TaskRecord{id, observed, now_s, 1});
  ++version_;
  persist(it->second);
  return it->second;
}

const TaskRecord& ProfileStore::update_profile(const TaskClassId& id, const TaskProfile& observed) {
  auto it = records_.find(id);
  if (it == records_.end()) throw Error(ErrorCode::NotProfiled, id.str());
  observed.validate();

  auto& rec = it->second;
  const double n = static_cast<double>(rec.sample_count);
  const auto mean = [n](double old_v, double obs) { return old_v + (obs - old_v) / (n + 1.0); };
  const double t = mean(rec.profile.exec_time_local_s, observed.exec_time_local_s);
  const double e = mean(rec.profile.energy_local_j, observed.energy_local_j);
  const double s = mean(static_cast<double>(rec.profile.payload_bytes),
                        static_cast<double>(observed.payload_bytes));
  rec.profile = TaskProfile::from_measurement(t, e, static_cast<std::uint64_t>(std::llround(s)));
  rec.sample_count += 1;
  ++version_;
  persist(rec);
  return rec;
}

const TaskRecord& ProfileStore::lookup(const TaskClassId& id) const {
  const auto* rec = find(id);
  if (!rec) throw Error(ErrorCode::NotProfiled, id.str() + " must run locally once first");
  return *rec;
}

const TaskRecord* ProfileStore::find(const TaskClassId& id) const {
  auto it = records_.find(id);
  return it == records_.end() ? nullptr : &it->second;
}

std::vector<TaskRecord> ProfileStore::records() const {
  std::vector<TaskRecord> out;
  for (const auto& [_, rec] : records_) out.push_back(rec);
  return out;
}

std::optional<double> ProfileStore::median_edp() const {
  if (records_.empty()) return std::nullopt;
  std::vector<double> edps;
  for (const auto& [_, rec] : records_) edps.push_back(compute_edp(rec.profile));
  std::sort(edps.begin(), edps.end());
  const auto mid = edps.size() / 2;
  if (edps.size() % 2 == 1) return edps[mid];
  return 0.5 * (edps[mid - 1] + edps[mid]);
}

std::string ProfileStore::format_line(const TaskRecord& r) {
  return r.class_id.str() + "\t" + format_double(r.profile.exec_time_local_s) + "\t" +
         format_double(r.profile.energy_local_j) + "\t" + std::to_string(r.profile.payload_bytes) +
         "\t" + std::to_string(r.sample_count);
}

TaskRecord ProfileStore::parse_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, '\t')) fields.push_back(field);
  if (fields.size() != 5) {
    throw Error(ErrorCode::IoError, "profile line needs 5 tab-separated fields: " + line);
  }
  TaskRecord r;
  r.class_id = TaskClassId::parse(fields[0]);
  r.profile = TaskProfile::from_measurement(parse_double(fields[1], line), parse_double(fields[2], line),
                                            parse_u64(fields[3], line));
  r.sample_count = parse_u64(fields[4], line);
  if (r.sample_count == 0) throw Error(ErrorCode::IoError, "sample count must be >= 1: " + line);
  return r;
}

void ProfileStore::persist(const TaskRecord& record) {
  if (!file_) return;
  std::ofstream out(*file_, std::ios::app);
  if (!out) throw Error(ErrorCode::IoError, "cannot append to " + file_->string());
  out << format_line(record) << '\n';
}

LinkModel update_throughput(const LinkModel& link, std::uint64_t observed_bytes,
                            double observed_duration_s, double alpha) {
  if (!(observed_duration_s > 0.0) || !std::isfinite(observed_duration_s)) {
    throw Error(ErrorCode::InvalidParameter, "transfer duration must be > 0");
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "EWMA alpha must be in (0, 1]");
  }
  const double sample = 8.0 * static_cast<double>(observed_bytes) / observed_duration_s;
  LinkModel out = link;
  out.throughput_bps = alpha * sample + (1.0 - alpha) * link.throughput_bps;
  return out;
}

TransferEnergyFit fit_transfer_energy(const std::vector<TransferEnergySample>& samples) {
  std::vector<double> xs;
  for (const auto& s : samples) {
    if (!(s.joules >= 0.0) || !std::isfinite(s.joules)) {
      throw Error(ErrorCode::InvalidParameter, "transfer energy samples must be finite and >= 0");
    }
    xs.push_back(static_cast<double>(s.bytes));
  }
  std::sort(xs.begin(), xs.end());
  if (std::unique(xs.begin(), xs.end()) - xs.begin() < 2) {
    throw Error(ErrorCode::InsufficientData, "need at least two distinct transfer sizes");
  }

  const double n = static_cast<double>(samples.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& s : samples) {
    const double x = static_cast<double>(s.bytes);
    sx += x;
    sy += s.joules;
    sxx += x * x;
    sxy += x * s.joules;
  }
  const auto sse = [&](double a, double b) {
    double total = 0.0;
    for (const auto& s : samples) {
      const double r = s.joules - (a + b * static_cast<double>(s.bytes));
      total += r * r;
    }
    return total;
  };

  // Non-negative least squares in two variables: the unconstrained optimum if
  // feasible, otherwise the best of the boundary solutions.
  const double mx = sx / n;
  const double my = sy / n;
  const double b_free = (sxy - n * mx * my) / (sxx - n * mx * mx);
  const double a_free = my - b_free * mx;
  if (a_free >= 0.0 && b_free >= 0.0) return {a_free, b_free};

  std::vector<TransferEnergyFit> candidates{{my, 0.0}, {0.0, 0.0}};
  if (sxx > 0.0) candidates.push_back({0.0, std::max(0.0, sxy / sxx)});
  TransferEnergyFit best = candidates.front();
  double best_sse = sse(best.intercept_j, best.per_byte_j);
  for (const auto& c : candidates) {
    const double e = sse(c.intercept_j, c.per_byte_j);
    if (e < best_sse) {
      best = c;
      best_sse = e;
    }
  }
  return best;
}

void DeviceStatus::validate() const {
  const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(battery_level) || !in_unit(cpu_load)) {
    throw Error(ErrorCode::InvalidParameter, device_id + ": status fractions must be in [0, 1]");
  }
  if (!(measured_throughput_bps >= 0.0) || !std::isfinite(timestamp_s)) {
    throw Error(ErrorCode::InvalidParameter, device_id + ": bad throughput or timestamp");
  }
}

bool StatusBoard::publish(const DeviceStatus& status) {
  status.validate();
  auto it = latest_.find(status.device_id);
  if (it != latest_.end() && status.timestamp_s < it->second.timestamp_s) return false;
  latest_.insert_or_assign(status.device_id, status);
  return true;
}

const DeviceStatus* StatusBoard::latest(const std::string& device_id) const {
  auto it = latest_.find(device_id);
  return it == latest_.end() ? nullptr : &it->second;
}

}  // namespace offload
