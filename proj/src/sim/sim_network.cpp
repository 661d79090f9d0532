#include "offload/sim/sim_network.hpp"

#include "offload/core/energy.hpp"
#include "offload/core/error.hpp"

namespace offload::sim {

void TraceWriter::write(double t_s, const std::string& device, std::string_view kind, TraceDetail detail) {
  if (t_s < last_t_) ++violations_;
  last_t_ = t_s;
  if (!keep_) return;
  nlohmann::ordered_json line{{"time_s", t_s}, {"device", device}, {"event_kind", kind}, {"detail", std::move(detail)}};
  lines_.push_back(line.dump());
}

double PowerMeter::power_now() const {
  return instantaneous_power(model_, activity_, static_cast<int>(transfers_.size()));
}

void PowerMeter::advance(double t_s) {
  const double dt = t_s - last_s_;
  if (dt > 0.0) {
    const double p = power_now();
    consumed_ += p * dt;
    if (recording_) {
      if (!segments_.empty() && segments_.back().end_s == last_s_ && segments_.back().power_w == p &&
          segments_.back().cpu_load == activity_) {
        segments_.back().end_s = t_s;
      } else {
        segments_.push_back({last_s_, t_s, p, activity_});
      }
      idle_energy_ += model_.power_idle_w * dt;
      const double compute_j = activity_ * (model_.power_active_w - model_.power_idle_w) * dt;
      if (activity_owner_) {
        task_energy_[*activity_owner_] += compute_j;
      } else {
        control_energy_ += compute_j;
      }
      for (const auto& owner : transfers_) {
        const double radio_j = model_.power_tx_w * dt;
        if (owner) {
          task_energy_[*owner] += radio_j;
        } else {
          control_energy_ += radio_j;
        }
      }
    }
  }
  last_s_ = t_s;
}

void PowerMeter::set_activity(double t_s, double activity, const std::optional<TaskInstanceId>& owner) {
  advance(t_s);
  activity_ = activity;
  activity_owner_ = activity > 0.0 ? owner : std::nullopt;
}

void PowerMeter::add_transfer(double t_s, const std::optional<TaskInstanceId>& owner) {
  advance(t_s);
  transfers_.insert(owner);
}

void PowerMeter::remove_transfer(double t_s, const std::optional<TaskInstanceId>& owner) {
  advance(t_s);
  if (auto it = transfers_.find(owner); it != transfers_.end()) transfers_.erase(it);
}

void PowerMeter::start_window(double t_s) {
  advance(t_s);
  segments_.clear();
  task_energy_.clear();
  idle_energy_ = 0.0;
  control_energy_ = 0.0;
  recording_ = true;
}

void PowerMeter::close(double t_s) {
  advance(t_s);
  recording_ = false;
}

double SimEnvironment::now() const { return net_.engine().now(); }

bool SimEnvironment::send(const std::string& peer, const Frame& frame, const std::optional<TaskInstanceId>& owner,
                          std::function<void(double)> on_sent) {
  return net_.transmit(device_, peer, frame, owner, std::move(on_sent));
}

TimerId SimEnvironment::start_timer(double delay_s, std::function<void()> fn) {
  return net_.engine().schedule_after(delay_s, std::move(fn));
}

void SimEnvironment::cancel_timer(TimerId id) { net_.engine().cancel(id); }

ComputeId SimEnvironment::compute(double model_s, const std::optional<TaskInstanceId>& owner,
                                  std::function<void()> work, std::function<void(double)> done) {
  if (!computes_.empty()) throw Error(ErrorCode::InvalidParameter, device_ + " already computing");
  const auto id = next_compute_++;
  auto& meter = net_.meter(device_);
  meter.set_activity(now(), 1.0, owner);
  computes_[id] = net_.engine().schedule_after(
      model_s, [this, id, model_s, work = std::move(work), done = std::move(done)]() {
        computes_.erase(id);
        net_.meter(device_).set_activity(now(), 0.0, std::nullopt);
        work();
        done(model_s);
      });
  return id;
}

void SimEnvironment::cancel_compute(ComputeId id) {
  auto it = computes_.find(id);
  if (it == computes_.end()) return;
  net_.engine().cancel(it->second);
  computes_.erase(it);
  net_.meter(device_).set_activity(now(), 0.0, std::nullopt);
}

void SimEnvironment::trace(std::string_view event_kind, TraceDetail detail) {
  net_.tracer().write(now(), device_, event_kind, std::move(detail));
}

SimEnvironment& SimNetwork::add_device(const DeviceModel& model) {
  model.validate();
  if (devices_.contains(model.device_id)) {
    throw Error(ErrorCode::InvalidParameter, "duplicate device " + model.device_id);
  }
  Device d;
  d.env = std::make_unique<SimEnvironment>(*this, model.device_id);
  d.meter = std::make_unique<PowerMeter>(model);
  return *devices_.emplace(model.device_id, std::move(d)).first->second.env;
}

void SimNetwork::set_handler(const std::string& device_id, PeerHandler* handler) {
  auto it = devices_.find(device_id);
  if (it == devices_.end()) throw Error(ErrorCode::NotFound, device_id);
  it->second.handler = handler;
}

SimNetwork::LinkKey SimNetwork::key(const std::string& a, const std::string& b) {
  return a < b ? LinkKey{a, b} : LinkKey{b, a};
}

SimNetwork::Link& SimNetwork::link(const std::string& a, const std::string& b) {
  auto it = links_.find(key(a, b));
  if (it == links_.end()) throw Error(ErrorCode::NotFound, "no link " + a + " <-> " + b);
  return it->second;
}

void SimNetwork::add_link(const std::string& a, const std::string& b, const LinkModel& model) {
  model.validate();
  if (!devices_.contains(a) || !devices_.contains(b)) throw Error(ErrorCode::NotFound, "link endpoint missing");
  if (!links_.emplace(key(a, b), Link{model, 0, {}}).second) {
    throw Error(ErrorCode::InvalidParameter, "duplicate link " + a + " <-> " + b);
  }
}

bool SimNetwork::link_up(const std::string& a, const std::string& b) const {
  auto it = links_.find(key(a, b));
  return it != links_.end() && it->second.model.up;
}

void SimNetwork::set_link_up(const std::string& a, const std::string& b, bool up) {
  auto& l = link(a, b);
  if (l.model.up == up) return;
  l.model.up = up;
  ++l.epoch;
  l.busy_until.clear();
  trace_.write(engine_.now(), a, up ? "net_link_up" : "net_link_down", {{"peer", b}});
  for (const auto& [self, other] : {std::pair{a, b}, std::pair{b, a}}) {
    if (auto* h = devices_.at(self).handler) {
      if (up) {
        h->on_link_up(other);
      } else {
        h->on_link_down(other);
      }
    }
  }
}

SimEnvironment& SimNetwork::env(const std::string& device_id) {
  auto it = devices_.find(device_id);
  if (it == devices_.end()) throw Error(ErrorCode::NotFound, device_id);
  return *it->second.env;
}

PowerMeter& SimNetwork::meter(const std::string& device_id) {
  auto it = devices_.find(device_id);
  if (it == devices_.end()) throw Error(ErrorCode::NotFound, device_id);
  return *it->second.meter;
}

const PowerMeter& SimNetwork::meter(const std::string& device_id) const {
  auto it = devices_.find(device_id);
  if (it == devices_.end()) throw Error(ErrorCode::NotFound, device_id);
  return *it->second.meter;
}

std::vector<std::string> SimNetwork::device_ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : devices_) out.push_back(id);
  return out;
}

bool SimNetwork::transmit(const std::string& from, const std::string& to, const Frame& frame,
                          const std::optional<TaskInstanceId>& owner, std::function<void(double)> on_sent) {
  auto it = links_.find(key(from, to));
  if (it == links_.end() || !it->second.model.up) return false;
  auto& l = it->second;
  const double now = engine_.now();
  const double start = std::max(now, l.busy_until[from]);
  const double ser = 8.0 * static_cast<double>(frame_size(frame)) / l.model.throughput_bps;
  const double arrival = start + ser + l.model.latency_s;
  l.busy_until[from] = start + ser;
  const auto epoch = l.epoch;
  const auto link_key = it->first;

  engine_.schedule_at(start, [this, from, to, owner]() {
    meter(from).add_transfer(engine_.now(), owner);
    meter(to).add_transfer(engine_.now(), owner);
  });
  engine_.schedule_at(arrival, [this, from, to, owner, frame, epoch, link_key, ser, on_sent = std::move(on_sent)]() {
    meter(from).remove_transfer(engine_.now(), owner);
    meter(to).remove_transfer(engine_.now(), owner);
    const auto& cur = links_.at(link_key);
    if (cur.epoch != epoch || !cur.model.up) {
      ++dropped_;
      trace_.write(engine_.now(), to, "net_drop", {{"from", from}, {"kind", to_string(frame.kind)}});
      return;
    }
    if (on_sent) on_sent(ser);
    if (auto* h = devices_.at(to).handler) h->on_frame(from, frame);
  });
  return true;
}

}  // namespace offload::sim
