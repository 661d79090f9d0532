#include "offload/protocol/server_endpoint.hpp"

#include <algorithm>
#include <memory>

#include "offload/core/error.hpp"

namespace offload {

ServerEndpoint::ServerEndpoint(ServerConfig cfg, const TaskRegistry& registry, Environment& env,
                               std::string client_peer)
    : cfg_(std::move(cfg)),
      registry_(registry),
      env_(env),
      client_(std::move(client_peer)),
      backoff_s_(cfg_.steal_backoff_s),
      rng_(cfg_.seed) {
  cfg_.device.validate();
  if (!cfg_.device.is_server()) throw Error(ErrorCode::InvalidParameter, "server endpoint needs a server device");
  if (cfg_.steal_capacity == 0) throw Error(ErrorCode::InvalidParameter, "steal capacity must be >= 1");
  queue_.low_watermark = cfg_.low_watermark;
}

void ServerEndpoint::on_link_up(const std::string& peer) {
  if (crashed_ || peer != client_) return;
  env_.trace("link_up", {{"peer", peer}});
  connected_ = true;
  backoff_s_ = cfg_.steal_backoff_s;
  send(to_frame(HelloMsg{cfg_.device.device_id, cfg_.device.kind, cfg_.device.cpu_score}));
  maybe_steal();
}

void ServerEndpoint::on_link_down(const std::string& peer) {
  if (peer != client_ || !connected_) return;
  env_.trace("link_down", {{"peer", peer}});
  connected_ = false;
  abandon_all("link_down");
}

void ServerEndpoint::crash() {
  env_.trace("crash", {});
  crashed_ = true;
  connected_ = false;
  abandon_all("crash");
}

void ServerEndpoint::abandon_all(const char* reason) {
  if (running_) {
    if (running_->compute) env_.cancel_compute(*running_->compute);
    env_.trace("abandon", {{"task", running_->id.str()}, {"reason", reason}, {"was", "running"}});
    ++abandoned_;
    running_.reset();
  }
  for (const auto& e : queue_.queue) {
    env_.trace("abandon", {{"task", e.instance.str()}, {"reason", reason}, {"was", "queued"}});
    ++abandoned_;
  }
  queue_.queue.clear();
  queue_.running.reset();
  jobs_.clear();
  awaiting_transfer_.clear();
  steal_outstanding_ = false;
  if (backoff_timer_) {
    env_.cancel_timer(*backoff_timer_);
    backoff_timer_.reset();
  }
}

double ServerEndpoint::estimate_run(const Job& job) const {
  if (auto it = run_times_.find(job.id.class_id); it != run_times_.end() && it->second.first > 0.0) {
    return it->second.first;
  }
  return std::max(job.client_exec_time_s / cfg_.device.cpu_score, 1e-3);
}

void ServerEndpoint::maybe_steal() {
  if (!connected_ || crashed_ || steal_outstanding_ || backoff_timer_ || !awaiting_transfer_.empty()) return;
  if (!should_steal(queue_)) return;
  DeviceStatus status;
  status.device_id = cfg_.device.device_id;
  status.battery_level = 1.0;
  status.charging = cfg_.device.charging || !cfg_.device.battery_j;
  status.cpu_load = running_ ? 1.0 : 0.0;
  status.link_up = true;
  status.timestamp_s = env_.now();
  send(to_frame(StatusMsg{status}));
  if (send(to_frame(StealReqMsg{cfg_.steal_capacity}))) steal_outstanding_ = true;
}

void ServerEndpoint::on_frame(const std::string& from, const Frame& frame) {
  if (from != client_ || !connected_) return;
  message_log_.push_back("recv:" + to_string(frame.kind));
  try {
    switch (frame.kind) {
      case MessageKind::STEAL_RESP: {
        const auto msg = parse_steal_resp(frame);
        steal_outstanding_ = false;
        if (msg.granted.empty()) {
          const double delay = backoff_s_;
          backoff_s_ = std::min(backoff_s_ * 2.0, cfg_.steal_backoff_max_s);
          backoff_timer_ = env_.start_timer(delay, [this] {
            backoff_timer_.reset();
            maybe_steal();
          });
        } else {
          backoff_s_ = cfg_.steal_backoff_s;
          awaiting_transfer_.insert(msg.granted.begin(), msg.granted.end());
        }
        break;
      }
      case MessageKind::TASK_TRANSFER: {
        auto msg = parse_task_transfer(frame);
        awaiting_transfer_.erase(msg.id);
        if (!registry_.contains(msg.id.class_id)) {
          env_.trace("unknown_class", {{"task", msg.id.str()}});
          send(to_frame(ResultReturnMsg{msg.id, {msg.state, ResultStatus::fail}}), msg.id);
          break;
        }
        Job job{msg.id, std::move(msg.state), msg.client_exec_time_s};
        const double est = estimate_run(job);
        queue_.push(HrrnEntry{job.id, env_.now(), est});
        env_.trace("server_enqueue", {{"task", job.id.str()}, {"est_run_s", est}});
        jobs_.insert_or_assign(job.id, std::move(job));
        maybe_run();
        break;
      }
      case MessageKind::DATA_PUSH: {
        auto msg = parse_data_push(frame);
        if (running_ && running_->id == msg.id && running_->awaiting_data) {
          running_->awaiting_data = false;
          start_compute(msg.id, std::move(msg.data));
        }
        break;
      }
      case MessageKind::ABANDON: {
        const auto msg = parse_abandon(frame);
        if (running_ && running_->id == msg.id) {
          if (running_->compute) env_.cancel_compute(*running_->compute);
          running_.reset();
          queue_.running.reset();
          ++abandoned_;
          env_.trace("abandon", {{"task", msg.id.str()}, {"reason", "client"}, {"was", "running"}});
        } else {
          auto& q = queue_.queue;
          auto it = std::find_if(q.begin(), q.end(), [&](const HrrnEntry& e) { return e.instance == msg.id; });
          if (it != q.end()) {
            q.erase(it);
            ++abandoned_;
            env_.trace("abandon", {{"task", msg.id.str()}, {"reason", "client"}, {"was", "queued"}});
          }
        }
        jobs_.erase(msg.id);
        maybe_run();
        break;
      }
      default:
        throw Error(ErrorCode::ProtocolError, "server does not accept " + to_string(frame.kind));
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ProtocolError && e.code() != ErrorCode::DuplicateTask) throw;
    env_.trace("protocol_error", {{"from", from}, {"error", e.what()}});
  }
  maybe_steal();
}

void ServerEndpoint::maybe_run() {
  if (running_ || !connected_) return;
  const double now = env_.now();
  auto next = pick_next(queue_, now);
  if (!next) return;
  queue_.running = next->instance;
  running_ = Running{next->instance, false, std::nullopt};
  env_.trace("server_start", {{"task", next->instance.str()},
                              {"waited_s", now - next->arrival_s},
                              {"est_run_s", next->est_run_s},
                              {"priority", hrrn_priority(*next, now)}});
  const auto lifecycle = split_lifecycle_remote(registry_, next->instance.class_id);
  if (lifecycle.pulls_client_data()) {
    running_->awaiting_data = true;
    send(to_frame(DataPullMsg{next->instance}), next->instance);
  } else {
    start_compute(next->instance, {});
  }
}

void ServerEndpoint::start_compute(const TaskInstanceId& id, Bytes client_data) {
  const auto& job = jobs_.at(id);
  const auto& spec = registry_.get(id.class_id);
  const double work_s = spec.work_s ? spec.work_s(job.state) : 0.0;
  const double model_s = work_s / cfg_.device.cpu_score;
  auto result = std::make_shared<RemoteBodyResult>();
  const RemoteLifecycle lifecycle(spec);
  running_->compute = env_.compute(
      model_s, id,
      [lifecycle, result, state = job.state, data = std::move(client_data)]() mutable {
        *result = lifecycle.remote_body(std::move(state), data);
      },
      [this, id, result](double elapsed_s) { finish_compute(id, std::move(*result), elapsed_s); });
}

void ServerEndpoint::finish_compute(const TaskInstanceId& id, RemoteBodyResult result, double elapsed_s) {
  running_.reset();
  queue_.running.reset();
  ++executed_;
  auto& [mean, n] = run_times_[id.class_id];
  mean += (elapsed_s - mean) / static_cast<double>(++n);

  if (cfg_.remote_fail_probability > 0.0 &&
      std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < cfg_.remote_fail_probability) {
    env_.trace("remote_fault", {{"task", id.str()}});
    result.blob.status = ResultStatus::fail;
    result.data_out.reset();
  }
  env_.trace("server_done", {{"task", id.str()}, {"status", to_string(result.blob.status)}, {"elapsed_s", elapsed_s}});
  if (result.blob.status == ResultStatus::finish && result.data_out) {
    send(to_frame(DataPushMsg{id, std::move(*result.data_out)}), id);
  }
  send(to_frame(ResultReturnMsg{id, std::move(result.blob)}), id);
  jobs_.erase(id);
  maybe_run();
  maybe_steal();
}

bool ServerEndpoint::send(const Frame& frame, const std::optional<TaskInstanceId>& owner) {
  const bool ok = env_.send(client_, frame, owner);
  TraceDetail detail{{"to", client_}, {"kind", to_string(frame.kind)}, {"bytes", frame_size(frame)}, {"ok", ok}};
  if (owner) detail["task"] = owner->str();
  env_.trace("send", std::move(detail));
  if (ok) message_log_.push_back("send:" + to_string(frame.kind));
  return ok;
}

}  // namespace offload
