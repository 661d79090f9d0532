#include "offload/protocol/client_endpoint.hpp"

#include <memory>

#include "offload/core/energy.hpp"
#include "offload/core/error.hpp"

namespace offload {

namespace {

TraceDetail id_json(const TaskInstanceId& id) { return id.str(); }

struct LocalRun {
  TaskStateBlob blob;
  Bytes data;
};

}  // namespace

ClientEndpoint::ClientEndpoint(ClientConfig cfg, const TaskRegistry& registry, ProfileStore& profiles,
                               Environment& env)
    : cfg_(std::move(cfg)),
      registry_(registry),
      profiles_(profiles),
      env_(env),
      buffers_(cfg_.edp_threshold_js.value_or(1.0)) {
  cfg_.device.validate();
  refresh_threshold();
}

void ClientEndpoint::set_link_estimate(const std::string& server_id, const LinkModel& link) {
  link.validate();
  link_estimates_[server_id] = link;
  if (auto it = servers_.find(server_id); it != servers_.end()) it->second.link = link;
}

FleetInfo ClientEndpoint::fleet() const {
  FleetInfo f;
  for (const auto& [_, s] : servers_) {
    if (!s.connected) continue;
    f.has_h = f.has_h || s.model.perf_class == PerfClass::H;
    f.has_c = f.has_c || s.model.perf_class == PerfClass::C;
  }
  return f;
}

void ClientEndpoint::refresh_threshold() {
  if (cfg_.edp_threshold_js) return;
  if (profiles_.version() == threshold_version_) return;
  threshold_version_ = profiles_.version();
  if (auto median = profiles_.median_edp(); median && *median > 0.0) buffers_.set_threshold(*median);
}

bool ClientEndpoint::eligible(const TaskInstanceId& id, const std::string& server) const {
  auto sit = servers_.find(server);
  if (sit == servers_.end() || !sit->second.connected) return false;
  const auto& info = sit->second;
  if (registry_.get(id.class_id).target == TaskTarget::android_only &&
      info.model.kind != DeviceKind::android_server) {
    return false;
  }
  const auto* record = profiles_.find(id.class_id);
  if (!record) return false;
  if (const auto* status = status_.latest(server); status && !status->link_up) return false;
  const auto costs = estimate_costs(*record, info.model, info.link, cfg_.optimizer);
  return decide(costs, cfg_.optimizer).indicator == Placement::remote;
}

bool ClientEndpoint::any_eligible_server(const TaskInstanceId& id) const {
  for (const auto& [name, _] : servers_) {
    if (eligible(id, name)) return true;
  }
  return false;
}

void ClientEndpoint::submit(TaskInstance instance) {
  const auto id = instance.id;
  if (tasks_.contains(id)) throw Error(ErrorCode::DuplicateTask, id.str());
  registry_.get(id.class_id);
  store_.put(id, instance.client_data);
  TaskEntry entry;
  entry.instance = std::move(instance);
  entry.arrival_s = env_.now();
  auto& task = tasks_.emplace(id, std::move(entry)).first->second;
  env_.trace("task_arrival", {{"task", id_json(id)}});

  const char* reason = nullptr;
  if (!profiles_.contains(id.class_id)) {
    task.profiling_run = true;
    reason = "not_profiled";
  } else if (!cfg_.offloading_enabled) {
    reason = "offloading_disabled";
  } else {
    refresh_threshold();
    if (any_eligible_server(id)) {
      const auto& record = profiles_.lookup(id.class_id);
      const auto buffer = buffers_.enqueue_remotable(id, record);
      env_.trace("enqueue", {{"task", id_json(id)},
                             {"buffer", to_string(buffer)},
                             {"edp", compute_edp(record.profile)},
                             {"threshold", buffers_.threshold()}});
    } else {
      reason = "no_eligible_server";
    }
  }
  if (reason) {
    env_.trace("decide_local", {{"task", id_json(id)}, {"reason", reason}});
    queue_local(id, false);
  }
  maybe_start_local();
}

void ClientEndpoint::on_frame(const std::string& from, const Frame& frame) {
  message_log_.push_back("recv:" + to_string(frame.kind));
  TraceDetail detail{{"from", from}, {"kind", to_string(frame.kind)}, {"bytes", frame_size(frame)}};
  try {
    if (auto id = frame_task_id(frame)) detail["task"] = id->str();
    env_.trace("recv", std::move(detail));
    switch (frame.kind) {
      case MessageKind::HELLO: handle_hello(from, parse_hello(frame)); break;
      case MessageKind::STATUS: {
        auto msg = parse_status(frame);
        if (msg.status.device_id != from) throw Error(ErrorCode::ProtocolError, "status for another device");
        status_.publish(msg.status);
        break;
      }
      case MessageKind::STEAL_REQ: handle_steal(from, parse_steal_req(frame)); break;
      case MessageKind::DATA_PULL: handle_data_pull(from, parse_data_pull(frame)); break;
      case MessageKind::DATA_PUSH: handle_data_push(from, parse_data_push(frame)); break;
      case MessageKind::RESULT_RETURN: handle_return(from, parse_result_return(frame)); break;
      default:
        throw Error(ErrorCode::ProtocolError, "client does not accept " + to_string(frame.kind));
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ProtocolError && e.code() != ErrorCode::InvalidParameter &&
        e.code() != ErrorCode::UnknownClass) {
      throw;
    }
    env_.trace("protocol_error", {{"from", from}, {"error", e.what()}});
  }
}

void ClientEndpoint::on_link_up(const std::string& peer) { env_.trace("link_up", {{"peer", peer}}); }

void ClientEndpoint::on_link_down(const std::string& peer) {
  env_.trace("link_down", {{"peer", peer}});
  if (servers_.contains(peer)) handle_link_loss(peer);
}

void ClientEndpoint::handle_hello(const std::string& from, const HelloMsg& msg) {
  if (msg.device_id != from) throw Error(ErrorCode::ProtocolError, "HELLO device id does not match peer");
  if (msg.kind == DeviceKind::client) throw Error(ErrorCode::ProtocolError, "HELLO from a client device");
  DeviceModel model;
  model.device_id = msg.device_id;
  model.kind = msg.kind;
  model.cpu_score = msg.cpu_score;
  model.validate();
  model.perf_class = classify_device(msg.cpu_score, cfg_.class_threshold);
  auto link_it = link_estimates_.find(from);
  auto& info = servers_[from];
  info.model = model;
  info.link = link_it != link_estimates_.end() ? link_it->second : cfg_.default_link;
  info.connected = true;
  env_.trace("server_registered", {{"server", from},
                                   {"kind", to_string(model.kind)},
                                   {"cpu_score", model.cpu_score},
                                   {"class", to_string(model.perf_class)}});
  if (on_registered_) on_registered_(from);
}

void ClientEndpoint::handle_steal(const std::string& from, const StealReqMsg& msg) {
  auto sit = servers_.find(from);
  if (sit == servers_.end() || !sit->second.connected) {
    send(from, to_frame(StealRespMsg{}));
    return;
  }
  const StealRequest request{from, sit->second.model.perf_class, msg.capacity};
  const TaskPredicate pred = [this, &from](const TaskInstanceId& id) { return eligible(id, from); };
  const auto fleet_now = fleet();
  TraceDetail detail{{"server", from},
                     {"server_class", to_string(request.server_class)},
                     {"fleet_mixed", fleet_now.mixed()},
                     {"capacity", msg.capacity},
                     {"h_size", buffers_.size(BufferId::H)},
                     {"l_size", buffers_.size(BufferId::L)},
                     {"h_eligible", buffers_.count_eligible(BufferId::H, pred)},
                     {"l_eligible", buffers_.count_eligible(BufferId::L, pred)}};
  const auto granted = buffers_.service_steal(request, fleet_now, pred);
  auto taken = TraceDetail::array();
  for (const auto& g : granted) taken.push_back({{"task", g.id.str()}, {"buffer", to_string(g.from)}});
  detail["taken"] = std::move(taken);
  env_.trace("steal_serviced", std::move(detail));

  std::vector<std::pair<TaskInstanceId, Bytes>> prepared;
  for (const auto& g : granted) {
    const auto& task = tasks_.at(g.id);
    Bytes state = task.instance.initial_state;
    const auto lifecycle = split_lifecycle_remote(registry_, g.id.class_id);
    if (!lifecycle.client_prologue(state)) {
      buffers_.confirm_transferred(g.id);
      env_.trace("prologue_failed", {{"task", g.id.str()}});
      queue_local(g.id, false);
      continue;
    }
    prepared.emplace_back(g.id, std::move(state));
  }

  StealRespMsg resp;
  for (const auto& [id, _] : prepared) resp.granted.push_back(id);
  if (!send(from, to_frame(resp))) {
    for (auto it = prepared.rbegin(); it != prepared.rend(); ++it) {
      buffers_.requeue_failed(it->first);
      env_.trace("offload_aborted", {{"task", it->first.str()}, {"server", from}});
    }
    return;
  }
  for (auto& [id, state] : prepared) offload(id, from, std::move(state));
  maybe_start_local();
}

void ClientEndpoint::offload(const TaskInstanceId& id, const std::string& server, Bytes prepared_state) {
  table_.record_offload(id, server);
  const auto& record = profiles_.lookup(id.class_id);
  const auto frame = to_frame(TaskTransferMsg{id, record.profile.exec_time_local_s, std::move(prepared_state)});
  const auto bytes = frame_size(frame);
  const bool ok = send(server, frame, id, [this, id, server, bytes](double duration_s) {
    if (duration_s > 0.0) {
      if (auto sit = servers_.find(server); sit != servers_.end()) {
        sit->second.link = update_throughput(sit->second.link, bytes, duration_s, cfg_.ewma_alpha);
      }
    }
    auto it = executions_.find(id);
    if (it != executions_.end() && it->second.state() == RemoteState::transferring) {
      it->second.advance(RemoteState::executing);
    }
  });
  if (!ok) {
    table_.erase(id);
    buffers_.requeue_failed(id);
    env_.trace("offload_aborted", {{"task", id.str()}, {"server", server}});
    return;
  }
  buffers_.confirm_transferred(id);
  executions_.emplace(id, RemoteExecution(id, server));
  auto& task = tasks_.at(id);
  if (task.started_s < 0.0) task.started_s = env_.now();
  env_.trace("offload", {{"task", id.str()}, {"server", server}});
  arm_timeout(id, server);
}

void ClientEndpoint::arm_timeout(const TaskInstanceId& id, const std::string& server) {
  if (!cfg_.response_timeout_s) return;
  double expected = 0.0;
  const auto& info = servers_.at(server);
  if (const auto* rec = profiles_.find(id.class_id)) {
    const auto costs = estimate_costs(*rec, info.model, info.link, cfg_.optimizer);
    expected = costs.t_remote_s + costs.t_transfer_s;
  }
  timeouts_[id] = env_.start_timer(*cfg_.response_timeout_s + expected, [this, id, server] {
    timeouts_.erase(id);
    auto it = executions_.find(id);
    if (it == executions_.end() || it->second.server() != server) return;
    env_.trace("response_timeout", {{"task", id.str()}, {"server", server}});
    send(server, to_frame(AbandonMsg{id}), id);
    it->second.advance(RemoteState::link_lost);
    executions_.erase(it);
    pending_data_out_.erase(id);
    auto& task = tasks_.at(id);
    task.lost_server = server;
    task.recovered = true;
    queue_local(id, true);
    maybe_start_local();
  });
}

void ClientEndpoint::handle_data_pull(const std::string& from, const DataPullMsg& msg) {
  auto it = executions_.find(msg.id);
  if (it == executions_.end() || it->second.server() != from) {
    env_.trace("orphan_message", {{"from", from}, {"kind", "DATA_PULL"}, {"task", msg.id.str()}});
    return;
  }
  if (it->second.state() == RemoteState::transferring) it->second.advance(RemoteState::executing);
  send(from, to_frame(DataPushMsg{msg.id, store_.read(msg.id)}), msg.id);
}

void ClientEndpoint::handle_data_push(const std::string& from, DataPushMsg msg) {
  auto it = executions_.find(msg.id);
  if (it != executions_.end() && it->second.server() == from) {
    if (it->second.state() == RemoteState::transferring) it->second.advance(RemoteState::executing);
    if (it->second.state() == RemoteState::executing) it->second.advance(RemoteState::returning);
    pending_data_out_[msg.id] = std::move(msg.data);
    return;
  }
  auto tit = tasks_.find(msg.id);
  if (tit != tasks_.end() && !tit->second.completed && tit->second.lost_server == from) {
    // May still win against the local re-execution.
    pending_data_out_[msg.id] = std::move(msg.data);
    return;
  }
  env_.trace("orphan_message", {{"from", from}, {"kind", "DATA_PUSH"}, {"task", msg.id.str()}});
}

void ClientEndpoint::handle_return(const std::string& from, ResultReturnMsg msg) {
  auto tit = tasks_.find(msg.id);
  if (tit == tasks_.end()) {
    env_.trace("orphan_result", {{"from", from}, {"task", msg.id.str()}});
    return;
  }
  auto& task = tit->second;
  auto eit = executions_.find(msg.id);
  if (eit == executions_.end() || eit->second.server() != from) {
    if (task.completed) {
      env_.trace("duplicate_result", {{"from", from}, {"task", msg.id.str()}});
    } else if (task.lost_server == from && msg.blob.status == ResultStatus::finish) {
      // Arrived after recovery started but before the local run finished: first completion wins.
      env_.trace("late_result_accepted", {{"from", from}, {"task", msg.id.str()}});
      if (table_.find(msg.id)) table_.mark_returned(msg.id, msg.blob.status);
      accept_remote_finish(task, from, msg);
    } else {
      env_.trace("orphan_result", {{"from", from}, {"task", msg.id.str()}});
    }
    return;
  }

  if (auto t = timeouts_.find(msg.id); t != timeouts_.end()) {
    env_.cancel_timer(t->second);
    timeouts_.erase(t);
  }
  auto& exec = eit->second;
  if (exec.state() == RemoteState::transferring) exec.advance(RemoteState::executing);
  table_.mark_returned(msg.id, msg.blob.status);
  env_.trace("result", {{"task", msg.id.str()}, {"server", from}, {"status", to_string(msg.blob.status)}});

  if (msg.blob.status == ResultStatus::finish) {
    if (exec.state() == RemoteState::executing) exec.advance(RemoteState::returning);
    exec.advance(RemoteState::done);
    executions_.erase(eit);
    accept_remote_finish(task, from, msg);
  } else {
    if (exec.state() == RemoteState::executing) exec.advance(RemoteState::failed_remote);
    executions_.erase(eit);
    pending_data_out_.erase(msg.id);
    task.recovered = true;
    queue_local(msg.id, true);
  }
  maybe_start_local();
}

void ClientEndpoint::accept_remote_finish(TaskEntry& task, const std::string& server, ResultReturnMsg& msg) {
  const auto& id = task.instance.id;
  if (auto d = pending_data_out_.find(id); d != pending_data_out_.end()) {
    store_.write(id, std::move(d->second));
    pending_data_out_.erase(d);
  }
  const auto lifecycle = split_lifecycle_remote(registry_, id.class_id);
  auto blob = lifecycle.client_epilogue(std::move(msg.blob.payload));
  complete(task, std::move(blob), server);
}

void ClientEndpoint::handle_link_loss(const std::string& server) {
  servers_.at(server).connected = false;
  std::vector<TaskInstanceId> lost;
  for (const auto& [id, exec] : executions_) {
    if (exec.server() == server) lost.push_back(id);
  }
  env_.trace("link_lost", {{"server", server}, {"in_flight", lost.size()}});
  for (auto it = lost.rbegin(); it != lost.rend(); ++it) {
    const auto& id = *it;
    executions_.at(id).advance(RemoteState::link_lost);
    executions_.erase(id);
    pending_data_out_.erase(id);
    if (auto t = timeouts_.find(id); t != timeouts_.end()) {
      env_.cancel_timer(t->second);
      timeouts_.erase(t);
    }
    auto& task = tasks_.at(id);
    task.lost_server = server;
    task.recovered = true;
    env_.trace("recover_local", {{"task", id.str()}, {"server", server}});
    queue_local(id, true);
  }
  maybe_start_local();
}

void ClientEndpoint::queue_local(const TaskInstanceId& id, bool front) {
  if (front) {
    local_queue_.push_front(id);
  } else {
    local_queue_.push_back(id);
  }
}

void ClientEndpoint::maybe_start_local() {
  if (running_local_) return;
  std::optional<TaskInstanceId> next;
  while (!local_queue_.empty() && !next) {
    auto id = local_queue_.front();
    local_queue_.pop_front();
    if (!tasks_.at(id).completed) next = id;
  }
  if (!next && cfg_.offloading_enabled && !buffers_.empty()) {
    next = buffers_.take_oldest([this](const TaskInstanceId& id) { return !any_eligible_server(id); });
    if (next) env_.trace("local_fallback", {{"task", next->str()}});
  }
  if (!next) return;

  const auto id = *next;
  auto& task = tasks_.at(id);
  if (task.started_s < 0.0) task.started_s = env_.now();
  running_local_ = id;
  const auto& spec = registry_.get(id.class_id);
  const double work_s = spec.work_s ? spec.work_s(task.instance.initial_state) : 0.0;
  const double model_s = work_s / cfg_.device.cpu_score;

  auto run = std::make_shared<LocalRun>();
  TaskInstance copy = task.instance;
  Bytes data = store_.read(id);
  env_.trace("local_start", {{"task", id.str()}, {"model_s", model_s}, {"recovery", task.recovered}});
  env_.compute(
      model_s, id,
      [this, run, copy = std::move(copy), data = std::move(data)]() mutable {
        ClientDataStore scratch;
        scratch.put(copy.id, std::move(data));
        run->blob = run_lifecycle_local(registry_, copy, scratch);
        run->data = scratch.read(copy.id);
      },
      [this, id, run](double elapsed_s) {
        finish_local(id, std::move(run->blob), std::move(run->data), elapsed_s);
      });
}

void ClientEndpoint::finish_local(const TaskInstanceId& id, TaskStateBlob blob, std::optional<Bytes> data_out,
                                  double elapsed_s) {
  running_local_.reset();
  auto& task = tasks_.at(id);
  if (task.completed) {
    env_.trace("local_discarded", {{"task", id.str()}});
  } else {
    if (data_out) store_.write(id, std::move(*data_out));
    if (elapsed_s > 0.0) {
      const auto observed = TaskProfile::from_measurement(
          elapsed_s, cfg_.device.power_active_w * elapsed_s,
          task.instance.initial_state.size() + task.instance.client_data.size());
      if (!profiles_.contains(id.class_id)) {
        profiles_.profile_first_execution(id.class_id, observed, env_.now() - elapsed_s);
      } else {
        profiles_.update_profile(id.class_id, observed);
      }
    }
    if (const auto* row = table_.find(id); row && !row->returned) table_.set_local_result(id, blob.status);
    complete(task, std::move(blob), "local");
  }
  maybe_start_local();
}

void ClientEndpoint::complete(TaskEntry& task, TaskStateBlob blob, const std::string& where) {
  if (task.completed) return;
  task.completed = true;
  ++completed_count_;
  TaskOutcome outcome{task.instance.id, std::move(blob), where, task.arrival_s,
                      task.started_s < 0.0 ? env_.now() : task.started_s, env_.now(), task.recovered};
  env_.trace("complete", {{"task", outcome.id.str()},
                          {"where", where},
                          {"status", to_string(outcome.blob.status)},
                          {"recovered", outcome.recovered}});
  if (listener_) listener_(outcome);
}

bool ClientEndpoint::send(const std::string& peer, const Frame& frame, const std::optional<TaskInstanceId>& owner,
                          std::function<void(double)> on_sent) {
  const bool ok = env_.send(peer, frame, owner, std::move(on_sent));
  TraceDetail detail{{"to", peer}, {"kind", to_string(frame.kind)}, {"bytes", frame_size(frame)}, {"ok", ok}};
  if (owner) detail["task"] = owner->str();
  env_.trace("send", std::move(detail));
  if (ok) message_log_.push_back("send:" + to_string(frame.kind));
  return ok;
}

}  // namespace offload
