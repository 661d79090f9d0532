#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "offload/client_sched/dual_buffer.hpp"
#include "offload/optimizer/optimizer.hpp"
#include "offload/profiler/profiler.hpp"
#include "offload/protocol/environment.hpp"
#include "offload/protocol/messages.hpp"
#include "offload/protocol/offload_table.hpp"
#include "offload/tasklib/task.hpp"

namespace offload {

struct ClientConfig {
  DeviceModel device;
  OptimizerConfig optimizer;
  // Fixed EDP split between buffers H and L; default is the median EDP of the profile store.
  std::optional<double> edp_threshold_js;
  // Benchmark score at or above which a server is an H device.
  double class_threshold = 1.5;
  double ewma_alpha = 0.5;
  bool offloading_enabled = true;
  // Live mode: a remote execution with no result after this long (plus its
  // expected duration) is treated as a lost link.
  std::optional<double> response_timeout_s;
  // Link estimate used for servers without a calibrated one.
  LinkModel default_link{20e6, 0.01, 0.0, 0.0, true};
};

struct TaskOutcome {
  TaskInstanceId id;
  TaskStateBlob blob;
  std::string executed_on;  // "local" or the server id
  double arrival_s = 0.0;
  double started_s = 0.0;   // local start or offload time
  double completed_s = 0.0;
  bool recovered = false;   // re-executed locally after a remote failure or lost link
};

struct ServerInfo {
  DeviceModel model;
  LinkModel link;
  bool connected = false;
};

// The client's communication manager: admits tasks, keeps buffers H/L,
// services steal requests and runs the offload protocol with recovery.
class ClientEndpoint : public PeerHandler {
 public:
  ClientEndpoint(ClientConfig cfg, const TaskRegistry& registry, ProfileStore& profiles, Environment& env);

  // Called exactly once per submitted instance with its final outcome.
  void set_listener(std::function<void(const TaskOutcome&)> listener) { listener_ = std::move(listener); }
  // Runs after each HELLO is accepted, before later frames are processed.
  void set_on_server_registered(std::function<void(const std::string&)> fn) { on_registered_ = std::move(fn); }
  void set_link_estimate(const std::string& server_id, const LinkModel& link);

  // New remotable task generated by the application.
  void submit(TaskInstance instance);

  void on_frame(const std::string& from, const Frame& frame) override;
  void on_link_up(const std::string& peer) override;
  void on_link_down(const std::string& peer) override;

  const OffloadTable& table() const { return table_; }
  const DualBuffer& buffers() const { return buffers_; }
  const StatusBoard& status_board() const { return status_; }
  const std::map<std::string, ServerInfo>& servers() const { return servers_; }
  const ClientDataStore& data_store() const { return store_; }
  // "send:KIND" / "recv:KIND" in processing order.
  const std::vector<std::string>& message_log() const { return message_log_; }
  FleetInfo fleet() const;

  std::size_t submitted() const { return tasks_.size(); }
  std::size_t completed() const { return completed_count_; }
  std::size_t in_flight() const { return executions_.size(); }

 private:
  struct TaskEntry {
    TaskInstance instance;
    double arrival_s = 0.0;
    double started_s = -1.0;
    bool completed = false;
    bool recovered = false;
    bool profiling_run = false;
    std::string lost_server;  // set after link loss until completion
  };

  bool eligible(const TaskInstanceId& id, const std::string& server) const;
  bool any_eligible_server(const TaskInstanceId& id) const;
  void refresh_threshold();

  void handle_hello(const std::string& from, const HelloMsg& msg);
  void handle_steal(const std::string& from, const StealReqMsg& msg);
  void offload(const TaskInstanceId& id, const std::string& server, Bytes prepared_state);
  void handle_data_pull(const std::string& from, const DataPullMsg& msg);
  void handle_data_push(const std::string& from, DataPushMsg msg);
  void handle_return(const std::string& from, ResultReturnMsg msg);
  void handle_link_loss(const std::string& server);
  void accept_remote_finish(TaskEntry& task, const std::string& server, ResultReturnMsg& msg);

  void queue_local(const TaskInstanceId& id, bool front);
  void maybe_start_local();
  void finish_local(const TaskInstanceId& id, TaskStateBlob blob, std::optional<Bytes> data_out, double elapsed_s);
  void complete(TaskEntry& task, TaskStateBlob blob, const std::string& where);
  void arm_timeout(const TaskInstanceId& id, const std::string& server);

  bool send(const std::string& peer, const Frame& frame, const std::optional<TaskInstanceId>& owner = std::nullopt,
            std::function<void(double)> on_sent = {});

  ClientConfig cfg_;
  const TaskRegistry& registry_;
  ProfileStore& profiles_;
  Environment& env_;

  DualBuffer buffers_;
  std::uint64_t threshold_version_ = ~0ULL;
  OffloadTable table_;
  StatusBoard status_;
  ClientDataStore store_;
  std::map<std::string, ServerInfo> servers_;
  std::map<std::string, LinkModel> link_estimates_;
  std::map<TaskInstanceId, TaskEntry> tasks_;
  std::map<TaskInstanceId, RemoteExecution> executions_;
  std::map<TaskInstanceId, Bytes> pending_data_out_;
  std::map<TaskInstanceId, TimerId> timeouts_;
  std::deque<TaskInstanceId> local_queue_;
  std::optional<TaskInstanceId> running_local_;
  std::size_t completed_count_ = 0;
  std::vector<std::string> message_log_;
  std::function<void(const TaskOutcome&)> listener_;
  std::function<void(const std::string&)> on_registered_;
};

}  // namespace offload
