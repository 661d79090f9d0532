#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "offload/protocol/environment.hpp"
#include "offload/protocol/messages.hpp"
#include "offload/server_sched/hrrn.hpp"
#include "offload/tasklib/task.hpp"

namespace offload {

struct ServerConfig {
  DeviceModel device;
  std::uint32_t steal_capacity = 1;
  std::uint32_t low_watermark = 1;
  double steal_backoff_s = 0.1;
  double steal_backoff_max_s = 2.0;
  // Probability that a remote execution reports fail (fault injection).
  double remote_fail_probability = 0.0;
  std::uint64_t seed = 0;
};

// A server's communication manager: steals work when its queue is low,
// schedules received tasks by HRRN on a single executor, and abandons all
// work for the client when the link drops.
class ServerEndpoint : public PeerHandler {
 public:
  ServerEndpoint(ServerConfig cfg, const TaskRegistry& registry, Environment& env, std::string client_peer);

  void on_frame(const std::string& from, const Frame& frame) override;
  void on_link_up(const std::string& peer) override;
  void on_link_down(const std::string& peer) override;

  // Stops for good: abandons work and ignores later link-ups.
  void crash();

  const ServerConfig& config() const { return cfg_; }
  const ServerQueueState& queue() const { return queue_; }
  bool connected() const { return connected_; }
  std::size_t executed() const { return executed_; }
  std::size_t abandoned() const { return abandoned_; }
  const std::vector<std::string>& message_log() const { return message_log_; }

 private:
  struct Job {
    TaskInstanceId id;
    Bytes state;
    double client_exec_time_s = 0.0;
  };
  struct Running {
    TaskInstanceId id;
    bool awaiting_data = false;
    std::optional<ComputeId> compute;
  };

  double estimate_run(const Job& job) const;
  void maybe_steal();
  void maybe_run();
  void start_compute(const TaskInstanceId& id, Bytes client_data);
  void finish_compute(const TaskInstanceId& id, RemoteBodyResult result, double elapsed_s);
  void abandon_all(const char* reason);
  bool send(const Frame& frame, const std::optional<TaskInstanceId>& owner = std::nullopt);

  ServerConfig cfg_;
  const TaskRegistry& registry_;
  Environment& env_;
  std::string client_;

  bool connected_ = false;
  bool crashed_ = false;
  bool steal_outstanding_ = false;
  std::optional<TimerId> backoff_timer_;
  double backoff_s_;
  std::set<TaskInstanceId> awaiting_transfer_;
  ServerQueueState queue_;
  std::map<TaskInstanceId, Job> jobs_;
  std::optional<Running> running_;
  // Mean measured run time per class on this server.
  std::map<TaskClassId, std::pair<double, std::uint64_t>> run_times_;
  std::mt19937_64 rng_;
  std::size_t executed_ = 0;
  std::size_t abandoned_ = 0;
  std::vector<std::string> message_log_;
};

}  // namespace offload
