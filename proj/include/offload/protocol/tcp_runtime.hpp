#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "offload/protocol/environment.hpp"

namespace offload {

// Live Environment over TCP. One thread owns the poll loop and runs every
// endpoint callback; computations run on worker threads and report back
// through a wake-up pipe. A client listens and names each accepted connection
// after the device id in its first frame, which must be HELLO.
class TcpRuntime : public Environment {
 public:
  explicit TcpRuntime(std::string device_id);
  ~TcpRuntime() override;
  TcpRuntime(const TcpRuntime&) = delete;
  TcpRuntime& operator=(const TcpRuntime&) = delete;

  void set_handler(PeerHandler* handler) { handler_ = handler; }
  // Receives each trace event as one JSON line; default keeps them in memory.
  void set_trace_sink(std::function<void(const std::string&)> sink) { sink_ = std::move(sink); }
  const std::vector<std::string>& trace_lines() const { return trace_lines_; }
  // When set, a computation lasts at least its modelled duration.
  void set_pacing(bool pace) { pace_ = pace; }

  // Returns the bound port (pass 0 for an ephemeral one). Throws IoError.
  std::uint16_t listen(const std::string& host, std::uint16_t port);
  // Connects and reports the link up under `peer_name`. Throws IoError.
  void connect(const std::string& host, std::uint16_t port, const std::string& peer_name);
  void disconnect(const std::string& peer);

  // Dispatches events until `stop` holds (checked after every callback) or
  // timeout_s passes. Returns whether `stop` held.
  bool run_until(const std::function<bool()>& stop, double timeout_s);

  double now() const override;
  bool send(const std::string& peer, const Frame& frame, const std::optional<TaskInstanceId>& owner,
            std::function<void(double)> on_sent) override;
  TimerId start_timer(double delay_s, std::function<void()> fn) override;
  void cancel_timer(TimerId id) override;
  ComputeId compute(double model_s, const std::optional<TaskInstanceId>& owner, std::function<void()> work,
                    std::function<void(double)> done) override;
  void cancel_compute(ComputeId id) override;
  void trace(std::string_view event_kind, TraceDetail detail) override;

 private:
  struct Outgoing {
    Bytes bytes;
    std::size_t offset = 0;
    double queued_s = 0.0;
    std::function<void(double)> on_sent;
  };
  struct Conn {
    int fd = -1;
    std::string peer;  // empty until HELLO names it
    FrameDecoder decoder;
    std::deque<Outgoing> outbox;
    bool broken = false;
  };
  struct Completion {
    ComputeId id;
    double elapsed_s;
  };

  Conn* find_peer(const std::string& peer);
  void flush(Conn& conn);
  void read(Conn& conn);
  void drop(Conn& conn, const char* reason);
  void post(std::function<void()> fn) { deferred_.push_back(std::move(fn)); }
  void wake();

  std::string device_;
  std::chrono::steady_clock::time_point start_;
  PeerHandler* handler_ = nullptr;
  bool pace_ = false;
  std::function<void(const std::string&)> sink_;
  std::vector<std::string> trace_lines_;

  int listen_fd_ = -1;
  int wake_rd_ = -1;
  int wake_wr_ = -1;
  std::vector<std::unique_ptr<Conn>> conns_;
  std::deque<std::function<void()>> deferred_;

  TimerId next_timer_ = 1;
  std::map<TimerId, std::pair<double, std::function<void()>>> timers_;
  std::set<std::pair<double, TimerId>> timer_order_;

  ComputeId next_compute_ = 1;
  std::map<ComputeId, std::function<void(double)>> computes_;
  std::mutex done_mu_;
  std::vector<Completion> done_;
  std::map<ComputeId, std::thread> workers_;
};

}  // namespace offload
