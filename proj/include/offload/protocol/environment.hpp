#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "offload/core/types.hpp"
#include "offload/protocol/wire.hpp"

namespace offload {

using TimerId = std::uint64_t;
using ComputeId = std::uint64_t;
using TraceDetail = nlohmann::ordered_json;

// Services an endpoint needs from whatever runs it: the discrete-event
// simulator or the live TCP loop. All callbacks are delivered on the
// endpoint's own thread.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual double now() const = 0;

  // Queues a frame for `peer`. Returns false if the link is down. on_sent gets
  // the measured transmission time of the frame (propagation excluded where
  // the transport can tell). `owner` attributes transfer energy to a task.
  virtual bool send(const std::string& peer, const Frame& frame,
                    const std::optional<TaskInstanceId>& owner = std::nullopt,
                    std::function<void(double)> on_sent = {}) = 0;

  virtual TimerId start_timer(double delay_s, std::function<void()> fn) = 0;
  virtual void cancel_timer(TimerId id) = 0;

  // Runs `work`, a computation whose modelled duration on this device is
  // model_s, then `done` with the elapsed time. The simulator charges model_s;
  // the live loop runs `work` on a worker thread and reports wall time.
  virtual ComputeId compute(double model_s, const std::optional<TaskInstanceId>& owner,
                            std::function<void()> work, std::function<void(double)> done) = 0;
  // The pending `done` never runs.
  virtual void cancel_compute(ComputeId id) = 0;

  virtual void trace(std::string_view event_kind, TraceDetail detail) = 0;
};

// Receives transport events for one endpoint.
class PeerHandler {
 public:
  virtual ~PeerHandler() = default;
  virtual void on_frame(const std::string& from, const Frame& frame) = 0;
  virtual void on_link_up(const std::string& peer) = 0;
  virtual void on_link_down(const std::string& peer) = 0;
};

}  // namespace offload
