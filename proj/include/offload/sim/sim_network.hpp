#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "offload/protocol/environment.hpp"
#include "offload/sim/event_engine.hpp"

namespace offload::sim {

// Collects trace lines as JSON objects {time_s, device, event_kind, detail}.
class TraceWriter {
 public:
  explicit TraceWriter(bool keep = true) : keep_(keep) {}
  void write(double t_s, const std::string& device, std::string_view kind, TraceDetail detail);
  const std::vector<std::string>& lines() const { return lines_; }
  // Count of lines whose time ran backwards.
  std::size_t ordering_violations() const { return violations_; }

 private:
  bool keep_;
  double last_t_ = 0.0;
  std::size_t violations_ = 0;
  std::vector<std::string> lines_;
};

// Constant-power interval of one device.
struct PowerSegment {
  double start_s = 0.0;
  double end_s = 0.0;
  double power_w = 0.0;
  double cpu_load = 0.0;
};

// Integrates the piecewise-constant power of one device and attributes the
// energy above idle to the task that caused it.
class PowerMeter {
 public:
  explicit PowerMeter(DeviceModel model) : model_(std::move(model)) {}

  void set_activity(double t_s, double activity, const std::optional<TaskInstanceId>& owner);
  void add_transfer(double t_s, const std::optional<TaskInstanceId>& owner);
  void remove_transfer(double t_s, const std::optional<TaskInstanceId>& owner);
  // Discards everything before t_s and starts recording.
  void start_window(double t_s);
  void close(double t_s);

  const DeviceModel& model() const { return model_; }
  double power_now() const;
  const std::vector<PowerSegment>& segments() const { return segments_; }
  const std::map<TaskInstanceId, double>& task_energy_j() const { return task_energy_; }
  double idle_energy_j() const { return idle_energy_; }
  // Radio energy of frames not tied to a task.
  double control_energy_j() const { return control_energy_; }
  double consumed_j() const { return consumed_; }

 private:
  void advance(double t_s);

  DeviceModel model_;
  bool recording_ = false;
  double last_s_ = 0.0;
  double activity_ = 0.0;
  std::optional<TaskInstanceId> activity_owner_;
  std::multiset<std::optional<TaskInstanceId>> transfers_;
  std::vector<PowerSegment> segments_;
  std::map<TaskInstanceId, double> task_energy_;
  double idle_energy_ = 0.0;
  double control_energy_ = 0.0;
  double consumed_ = 0.0;  // whole run, for battery accounting
};

class SimNetwork;

// Environment of one simulated device.
class SimEnvironment : public Environment {
 public:
  SimEnvironment(SimNetwork& net, std::string device_id) : net_(net), device_(std::move(device_id)) {}

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
  SimNetwork& net_;
  std::string device_;
  std::map<ComputeId, EventId> computes_;
  ComputeId next_compute_ = 1;
};

// Devices joined by point-to-point links. Each direction of a link sends
// frames one at a time (serialization 8*size/throughput) followed by the
// propagation latency. Frames in flight when a link drops are lost.
class SimNetwork {
 public:
  SimNetwork(EventEngine& engine, TraceWriter& trace) : engine_(engine), trace_(trace) {}

  SimEnvironment& add_device(const DeviceModel& model);
  void set_handler(const std::string& device_id, PeerHandler* handler);
  void add_link(const std::string& a, const std::string& b, const LinkModel& link);
  // Changes link state now and notifies both ends.
  void set_link_up(const std::string& a, const std::string& b, bool up);
  bool link_up(const std::string& a, const std::string& b) const;

  EventEngine& engine() { return engine_; }
  TraceWriter& tracer() { return trace_; }
  SimEnvironment& env(const std::string& device_id);
  PowerMeter& meter(const std::string& device_id);
  const PowerMeter& meter(const std::string& device_id) const;
  std::vector<std::string> device_ids() const;
  std::size_t frames_dropped() const { return dropped_; }

  bool transmit(const std::string& from, const std::string& to, const Frame& frame,
                const std::optional<TaskInstanceId>& owner, std::function<void(double)> on_sent);

 private:
  struct Device {
    std::unique_ptr<SimEnvironment> env;
    std::unique_ptr<PowerMeter> meter;
    PeerHandler* handler = nullptr;
  };
  struct Link {
    LinkModel model;
    std::uint64_t epoch = 0;
    std::map<std::string, double> busy_until;  // keyed by sender
  };
  using LinkKey = std::pair<std::string, std::string>;
  static LinkKey key(const std::string& a, const std::string& b);
  Link& link(const std::string& a, const std::string& b);

  EventEngine& engine_;
  TraceWriter& trace_;
  std::map<std::string, Device> devices_;
  std::map<LinkKey, Link> links_;
  std::size_t dropped_ = 0;
};

}  // namespace offload::sim
