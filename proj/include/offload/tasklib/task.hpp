#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "offload/core/types.hpp"

namespace offload {

enum class ResultStatus : std::uint8_t { pending = 0, finish = 1, fail = 2 };

std::string to_string(ResultStatus status);

struct TaskStateBlob {
  Bytes payload;
  ResultStatus status = ResultStatus::pending;

  bool operator==(const TaskStateBlob&) const = default;
};

// 4-byte big-endian payload length, status byte, payload.
Bytes encode_blob(const TaskStateBlob& blob);
TaskStateBlob decode_blob(std::span<const std::uint8_t> wire);

enum class TaskTarget { android_only, generic };

// Hook names recorded in order; transfers appear as "transfer:client->server" etc.
using Transcript = std::vector<std::string>;

// Lifecycle hooks of a remotable task. An empty load_data/update_data is a
// no-op and causes no data transfer when run remotely.
struct LifecycleHooks {
  std::function<void(Bytes& state)> pre_execution;
  std::function<void(Bytes& state, std::span<const std::uint8_t> client_data)> load_data;
  std::function<void(Bytes& state)> execution;
  std::function<Bytes(const Bytes& state)> update_data;
  std::function<void(Bytes& state)> post_execution;
};

// One instance of a task class: its initial state and the client-side data it reads.
struct TaskInstance {
  TaskInstanceId id;
  Bytes initial_state;
  Bytes client_data;
};

struct InstanceParams {
  std::uint64_t sequence = 0;
  std::uint64_t payload_bytes = 0;
  double work_s = 0.0;  // reference execution time on a cpu_score 1.0 device
  std::uint64_t seed = 0;
};

struct RemotableTaskSpec {
  TaskClassId class_id;
  TaskTarget target = TaskTarget::generic;
  LifecycleHooks hooks;
  // Reference work (seconds at cpu_score 1.0) encoded in an initial state. Drives simulated time.
  std::function<double(const Bytes& state)> work_s;
  // Builds instances for workload generation; optional.
  std::function<TaskInstance(const InstanceParams&)> make_instance;
};

class TaskRegistry {
 public:
  // Throws DuplicateClass.
  void register_task_class(RemotableTaskSpec spec);
  // Throws UnknownClass.
  const RemotableTaskSpec& get(const TaskClassId& id) const;
  bool contains(const TaskClassId& id) const { return specs_.contains(id); }
  std::vector<TaskClassId> classes() const;

  TaskInstance instantiate(const TaskClassId& id, const InstanceParams& params) const;

 private:
  std::map<TaskClassId, RemotableTaskSpec> specs_;
};

// Stand-in for the client's file system: data each instance loads and updates.
class ClientDataStore {
 public:
  void put(const TaskInstanceId& id, Bytes data) { data_[id] = std::move(data); }
  const Bytes& read(const TaskInstanceId& id) const;
  void write(const TaskInstanceId& id, Bytes data) { data_[id] = std::move(data); }
  bool contains(const TaskInstanceId& id) const { return data_.contains(id); }

 private:
  std::map<TaskInstanceId, Bytes> data_;
};

using ResultListener = std::function<void(const TaskInstanceId&, const TaskStateBlob&)>;

// Runs all five hooks on the client. A throwing hook yields status fail.
TaskStateBlob run_lifecycle_local(const TaskRegistry& registry, const TaskInstance& instance,
                                  ClientDataStore& store, const ResultListener& listener = {},
                                  Transcript* transcript = nullptr);

struct RemoteBodyResult {
  TaskStateBlob blob;             // status finish or fail
  std::optional<Bytes> data_out;  // set when update_data ran and produced client data
};

// The lifecycle split into the parts that run on each side of an offload.
class RemoteLifecycle {
 public:
  explicit RemoteLifecycle(const RemotableTaskSpec& spec) : spec_(&spec) {}

  // pre_execution on the client. Returns false if the hook threw.
  bool client_prologue(Bytes& state, Transcript* transcript = nullptr) const;
  bool pulls_client_data() const { return static_cast<bool>(spec_->hooks.load_data); }
  bool pushes_client_data() const { return static_cast<bool>(spec_->hooks.update_data); }
  // load_data + execution + update_data, run on the server.
  RemoteBodyResult remote_body(Bytes state, std::span<const std::uint8_t> client_data,
                               Transcript* transcript = nullptr) const;
  // post_execution on the client after a successful remote body.
  TaskStateBlob client_epilogue(Bytes state, Transcript* transcript = nullptr) const;

 private:
  const RemotableTaskSpec* spec_;
};

RemoteLifecycle split_lifecycle_remote(const TaskRegistry& registry, const TaskClassId& id);

// Executes the split lifecycle in-process, marshalling data the way an offload
// would. Returns the final blob; on remote failure falls back to a local run.
TaskStateBlob run_lifecycle_split(const TaskRegistry& registry, const TaskInstance& instance,
                                  ClientDataStore& store, const ResultListener& listener = {},
                                  Transcript* transcript = nullptr);

}  // namespace offload
