#include "offload/tasklib/task.hpp"

#include "offload/core/bytes.hpp"
#include "offload/core/error.hpp"

namespace offload {

namespace {

void note(Transcript* transcript, const char* event) {
  if (transcript) transcript->emplace_back(event);
}

const Bytes& empty_bytes() {
  static const Bytes empty;
  return empty;
}

}  // namespace

std::string to_string(ResultStatus status) {
  switch (status) {
    case ResultStatus::pending: return "pending";
    case ResultStatus::finish: return "finish";
    case ResultStatus::fail: return "fail";
  }
  return "pending";
}

Bytes encode_blob(const TaskStateBlob& blob) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(blob.payload.size()));
  w.u8(static_cast<std::uint8_t>(blob.status));
  w.raw(blob.payload);
  return std::move(w).take();
}

TaskStateBlob decode_blob(std::span<const std::uint8_t> wire) {
  ByteReader r(wire);
  const auto len = r.u32();
  const auto status = r.u8();
  if (status > 2) throw Error(ErrorCode::ProtocolError, "bad blob status " + std::to_string(status));
  auto payload = r.raw(len);
  r.expect_done();
  return {Bytes(payload.begin(), payload.end()), static_cast<ResultStatus>(status)};
}

void TaskRegistry::register_task_class(RemotableTaskSpec spec) {
  if (specs_.contains(spec.class_id)) {
    throw Error(ErrorCode::DuplicateClass, spec.class_id.str());
  }
  auto id = spec.class_id;
  specs_.emplace(std::move(id), std::move(spec));
}

const RemotableTaskSpec& TaskRegistry::get(const TaskClassId& id) const {
  auto it = specs_.find(id);
  if (it == specs_.end()) throw Error(ErrorCode::UnknownClass, id.str());
  return it->second;
}

std::vector<TaskClassId> TaskRegistry::classes() const {
  std::vector<TaskClassId> out;
  for (const auto& [id, _] : specs_) out.push_back(id);
  return out;
}

TaskInstance TaskRegistry::instantiate(const TaskClassId& id, const InstanceParams& params) const {
  const auto& spec = get(id);
  if (spec.make_instance) {
    auto instance = spec.make_instance(params);
    instance.id = {id, params.sequence};
    return instance;
  }
  return TaskInstance{{id, params.sequence}, {}, {}};
}

const Bytes& ClientDataStore::read(const TaskInstanceId& id) const {
  auto it = data_.find(id);
  return it == data_.end() ? empty_bytes() : it->second;
}

TaskStateBlob run_lifecycle_local(const TaskRegistry& registry, const TaskInstance& instance,
                                  ClientDataStore& store, const ResultListener& listener,
                                  Transcript* transcript) {
  const auto& hooks = registry.get(instance.id.class_id).hooks;
  TaskStateBlob blob{instance.initial_state, ResultStatus::finish};
  try {
    note(transcript, "pre_execution");
    if (hooks.pre_execution) hooks.pre_execution(blob.payload);
    note(transcript, "load_data");
    if (hooks.load_data) hooks.load_data(blob.payload, store.read(instance.id));
    note(transcript, "execution");
    if (hooks.execution) hooks.execution(blob.payload);
    note(transcript, "update_data");
    if (hooks.update_data) store.write(instance.id, hooks.update_data(blob.payload));
    note(transcript, "post_execution");
    if (hooks.post_execution) hooks.post_execution(blob.payload);
  } catch (const std::exception&) {
    blob.status = ResultStatus::fail;
  }
  if (listener) listener(instance.id, blob);
  return blob;
}

bool RemoteLifecycle::client_prologue(Bytes& state, Transcript* transcript) const {
  note(transcript, "pre_execution");
  try {
    if (spec_->hooks.pre_execution) spec_->hooks.pre_execution(state);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

RemoteBodyResult RemoteLifecycle::remote_body(Bytes state,
                                              std::span<const std::uint8_t> client_data,
                                              Transcript* transcript) const {
  const auto& hooks = spec_->hooks;
  RemoteBodyResult out{{std::move(state), ResultStatus::finish}, std::nullopt};
  try {
    note(transcript, "load_data");
    if (hooks.load_data) hooks.load_data(out.blob.payload, client_data);
    note(transcript, "execution");
    if (hooks.execution) hooks.execution(out.blob.payload);
    note(transcript, "update_data");
    if (hooks.update_data) out.data_out = hooks.update_data(out.blob.payload);
  } catch (const std::exception&) {
    out.blob.status = ResultStatus::fail;
    out.data_out.reset();
  }
  return out;
}

TaskStateBlob RemoteLifecycle::client_epilogue(Bytes state, Transcript* transcript) const {
  TaskStateBlob blob{std::move(state), ResultStatus::finish};
  note(transcript, "post_execution");
  try {
    if (spec_->hooks.post_execution) spec_->hooks.post_execution(blob.payload);
  } catch (const std::exception&) {
    blob.status = ResultStatus::fail;
  }
  return blob;
}

RemoteLifecycle split_lifecycle_remote(const TaskRegistry& registry, const TaskClassId& id) {
  return RemoteLifecycle(registry.get(id));
}

TaskStateBlob run_lifecycle_split(const TaskRegistry& registry, const TaskInstance& instance,
                                  ClientDataStore& store, const ResultListener& listener,
                                  Transcript* transcript) {
  const auto lifecycle = split_lifecycle_remote(registry, instance.id.class_id);
  Bytes state = instance.initial_state;
  if (!lifecycle.client_prologue(state, transcript)) {
    return run_lifecycle_local(registry, instance, store, listener, transcript);
  }
  note(transcript, "transfer:client->server:task");
  Bytes pulled;
  if (lifecycle.pulls_client_data()) {
    note(transcript, "transfer:client->server:data");
    pulled = store.read(instance.id);
  }
  auto body = lifecycle.remote_body(std::move(state), pulled, transcript);
  if (body.blob.status == ResultStatus::fail) {
    note(transcript, "transfer:server->client:result");
    return run_lifecycle_local(registry, instance, store, listener, transcript);
  }
  if (body.data_out) {
    note(transcript, "transfer:server->client:data");
    store.write(instance.id, std::move(*body.data_out));
  }
  note(transcript, "transfer:server->client:result");
  auto blob = lifecycle.client_epilogue(std::move(body.blob.payload), transcript);
  if (listener) listener(instance.id, blob);
  return blob;
}

}  // namespace offload
