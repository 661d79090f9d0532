#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "offload/core/types.hpp"
#include "offload/tasklib/task.hpp"

namespace offload {

// One row of the offloaded-code table.
struct OffloadRecord {
  TaskInstanceId id;
  bool offloaded = true;
  std::string server;
  bool returned = false;
  ResultStatus result = ResultStatus::pending;
  // Outcome of the local re-execution after the link to the server was lost.
  std::optional<ResultStatus> local_result;

  bool operator==(const OffloadRecord&) const = default;
};

// Tab-separated row: sequence (4 digits), offloaded, server, returned, result
// (blank while pending), e.g. "0001\ttrue\t192.168.49.1\ttrue\tfinish".
std::string format_row(const OffloadRecord& record);

// Client-side ledger of offloaded tasks. Optionally mirrors every change to an
// append-only log file.
class OffloadTable {
 public:
  OffloadTable() = default;
  explicit OffloadTable(std::filesystem::path log_file);

  // Step 1 of an offload. Throws DuplicateTask.
  const OffloadRecord& record_offload(const TaskInstanceId& id, const std::string& server);
  // Drops a row whose transfer never started.
  void erase(const TaskInstanceId& id);
  // Result came back. Throws NotFound.
  void mark_returned(const TaskInstanceId& id, ResultStatus result);
  void set_local_result(const TaskInstanceId& id, ResultStatus result);

  const OffloadRecord* find(const TaskInstanceId& id) const;
  std::vector<OffloadRecord> rows() const;
  std::size_t size() const { return rows_.size(); }

  // Checks returned => offloaded and a final result => returned for every row.
  bool consistent() const;

 private:
  void log(const char* action, const OffloadRecord& record);

  std::map<TaskInstanceId, OffloadRecord> rows_;
  std::unique_ptr<std::ofstream> log_;
};

enum class RemoteState { transferring, executing, returning, done, failed_remote, link_lost };

std::string to_string(RemoteState state);
bool legal_transition(RemoteState from, RemoteState to);

// Client-side view of one task executing on a server.
class RemoteExecution {
 public:
  RemoteExecution(TaskInstanceId id, std::string server)
      : id_(std::move(id)), server_(std::move(server)) {}

  const TaskInstanceId& id() const { return id_; }
  const std::string& server() const { return server_; }
  RemoteState state() const { return state_; }
  bool terminal() const;

  // Throws ProtocolError on an illegal transition.
  void advance(RemoteState next);

 private:
  TaskInstanceId id_;
  std::string server_;
  RemoteState state_ = RemoteState::transferring;
};

}  // namespace offload
