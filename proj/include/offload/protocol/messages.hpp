#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "offload/core/types.hpp"
#include "offload/profiler/profiler.hpp"
#include "offload/protocol/wire.hpp"
#include "offload/tasklib/task.hpp"

namespace offload {

// Payload layouts. Strings and byte arrays are u32-length-prefixed, integers
// and doubles big-endian; instance ids are (class string, u64 sequence).

struct HelloMsg {
  std::string device_id;
  DeviceKind kind = DeviceKind::generic_server;
  double cpu_score = 1.0;
  bool operator==(const HelloMsg&) const = default;
};

struct StatusMsg {
  DeviceStatus status;
  bool operator==(const StatusMsg&) const = default;
};

struct StealReqMsg {
  std::uint32_t capacity = 1;
  bool operator==(const StealReqMsg&) const = default;
};

struct StealRespMsg {
  std::vector<TaskInstanceId> granted;
  bool operator==(const StealRespMsg&) const = default;
};

struct TaskTransferMsg {
  TaskInstanceId id;
  double client_exec_time_s = 0.0;  // profiled T on the client, for the server's run estimate
  Bytes state;                      // task state after pre_execution
  bool operator==(const TaskTransferMsg&) const = default;
};

struct DataPullMsg {
  TaskInstanceId id;
  bool operator==(const DataPullMsg&) const = default;
};

struct DataPushMsg {
  TaskInstanceId id;
  Bytes data;
  bool operator==(const DataPushMsg&) const = default;
};

struct ResultReturnMsg {
  TaskInstanceId id;
  TaskStateBlob blob;
  bool operator==(const ResultReturnMsg&) const = default;
};

struct AbandonMsg {
  TaskInstanceId id;
  bool operator==(const AbandonMsg&) const = default;
};

Frame to_frame(const HelloMsg& m);
Frame to_frame(const StatusMsg& m);
Frame to_frame(const StealReqMsg& m);
Frame to_frame(const StealRespMsg& m);
Frame to_frame(const TaskTransferMsg& m);
Frame to_frame(const DataPullMsg& m);
Frame to_frame(const DataPushMsg& m);
Frame to_frame(const ResultReturnMsg& m);
Frame to_frame(const AbandonMsg& m);

// Each throws ProtocolError when the frame kind or payload does not match.
HelloMsg parse_hello(const Frame& f);
StatusMsg parse_status(const Frame& f);
StealReqMsg parse_steal_req(const Frame& f);
StealRespMsg parse_steal_resp(const Frame& f);
TaskTransferMsg parse_task_transfer(const Frame& f);
DataPullMsg parse_data_pull(const Frame& f);
DataPushMsg parse_data_push(const Frame& f);
ResultReturnMsg parse_result_return(const Frame& f);
AbandonMsg parse_abandon(const Frame& f);

// Instance id carried by a task-scoped message, if any.
std::optional<TaskInstanceId> frame_task_id(const Frame& f);

}  // namespace offload
