#include "offload/protocol/messages.hpp"

#include "offload/core/bytes.hpp"
#include "offload/core/error.hpp"

namespace offload {

namespace {

void write_id(ByteWriter& w, const TaskInstanceId& id) {
  w.str(id.class_id.str());
  w.u64(id.sequence);
}

TaskInstanceId read_id(ByteReader& r) {
  TaskInstanceId id;
  id.class_id = TaskClassId::parse(r.str());
  id.sequence = r.u64();
  return id;
}

ByteReader reader_for(const Frame& f, MessageKind expected) {
  if (f.kind != expected) {
    throw Error(ErrorCode::ProtocolError, "expected " + to_string(expected) + ", got " + to_string(f.kind));
  }
  return ByteReader(f.payload);
}

Frame finish(MessageKind kind, ByteWriter&& w) { return Frame{kind, std::move(w).take()}; }

template <typename Fn>
auto parse_checked(const Frame& f, MessageKind kind, Fn&& fn) {
  auto r = reader_for(f, kind);
  try {
    auto out = fn(r);
    r.expect_done();
    return out;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ProtocolError) throw;
    throw Error(ErrorCode::ProtocolError, to_string(kind) + ": " + e.what());
  }
}

Frame id_only(MessageKind kind, const TaskInstanceId& id) {
  ByteWriter w;
  write_id(w, id);
  return finish(kind, std::move(w));
}

}  // namespace

Frame to_frame(const HelloMsg& m) {
  ByteWriter w;
  w.str(m.device_id);
  w.u8(static_cast<std::uint8_t>(m.kind));
  w.f64(m.cpu_score);
  return finish(MessageKind::HELLO, std::move(w));
}

HelloMsg parse_hello(const Frame& f) {
  return parse_checked(f, MessageKind::HELLO, [](ByteReader& r) {
    HelloMsg m;
    m.device_id = r.str();
    const auto kind = r.u8();
    if (kind > 2) throw Error(ErrorCode::ProtocolError, "bad device kind");
    m.kind = static_cast<DeviceKind>(kind);
    m.cpu_score = r.f64();
    return m;
  });
}

Frame to_frame(const StatusMsg& m) {
  const auto& s = m.status;
  ByteWriter w;
  w.str(s.device_id);
  w.f64(s.battery_level);
  w.u8(s.charging ? 1 : 0);
  w.f64(s.cpu_load);
  w.u8(s.link_up ? 1 : 0);
  w.f64(s.measured_throughput_bps);
  w.f64(s.timestamp_s);
  return finish(MessageKind::STATUS, std::move(w));
}

StatusMsg parse_status(const Frame& f) {
  return parse_checked(f, MessageKind::STATUS, [](ByteReader& r) {
    StatusMsg m;
    auto& s = m.status;
    s.device_id = r.str();
    s.battery_level = r.f64();
    s.charging = r.u8() != 0;
    s.cpu_load = r.f64();
    s.link_up = r.u8() != 0;
    s.measured_throughput_bps = r.f64();
    s.timestamp_s = r.f64();
    return m;
  });
}

Frame to_frame(const StealReqMsg& m) {
  ByteWriter w;
  w.u32(m.capacity);
  return finish(MessageKind::STEAL_REQ, std::move(w));
}

StealReqMsg parse_steal_req(const Frame& f) {
  return parse_checked(f, MessageKind::STEAL_REQ, [](ByteReader& r) {
    StealReqMsg m{r.u32()};
    if (m.capacity == 0) throw Error(ErrorCode::ProtocolError, "steal capacity must be >= 1");
    return m;
  });
}

Frame to_frame(const StealRespMsg& m) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(m.granted.size()));
  for (const auto& id : m.granted) write_id(w, id);
  return finish(MessageKind::STEAL_RESP, std::move(w));
}

StealRespMsg parse_steal_resp(const Frame& f) {
  return parse_checked(f, MessageKind::STEAL_RESP, [](ByteReader& r) {
    StealRespMsg m;
    const auto n = r.u32();
    if (n > r.remaining() / 12) throw Error(ErrorCode::ProtocolError, "steal response count exceeds data");
    for (std::uint32_t i = 0; i < n; ++i) m.granted.push_back(read_id(r));
    return m;
  });
}

Frame to_frame(const TaskTransferMsg& m) {
  ByteWriter w;
  write_id(w, m.id);
  w.f64(m.client_exec_time_s);
  w.bytes(m.state);
  return finish(MessageKind::TASK_TRANSFER, std::move(w));
}

TaskTransferMsg parse_task_transfer(const Frame& f) {
  return parse_checked(f, MessageKind::TASK_TRANSFER, [](ByteReader& r) {
    TaskTransferMsg m;
    m.id = read_id(r);
    m.client_exec_time_s = r.f64();
    m.state = r.bytes();
    return m;
  });
}

Frame to_frame(const DataPullMsg& m) { return id_only(MessageKind::DATA_PULL, m.id); }

DataPullMsg parse_data_pull(const Frame& f) {
  return parse_checked(f, MessageKind::DATA_PULL, [](ByteReader& r) { return DataPullMsg{read_id(r)}; });
}

Frame to_frame(const DataPushMsg& m) {
  ByteWriter w;
  write_id(w, m.id);
  w.bytes(m.data);
  return finish(MessageKind::DATA_PUSH, std::move(w));
}

DataPushMsg parse_data_push(const Frame& f) {
  return parse_checked(f, MessageKind::DATA_PUSH, [](ByteReader& r) {
    DataPushMsg m;
    m.id = read_id(r);
    m.data = r.bytes();
    return m;
  });
}

Frame to_frame(const ResultReturnMsg& m) {
  ByteWriter w;
  write_id(w, m.id);
  w.raw(encode_blob(m.blob));
  return finish(MessageKind::RESULT_RETURN, std::move(w));
}

ResultReturnMsg parse_result_return(const Frame& f) {
  return parse_checked(f, MessageKind::RESULT_RETURN, [](ByteReader& r) {
    ResultReturnMsg m;
    m.id = read_id(r);
    m.blob = decode_blob(r.raw(r.remaining()));
    return m;
  });
}

Frame to_frame(const AbandonMsg& m) { return id_only(MessageKind::ABANDON, m.id); }

AbandonMsg parse_abandon(const Frame& f) {
  return parse_checked(f, MessageKind::ABANDON, [](ByteReader& r) { return AbandonMsg{read_id(r)}; });
}

std::optional<TaskInstanceId> frame_task_id(const Frame& f) {
  switch (f.kind) {
    case MessageKind::TASK_TRANSFER:
    case MessageKind::DATA_PULL:
    case MessageKind::DATA_PUSH:
    case MessageKind::RESULT_RETURN:
    case MessageKind::ABANDON: {
      ByteReader r(f.payload);
      return read_id(r);
    }
    default:
      return std::nullopt;
  }
}

}  // namespace offload
