#include "offload/protocol/wire.hpp"

#include "offload/core/bytes.hpp"
#include "offload/core/error.hpp"

namespace offload {

std::string to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::STEAL_REQ: return "STEAL_REQ";
    case MessageKind::STEAL_RESP: return "STEAL_RESP";
    case MessageKind::TASK_TRANSFER: return "TASK_TRANSFER";
    case MessageKind::DATA_PULL: return "DATA_PULL";
    case MessageKind::DATA_PUSH: return "DATA_PUSH";
    case MessageKind::RESULT_RETURN: return "RESULT_RETURN";
    case MessageKind::ABANDON: return "ABANDON";
    case MessageKind::HELLO: return "HELLO";
    case MessageKind::STATUS: return "STATUS";
  }
  return "UNKNOWN";
}

MessageKind message_kind_from_byte(std::uint8_t b) {
  if (b < 1 || b > 9) throw Error(ErrorCode::ProtocolError, "unknown message kind " + std::to_string(b));
  return static_cast<MessageKind>(b);
}

Bytes encode_frame(const Frame& frame) {
  if (frame.payload.size() + 2 > kMaxFrameBytes) {
    throw Error(ErrorCode::ProtocolError, "frame payload too large");
  }
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(frame.payload.size() + 2));
  w.u8(kWireVersion);
  w.u8(static_cast<std::uint8_t>(frame.kind));
  w.raw(frame.payload);
  return std::move(w).take();
}

namespace {

// Validates the 6-byte header; returns the total frame size.
std::size_t check_header(std::span<const std::uint8_t> head) {
  ByteReader r(head);
  const auto length = r.u32();
  if (length < 2 || length > kMaxFrameBytes) {
    throw Error(ErrorCode::ProtocolError, "bad frame length " + std::to_string(length));
  }
  const auto version = r.u8();
  if (version != kWireVersion) {
    throw Error(ErrorCode::ProtocolError, "unsupported wire version " + std::to_string(version));
  }
  message_kind_from_byte(r.u8());
  return 4 + static_cast<std::size_t>(length);
}

}  // namespace

Frame decode_frame(std::span<const std::uint8_t> wire) {
  if (wire.size() < 6) throw Error(ErrorCode::ProtocolError, "frame shorter than header");
  const auto total = check_header(wire.first(6));
  if (total != wire.size()) {
    throw Error(ErrorCode::ProtocolError, "frame length does not match data");
  }
  return Frame{static_cast<MessageKind>(wire[5]), Bytes(wire.begin() + 6, wire.end())};
}

void FrameDecoder::feed(std::span<const std::uint8_t> bytes) {
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<Frame> FrameDecoder::next() {
  if (buf_.size() < 6) return std::nullopt;
  const auto total = check_header(std::span(buf_).first(6));
  if (buf_.size() < total) return std::nullopt;
  Frame f{static_cast<MessageKind>(buf_[5]), Bytes(buf_.begin() + 6, buf_.begin() + static_cast<long>(total))};
  buf_.erase(buf_.begin(), buf_.begin() + static_cast<long>(total));
  return f;
}

}  // namespace offload
