#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>

#include "offload/core/types.hpp"

namespace offload {

inline constexpr std::uint8_t kWireVersion = 0x01;
// Frames larger than this are rejected by the decoder.
inline constexpr std::uint32_t kMaxFrameBytes = 64u << 20;

enum class MessageKind : std::uint8_t {
  STEAL_REQ = 1,
  STEAL_RESP = 2,
  TASK_TRANSFER = 3,
  DATA_PULL = 4,
  DATA_PUSH = 5,
  RESULT_RETURN = 6,
  ABANDON = 7,
  HELLO = 8,
  STATUS = 9,
};

std::string to_string(MessageKind kind);
// Throws ProtocolError for an unknown kind byte.
MessageKind message_kind_from_byte(std::uint8_t b);

struct Frame {
  MessageKind kind = MessageKind::HELLO;
  Bytes payload;

  bool operator==(const Frame&) const = default;
};

// [length:4 BE][version:1][kind:1][payload], length = 2 + payload size.
Bytes encode_frame(const Frame& frame);
// Decodes exactly one complete frame. Throws ProtocolError.
Frame decode_frame(std::span<const std::uint8_t> wire);
// Size of the encoded frame.
inline std::size_t frame_size(const Frame& f) { return 6 + f.payload.size(); }

// Incremental decoder for a byte stream.
class FrameDecoder {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  // Next complete frame, if any. Throws ProtocolError on a malformed header.
  std::optional<Frame> next();
  std::size_t buffered() const { return buf_.size(); }

 private:
  Bytes buf_;
};

}  // namespace offload
