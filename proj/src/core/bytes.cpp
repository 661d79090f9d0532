#include "offload/core/bytes.hpp"

#include <bit>
#include <cstring>

#include "offload/core/error.hpp"

namespace offload {

void ByteWriter::u32(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> shift));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> shift));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  buf_.insert(buf_.end(), s.begin(), s.end());
}

void ByteWriter::bytes(std::span<const std::uint8_t> b) {
  u32(static_cast<std::uint32_t>(b.size()));
  raw(b);
}

void ByteReader::need(std::size_t n) const {
  if (remaining() < n) {
    throw Error(ErrorCode::ProtocolError, "truncated input: need " + std::to_string(n) +
                                              " bytes, have " + std::to_string(remaining()));
  }
}

std::uint8_t ByteReader::u8() {
  need(1);
  return data_[pos_++];
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | data_[pos_++];
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | data_[pos_++];
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::str() {
  const auto n = u32();
  auto span = raw(n);
  return std::string(span.begin(), span.end());
}

Bytes ByteReader::bytes() {
  const auto n = u32();
  auto span = raw(n);
  return Bytes(span.begin(), span.end());
}

std::span<const std::uint8_t> ByteReader::raw(std::size_t n) {
  need(n);
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

void ByteReader::expect_done() const {
  if (!done()) {
    throw Error(ErrorCode::ProtocolError, std::to_string(remaining()) + " trailing bytes");
  }
}

}  // namespace offload
