#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rune/error.hpp"

namespace rune {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Append-only little-endian writer.
class ByteWriter {
 public:
  ByteWriter() = default;
  explicit ByteWriter(Bytes& sink) : out_(&sink) {}

  void u8(std::uint8_t v) { buf().push_back(v); }
  void u16(std::uint16_t v) { put_le(v, 2); }
  void u32(std::uint32_t v) { put_le(v, 4); }
  void u64(std::uint64_t v) { put_le(v, 8); }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void raw(ByteView bytes) { buf().insert(buf().end(), bytes.begin(), bytes.end()); }
  void raw(std::string_view s) { buf().insert(buf().end(), s.begin(), s.end()); }
  /// u16 length prefix followed by the bytes.
  void str16(std::string_view s);

  std::size_t size() const { return out_ ? out_->size() : own_.size(); }
  Bytes take() { return std::move(own_); }
  Bytes& bytes() { return buf(); }

 private:
  Bytes& buf() { return out_ ? *out_ : own_; }
  void put_le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf().push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  Bytes own_;
  Bytes* out_ = nullptr;
};

/// Bounds-checked little-endian reader. Short reads throw `short_read`
/// with the offending offset.
class ByteReader {
 public:
  explicit ByteReader(ByteView data, Errc short_read = Errc::Truncated)
      : data_(data), short_read_(short_read) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get_le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get_le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
  std::uint64_t u64() { return get_le(8); }
  float f32() {
    std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  ByteView raw(std::size_t n) {
    need(n);
    ByteView out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::string str16() {
    std::uint16_t n = u16();
    ByteView b = raw(n);
    return std::string(b.begin(), b.end());
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool at_end() const { return pos_ == data_.size(); }

  void need(std::size_t n) const {
    if (n > remaining()) fail_at(short_read_, pos_, "unexpected end of input");
  }

 private:
  std::uint64_t get_le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{data_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  ByteView data_;
  std::size_t pos_ = 0;
  Errc short_read_;
};

inline void ByteWriter::str16(std::string_view s) {
  if (s.size() > 0xFFFF) fail(Errc::InvalidArgument, "string too long for u16 length prefix");
  u16(static_cast<std::uint16_t>(s.size()));
  raw(s);
}

/// CRC-32 (IEEE 802.3 polynomial, as used by zlib and PNG).
std::uint32_t crc32(ByteView data) noexcept;
/// Continues a CRC: crc32(b, crc32(a)) == crc32(a + b).
std::uint32_t crc32(ByteView data, std::uint32_t running) noexcept;

}  // namespace rune
