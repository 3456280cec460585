#include "rune/codec.hpp"

#include <limits>

namespace rune {
namespace {

constexpr std::uint8_t kTagDType = 0x08;    // field 1, varint
constexpr std::uint8_t kTagDims = 0x12;     // field 2, length-delimited
constexpr std::uint8_t kTagPayload = 0x1A;  // field 3, length-delimited

std::size_t varint_size(std::uint32_t v) {
  std::size_t n = 1;
  while (v >= 0x80) {
    v >>= 7;
    ++n;
  }
  return n;
}

void expect_tag(ByteReader& in, std::uint8_t tag) {
  std::size_t at = in.position();
  if (in.u8() != tag) fail_at(Errc::Malformed, at, "unexpected record tag");
}

// Validates header fields and returns the payload size implied by dims.
std::size_t checked_payload_size(DType dtype, const Shape& dims, std::size_t at) {
  if (dims.empty()) fail_at(Errc::Malformed, at, "tensor rank must be >= 1");
  std::size_t n = element_size(dtype);
  for (auto d : dims) {
    if (d == 0) fail_at(Errc::Malformed, at, "tensor dim of zero");
    if (n > std::numeric_limits<std::size_t>::max() / d) fail_at(Errc::Malformed, at, "tensor size overflows");
    n *= d;
  }
  return n;
}

void encode_fixed(const Tensor& t, Bytes& out) {
  out.reserve(2 + 4 * t.rank() + t.byte_size());
  ByteWriter w(out);
  w.u8(static_cast<std::uint8_t>(t.dtype()));
  w.u8(static_cast<std::uint8_t>(t.rank()));
  for (auto d : t.dims()) w.u32(d);
  w.raw(t.payload());
}

void encode_varint(const Tensor& t, Bytes& out) {
  std::size_t dims_len = 0;
  for (auto d : t.dims()) dims_len += varint_size(d);
  if (t.byte_size() > std::numeric_limits<std::uint32_t>::max()) {
    fail(Errc::InvalidArgument, "payload too large for VARINT codec");
  }
  out.push_back(kTagDType);
  append_varint(static_cast<std::uint32_t>(t.dtype()), out);
  out.push_back(kTagDims);
  append_varint(static_cast<std::uint32_t>(dims_len), out);
  for (auto d : t.dims()) append_varint(d, out);
  out.push_back(kTagPayload);
  append_varint(static_cast<std::uint32_t>(t.byte_size()), out);
  out.insert(out.end(), t.payload().begin(), t.payload().end());
}

Tensor decode_fixed(ByteView bytes) {
  ByteReader in(bytes, Errc::Malformed);
  std::size_t at = in.position();
  std::uint8_t raw_dtype = in.u8();
  if (!is_valid_dtype(raw_dtype)) fail_at(Errc::Malformed, at, "unknown dtype");
  auto dtype = static_cast<DType>(raw_dtype);
  std::uint8_t rank = in.u8();
  Shape dims(rank);
  for (auto& d : dims) d = in.u32();
  std::size_t n = checked_payload_size(dtype, dims, in.position());
  ByteView payload = in.raw(n);
  if (!in.at_end()) fail_at(Errc::Malformed, in.position(), "trailing bytes after payload");
  return Tensor(dtype, std::move(dims), Bytes(payload.begin(), payload.end()));
}

Tensor decode_varint(ByteView bytes) {
  ByteReader in(bytes, Errc::Malformed);
  expect_tag(in, kTagDType);
  std::size_t at = in.position();
  std::uint32_t raw_dtype = read_varint(in);
  if (raw_dtype > 0xFF || !is_valid_dtype(static_cast<std::uint8_t>(raw_dtype))) {
    fail_at(Errc::Malformed, at, "unknown dtype");
  }
  auto dtype = static_cast<DType>(raw_dtype);

  expect_tag(in, kTagDims);
  std::uint32_t dims_len = read_varint(in);
  at = in.position();
  ByteReader dims_in(in.raw(dims_len), Errc::Malformed);
  Shape dims;
  while (!dims_in.at_end()) {
    if (dims.size() == 255) fail_at(Errc::Malformed, at, "tensor rank exceeds 255");
    dims.push_back(read_varint(dims_in));
  }

  expect_tag(in, kTagPayload);
  std::uint32_t payload_len = read_varint(in);
  at = in.position();
  std::size_t n = checked_payload_size(dtype, dims, at);
  if (payload_len != n) fail_at(Errc::Malformed, at, "payload length disagrees with dims");
  ByteView payload = in.raw(n);
  if (!in.at_end()) fail_at(Errc::Malformed, in.position(), "trailing bytes after payload");
  return Tensor(dtype, std::move(dims), Bytes(payload.begin(), payload.end()));
}

}  // namespace

std::string_view to_string(Codec codec) noexcept {
  return codec == Codec::Fixed ? "FIXED" : "VARINT";
}

void append_varint(std::uint32_t value, Bytes& out) {
  while (value >= 0x80) {
    out.push_back(static_cast<std::uint8_t>(value | 0x80));
    value >>= 7;
  }
  out.push_back(static_cast<std::uint8_t>(value));
}

std::uint32_t read_varint(ByteReader& in) {
  std::size_t start = in.position();
  std::uint32_t value = 0;
  for (int i = 0; i < 5; ++i) {
    std::uint8_t b = in.u8();
    if (i == 4 && b > 0x0F) fail_at(Errc::Malformed, start, "varint overflows u32");
    value |= std::uint32_t{b & 0x7Fu} << (7 * i);
    if ((b & 0x80) == 0) {
      if (b == 0 && i > 0) fail_at(Errc::Malformed, start, "overlong varint");
      return value;
    }
  }
  fail_at(Errc::Malformed, start, "varint longer than 5 bytes");
}

Bytes encode_tensor(const Tensor& t, Codec codec) {
  Bytes out;
  encode_tensor(t, codec, out);
  return out;
}

void encode_tensor(const Tensor& t, Codec codec, Bytes& out) {
  out.clear();
  if (codec == Codec::Fixed) {
    encode_fixed(t, out);
  } else {
    encode_varint(t, out);
  }
}

Tensor decode_tensor(ByteView bytes, Codec codec) {
  return codec == Codec::Fixed ? decode_fixed(bytes) : decode_varint(bytes);
}

}  // namespace rune
