#pragma once

#include <cstdint>
#include <string_view>

#include "rune/tensor.hpp"

namespace rune {

/// Wire encodings for tensors crossing the host/guest boundary.
///
/// FIXED:  dtype u8 | rank u8 | dims (u32 LE each) | raw payload
/// VARINT: protobuf-style records, always in this order:
///           0x08 dtype (varint)
///           0x12 len (varint) packed dims (varint each)
///           0x1A len (varint) payload bytes
enum class Codec : std::uint8_t { Fixed = 0, Varint = 1 };

std::string_view to_string(Codec codec) noexcept;

Bytes encode_tensor(const Tensor& t, Codec codec);
/// Encodes into `out`, replacing its contents. Reuses the allocation.
void encode_tensor(const Tensor& t, Codec codec, Bytes& out);

/// Inverse of encode_tensor. The whole input must be consumed.
/// Throws Malformed with the failing offset.
Tensor decode_tensor(ByteView bytes, Codec codec);

/// Base-128 varint, least-significant group first.
void append_varint(std::uint32_t value, Bytes& out);
/// Reads one canonical varint of at most 5 bytes that fits in u32.
std::uint32_t read_varint(ByteReader& in);

}  // namespace rune
