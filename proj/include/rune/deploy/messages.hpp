#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "rune/bytes.hpp"
#include "rune/codec.hpp"
#include "rune/runicos.hpp"

// Payload layouts for the frames exchanged between hammer and a device.
// Every decoder requires the payload to be consumed exactly and throws
// ProtocolError otherwise.
namespace rune::deploy {

/// PONG: device name.
Bytes encode_pong(const std::string& name);
std::string decode_pong(ByteView payload);

/// IDENTIFY: protocol version u8.
Bytes encode_identify(std::uint8_t version);
std::uint8_t decode_identify(ByteView payload);

/// IDENTITY: fqdn str16 | name str16 | protocol version u8.
struct Identity {
  std::string fqdn;
  std::string name;
  std::uint8_t version = 0;
  friend bool operator==(const Identity&, const Identity&) = default;
};
Bytes encode_identity(const Identity& id);
Identity decode_identity(ByteView payload);

/// CAST_BEGIN: bundle size u32 | bundle CRC-32 u32.
struct CastBegin {
  std::uint32_t size = 0;
  std::uint32_t crc = 0;
  friend bool operator==(const CastBegin&, const CastBegin&) = default;
};
Bytes encode_cast_begin(const CastBegin& b);
CastBegin decode_cast_begin(ByteView payload);

/// CAST_CHUNK: offset u32 | up to kMaxChunk bundle bytes.
struct CastChunk {
  std::uint32_t offset = 0;
  Bytes data;
  friend bool operator==(const CastChunk&, const CastChunk&) = default;
};
Bytes encode_cast_chunk(std::uint32_t offset, ByteView data);
CastChunk decode_cast_chunk(ByteView payload);

/// INVOKE: provider seed u64 | codec u8.
struct InvokeRequest {
  std::uint64_t seed = 0;
  Codec codec = Codec::Fixed;
  friend bool operator==(const InvokeRequest&, const InvokeRequest&) = default;
};
Bytes encode_invoke(const InvokeRequest& r);
InvokeRequest decode_invoke(ByteView payload);

/// HEALTH_REPORT: invocations u64 | exec nanos u64 | state u8 |
/// bundle digest u32 | boot time (ms since epoch) u64 | has error u8 |
/// [error length u32 | error bytes]
struct HealthReport {
  runicos::SagaMetrics metrics;
  std::uint32_t bundle_digest = 0;
};
Bytes encode_health(const HealthReport& r);
HealthReport decode_health(ByteView payload);

}  // namespace rune::deploy
