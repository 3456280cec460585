#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>

#include "rune/bytes.hpp"
#include "rune/error.hpp"
#include "rune/kinds.hpp"

namespace rune::deploy {

class Stream;

// Message types are banded: 0x0x control, 0x1x cast, 0x2x runtime.
enum class MsgType : std::uint8_t {
  Ping = 0x01,
  Pong = 0x02,
  Error = 0x03,
  Identify = 0x04,
  Identity = 0x05,
  Ack = 0x06,

  CastBegin = 0x10,
  CastChunk = 0x11,
  CastVerify = 0x12,
  CastCommit = 0x13,

  Invoke = 0x20,
  InvokeResult = 0x21,
  Health = 0x22,
  HealthReport = 0x23,
};

bool is_known_msg_type(std::uint8_t raw) noexcept;
std::string_view to_string(MsgType t) noexcept;

inline constexpr char kFrameMagic[4] = {'H', 'M', 'R', '1'};
inline constexpr std::uint8_t kProtocolVersion = 1;
/// Upload chunk payload limit (bundle bytes per CAST_CHUNK).
inline constexpr std::size_t kMaxChunk = 4096;
/// CAST_CHUNK payload is offset u32 followed by up to kMaxChunk bytes.
inline constexpr std::size_t kMaxChunkPayload = 4 + kMaxChunk;
inline constexpr std::size_t kMaxPayload = 64 * 1024;
inline constexpr std::size_t kFrameOverhead = 4 + 1 + 4 + 4;

/// magic "HMR1" | msg_type u8 | length u32 | payload | CRC-32 u32 over type, length and payload
struct WireFrame {
  MsgType type = MsgType::Ping;
  Bytes payload;

  friend bool operator==(const WireFrame&, const WireFrame&) = default;
};

Bytes encode_frame(const WireFrame& frame);
/// Decodes exactly one frame occupying all of `bytes`.
WireFrame decode_frame(ByteView bytes);

/// Reads one frame. Throws ProtocolError for a bad magic, unknown type or
/// oversized length, TransferCorrupt for a CRC mismatch, and IoError when
/// the stream ends or times out.
WireFrame read_frame(Stream& stream, std::chrono::milliseconds timeout);
void write_frame(Stream& stream, const WireFrame& frame);

/// ERROR payload: code u8 | capability kind u8 (0xFF when none) | message.
struct WireError {
  Errc code = Errc::ProtocolError;
  std::optional<CapabilityKind> kind;
  std::string message;
};

WireFrame error_frame(Errc code, const std::string& message, std::optional<CapabilityKind> kind = std::nullopt);
WireError parse_error(const WireFrame& frame);

}  // namespace rune::deploy
