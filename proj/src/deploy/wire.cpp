#include "rune/deploy/wire.hpp"

#include <array>
#include <cstring>

#include "rune/deploy/transport.hpp"

namespace rune::deploy {

bool is_known_msg_type(std::uint8_t raw) noexcept {
  switch (raw) {
    case 0x01: case 0x02: case 0x03: case 0x04: case 0x05: case 0x06:
    case 0x10: case 0x11: case 0x12: case 0x13:
    case 0x20: case 0x21: case 0x22: case 0x23:
      return true;
    default:
      return false;
  }
}

std::string_view to_string(MsgType t) noexcept {
  switch (t) {
    case MsgType::Ping: return "PING";
    case MsgType::Pong: return "PONG";
    case MsgType::Error: return "ERROR";
    case MsgType::Identify: return "IDENTIFY";
    case MsgType::Identity: return "IDENTITY";
    case MsgType::Ack: return "ACK";
    case MsgType::CastBegin: return "CAST_BEGIN";
    case MsgType::CastChunk: return "CAST_CHUNK";
    case MsgType::CastVerify: return "CAST_VERIFY";
    case MsgType::CastCommit: return "CAST_COMMIT";
    case MsgType::Invoke: return "INVOKE";
    case MsgType::InvokeResult: return "INVOKE_RESULT";
    case MsgType::Health: return "HEALTH";
    case MsgType::HealthReport: return "HEALTH_REPORT";
  }
  return "?";
}

namespace {

std::size_t payload_limit(MsgType t) { return t == MsgType::CastChunk ? kMaxChunkPayload : kMaxPayload; }

struct Header {
  MsgType type;
  std::uint32_t length;
};

Header check_header(ByteView head) {
  if (std::memcmp(head.data(), kFrameMagic, 4) != 0) fail(Errc::ProtocolError, "bad frame magic");
  std::uint8_t raw_type = head[4];
  if (!is_known_msg_type(raw_type)) fail(Errc::ProtocolError, "unknown message type " + std::to_string(raw_type));
  auto type = static_cast<MsgType>(raw_type);
  std::uint32_t length = ByteReader(head.subspan(5, 4)).u32();
  if (length > payload_limit(type)) {
    fail(Errc::ProtocolError, "frame length " + std::to_string(length) + " exceeds limit for " +
                                  std::string(to_string(type)));
  }
  return {type, length};
}

std::uint32_t frame_crc(ByteView head, ByteView payload) { return crc32(payload, crc32(head.subspan(4, 5))); }

}  // namespace

Bytes encode_frame(const WireFrame& frame) {
  if (frame.payload.size() > payload_limit(frame.type)) fail(Errc::InvalidArgument, "frame payload too large");
  ByteWriter w;
  w.raw(std::string_view(kFrameMagic, 4));
  w.u8(static_cast<std::uint8_t>(frame.type));
  w.u32(static_cast<std::uint32_t>(frame.payload.size()));
  w.raw(frame.payload);
  w.u32(frame_crc(w.bytes(), frame.payload));
  return w.take();
}

WireFrame decode_frame(ByteView bytes) {
  if (bytes.size() < kFrameOverhead) fail(Errc::ProtocolError, "short frame");
  Header h = check_header(bytes.first(9));
  if (bytes.size() != kFrameOverhead + h.length) fail(Errc::ProtocolError, "frame length disagrees with size");
  ByteView payload = bytes.subspan(9, h.length);
  if (frame_crc(bytes, payload) != ByteReader(bytes.last(4)).u32()) fail(Errc::TransferCorrupt, "frame CRC mismatch");
  return {h.type, Bytes(payload.begin(), payload.end())};
}

WireFrame read_frame(Stream& stream, std::chrono::milliseconds timeout) {
  std::array<std::uint8_t, 9> head{};
  stream.read_exact(head, timeout);
  Header h = check_header(head);
  WireFrame frame{h.type, Bytes(h.length)};
  stream.read_exact(frame.payload, timeout);
  std::array<std::uint8_t, 4> crc{};
  stream.read_exact(crc, timeout);
  if (frame_crc(head, frame.payload) != ByteReader(crc).u32()) fail(Errc::TransferCorrupt, "frame CRC mismatch");
  return frame;
}

void write_frame(Stream& stream, const WireFrame& frame) { stream.write_all(encode_frame(frame)); }

WireFrame error_frame(Errc code, const std::string& message, std::optional<CapabilityKind> kind) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(code));
  w.u8(kind ? static_cast<std::uint8_t>(*kind) : 0xFF);
  w.raw(std::string_view(message).substr(0, kMaxPayload - 2));
  return {MsgType::Error, w.take()};
}

WireError parse_error(const WireFrame& frame) {
  WireError e;
  if (frame.type != MsgType::Error || frame.payload.size() < 2) {
    e.message = "malformed ERROR frame";
    return e;
  }
  e.code = frame.payload[0] <= static_cast<std::uint8_t>(Errc::InvalidArgument) ? static_cast<Errc>(frame.payload[0])
                                                                                  : Errc::ProtocolError;
  if (frame.payload[1] <= 1) e.kind = static_cast<CapabilityKind>(frame.payload[1]);
  e.message.assign(frame.payload.begin() + 2, frame.payload.end());
  return e;
}

}  // namespace rune::deploy
