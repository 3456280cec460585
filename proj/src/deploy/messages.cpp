#include "rune/deploy/messages.hpp"

#include "rune/deploy/wire.hpp"

namespace rune::deploy {

namespace {

ByteReader reader(ByteView payload) { return ByteReader(payload, Errc::ProtocolError); }

void finish(const ByteReader& r, std::string_view what) {
  if (!r.at_end()) fail(Errc::ProtocolError, std::string(what) + " payload has trailing bytes");
}

}  // namespace

Bytes encode_pong(const std::string& name) {
  ByteWriter w;
  w.str16(name);
  return w.take();
}

std::string decode_pong(ByteView payload) {
  auto r = reader(payload);
  std::string name = r.str16();
  finish(r, "PONG");
  return name;
}

Bytes encode_identify(std::uint8_t version) { return Bytes{version}; }

std::uint8_t decode_identify(ByteView payload) {
  auto r = reader(payload);
  std::uint8_t v = r.u8();
  finish(r, "IDENTIFY");
  return v;
}

Bytes encode_identity(const Identity& id) {
  ByteWriter w;
  w.str16(id.fqdn);
  w.str16(id.name);
  w.u8(id.version);
  return w.take();
}

Identity decode_identity(ByteView payload) {
  auto r = reader(payload);
  Identity id;
  id.fqdn = r.str16();
  id.name = r.str16();
  id.version = r.u8();
  finish(r, "IDENTITY");
  return id;
}

Bytes encode_cast_begin(const CastBegin& b) {
  ByteWriter w;
  w.u32(b.size);
  w.u32(b.crc);
  return w.take();
}

CastBegin decode_cast_begin(ByteView payload) {
  auto r = reader(payload);
  CastBegin b;
  b.size = r.u32();
  b.crc = r.u32();
  finish(r, "CAST_BEGIN");
  return b;
}

Bytes encode_cast_chunk(std::uint32_t offset, ByteView data) {
  if (data.size() > kMaxChunk) fail(Errc::InvalidArgument, "chunk larger than " + std::to_string(kMaxChunk));
  ByteWriter w;
  w.u32(offset);
  w.raw(data);
  return w.take();
}

CastChunk decode_cast_chunk(ByteView payload) {
  auto r = reader(payload);
  CastChunk c;
  c.offset = r.u32();
  ByteView rest = r.raw(r.remaining());
  if (rest.empty() || rest.size() > kMaxChunk) fail(Errc::ProtocolError, "CAST_CHUNK carries no data or too much");
  c.data.assign(rest.begin(), rest.end());
  return c;
}

Bytes encode_invoke(const InvokeRequest& req) {
  ByteWriter w;
  w.u64(req.seed);
  w.u8(static_cast<std::uint8_t>(req.codec));
  return w.take();
}

InvokeRequest decode_invoke(ByteView payload) {
  auto r = reader(payload);
  InvokeRequest req;
  req.seed = r.u64();
  std::uint8_t codec = r.u8();
  if (codec > static_cast<std::uint8_t>(Codec::Varint)) fail(Errc::ProtocolError, "unknown codec in INVOKE");
  req.codec = static_cast<Codec>(codec);
  finish(r, "INVOKE");
  return req;
}

Bytes encode_health(const HealthReport& rep) {
  const auto& m = rep.metrics;
  ByteWriter w;
  w.u64(m.invocations);
  w.u64(m.total_exec_nanos);
  w.u8(static_cast<std::uint8_t>(m.state));
  w.u32(rep.bundle_digest);
  auto boot_ms = std::chrono::duration_cast<std::chrono::milliseconds>(m.boot_time.time_since_epoch()).count();
  w.u64(static_cast<std::uint64_t>(boot_ms));
  w.u8(m.last_error ? 1 : 0);
  if (m.last_error) {
    std::string_view err = std::string_view(*m.last_error).substr(0, kMaxPayload / 2);
    w.u32(static_cast<std::uint32_t>(err.size()));
    w.raw(err);
  }
  return w.take();
}

HealthReport decode_health(ByteView payload) {
  auto r = reader(payload);
  HealthReport rep;
  auto& m = rep.metrics;
  m.invocations = r.u64();
  m.total_exec_nanos = r.u64();
  std::uint8_t state = r.u8();
  if (state > static_cast<std::uint8_t>(runicos::InstanceState::Faulted)) {
    fail(Errc::ProtocolError, "unknown instance state in HEALTH_REPORT");
  }
  m.state = static_cast<runicos::InstanceState>(state);
  rep.bundle_digest = r.u32();
  m.boot_time = std::chrono::system_clock::time_point(std::chrono::milliseconds(r.u64()));
  std::uint8_t has_error = r.u8();
  if (has_error > 1) fail(Errc::ProtocolError, "bad error flag in HEALTH_REPORT");
  if (has_error) {
    std::uint32_t n = r.u32();
    ByteView text = r.raw(n);
    m.last_error = std::string(text.begin(), text.end());
  }
  finish(r, "HEALTH_REPORT");
  return rep;
}

}  // namespace rune::deploy
