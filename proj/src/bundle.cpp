#include "rune/bundle.hpp"

#include <cstring>
#include <sstream>

namespace rune::bundle {
namespace {

std::uint16_t checked_count(std::size_t n, const char* what) {
  if (n > 0xFFFF) fail(Errc::InvalidArgument, std::string("too many ") + what);
  return static_cast<std::uint16_t>(n);
}

void write_shape(ByteWriter& w, const Shape& s) {
  if (s.size() > 255) fail(Errc::InvalidArgument, "shape rank exceeds 255");
  w.u8(static_cast<std::uint8_t>(s.size()));
  for (auto d : s) w.u32(d);
}

Shape read_shape(ByteReader& r) {
  Shape s(r.u8());
  for (auto& d : s) d = r.u32();
  return s;
}

void write_bytecode(ByteWriter& w, const Bytecode& code) {
  w.u16(checked_count(code.size(), "instructions"));
  for (const auto& ins : code) {
    w.u8(static_cast<std::uint8_t>(ins.op));
    w.u16(ins.operand);
  }
}

Bytecode read_bytecode(ByteReader& r) {
  Bytecode code(r.u16());
  for (auto& ins : code) {
    std::size_t at = r.position();
    std::uint8_t op = r.u8();
    if (op < 0x01 || op > 0x04) fail_at(Errc::Malformed, at, "unknown opcode");
    ins.op = static_cast<Opcode>(op);
    ins.operand = r.u16();
  }
  return code;
}

bool manifest_requests(const Manifest& m, CapabilityKind kind) {
  for (const auto& c : m.capabilities) {
    if (c.kind == kind) return true;
  }
  return false;
}

}  // namespace

std::optional<std::uint32_t> CapabilityRequest::param(std::string_view key) const {
  for (const auto& [k, v] : params) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::string_view to_string(Opcode op) noexcept {
  switch (op) {
    case Opcode::ReadCap: return "READ_CAP";
    case Opcode::Proc: return "PROC";
    case Opcode::Infer: return "INFER";
    case Opcode::WriteOut: return "WRITE_OUT";
  }
  return "?";
}

std::string disassemble(const Bytecode& code) {
  std::ostringstream os;
  for (const auto& ins : code) {
    os << to_string(ins.op);
    switch (ins.op) {
      case Opcode::ReadCap:
        os << ' ' << to_string(static_cast<CapabilityKind>(ins.operand));
        break;
      case Opcode::Proc:
        os << ' ' << block_path(static_cast<BlockId>(ins.operand));
        break;
      case Opcode::Infer:
        os << ' ' << ins.operand;
        break;
      case Opcode::WriteOut:
        break;
    }
    os << '\n';
  }
  return os.str();
}

void write_manifest(ByteWriter& w, const Manifest& m) {
  w.u16(checked_count(m.capabilities.size(), "capabilities"));
  for (const auto& c : m.capabilities) {
    w.u8(static_cast<std::uint8_t>(c.kind));
    w.u16(checked_count(c.params.size(), "params"));
    for (const auto& [k, v] : c.params) {
      w.str16(k);
      w.u32(v);
    }
    w.u16(checked_count(c.extras.size(), "extras"));
    for (const auto& [k, v] : c.extras) {
      w.str16(k);
      w.str16(v);
    }
  }
  w.u8(static_cast<std::uint8_t>(m.out));
  w.u16(checked_count(m.models.size(), "models"));
  for (const auto& model : m.models) {
    w.str16(model.name);
    write_shape(w, model.input_shape);
    write_shape(w, model.output_shape);
    w.u32(model.blob_digest);
  }
}

Manifest read_manifest(ByteReader& r) {
  Manifest m;
  m.capabilities.resize(r.u16());
  for (auto& c : m.capabilities) {
    std::size_t at = r.position();
    std::uint8_t kind = r.u8();
    if (kind > 1) fail_at(Errc::Malformed, at, "unknown capability kind");
    c.kind = static_cast<CapabilityKind>(kind);
    c.params.resize(r.u16());
    for (auto& [k, v] : c.params) {
      k = r.str16();
      v = r.u32();
    }
    c.extras.resize(r.u16());
    for (auto& [k, v] : c.extras) {
      k = r.str16();
      v = r.str16();
    }
  }
  std::size_t at = r.position();
  if (r.u8() != 0) fail_at(Errc::Malformed, at, "unknown output kind");
  m.out = OutputKind::Serial;
  m.models.resize(r.u16());
  for (auto& model : m.models) {
    model.name = r.str16();
    model.input_shape = read_shape(r);
    model.output_shape = read_shape(r);
    model.blob_digest = r.u32();
  }
  return m;
}

Bytes encode_bundle(const Manifest& manifest, const Bytecode& bytecode,
                    const std::vector<Bytes>& model_blobs, EncodeOptions options) {
  for (const auto& ins : bytecode) {
    if (ins.op == Opcode::Infer && ins.operand >= model_blobs.size()) {
      fail(Errc::DanglingReference, "INFER " + std::to_string(ins.operand) + " but only " +
                                        std::to_string(model_blobs.size()) + " model blob(s)");
    }
    if (ins.op == Opcode::Infer && ins.operand >= manifest.models.size()) {
      fail(Errc::DanglingReference, "INFER " + std::to_string(ins.operand) + " has no manifest entry");
    }
    if (ins.op == Opcode::ReadCap) {
      if (ins.operand > 1) fail(Errc::DanglingReference, "READ_CAP of unknown capability kind");
      auto kind = static_cast<CapabilityKind>(ins.operand);
      if (options.check_capability_references && !manifest_requests(manifest, kind)) {
        fail(Errc::DanglingReference,
             "READ_CAP " + std::string(to_string(kind)) + " is not requested by the manifest");
      }
    }
    if (ins.op == Opcode::Proc && ins.operand > 1) {
      fail(Errc::DanglingReference, "PROC of unknown block id " + std::to_string(ins.operand));
    }
  }
  if (manifest.models.size() != model_blobs.size()) {
    fail(Errc::DanglingReference, "manifest lists " + std::to_string(manifest.models.size()) +
                                      " models but " + std::to_string(model_blobs.size()) + " blobs given");
  }

  Manifest m = manifest;
  for (std::size_t i = 0; i < model_blobs.size(); ++i) m.models[i].blob_digest = crc32(model_blobs[i]);

  ByteWriter section;
  ByteWriter w;
  w.raw(std::string_view(kMagic, 4));
  w.u16(kFormatVersion);

  write_manifest(section, m);
  Bytes manifest_bytes = section.take();
  w.u32(static_cast<std::uint32_t>(manifest_bytes.size()));
  w.raw(manifest_bytes);

  ByteWriter code;
  write_bytecode(code, bytecode);
  Bytes code_bytes = code.take();
  w.u32(static_cast<std::uint32_t>(code_bytes.size()));
  w.raw(code_bytes);

  w.u16(checked_count(model_blobs.size(), "model blobs"));
  for (std::size_t i = 0; i < model_blobs.size(); ++i) {
    if (model_blobs[i].size() > 0xFFFFFFFFu) fail(Errc::InvalidArgument, "model blob too large");
    w.u32(m.models[i].blob_digest);
    w.u32(static_cast<std::uint32_t>(model_blobs[i].size()));
    w.raw(model_blobs[i]);
  }
  Bytes out = w.take();
  std::uint32_t digest = crc32(out);
  ByteWriter tail(out);
  tail.u32(digest);
  return out;
}

RuneBundle decode_bundle(ByteView bytes) {
  if (bytes.size() < 4) fail_at(Errc::Truncated, 0, "bundle shorter than its magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) fail_at(Errc::BadMagic, 0, "not a Rune bundle");
  ByteReader head(bytes.subspan(4));
  std::uint16_t version = head.u16();
  if (version != kFormatVersion) {
    fail(Errc::UnsupportedVersion, "bundle format version " + std::to_string(version) +
                                       ", this runtime reads " + std::to_string(kFormatVersion));
  }
  if (bytes.size() < 10) fail_at(Errc::Truncated, bytes.size(), "bundle has no digest");

  ByteView body = bytes.first(bytes.size() - 4);
  ByteReader tail(bytes.last(4));
  std::uint32_t stored = tail.u32();
  if (crc32(body) != stored) fail(Errc::DigestMismatch, "bundle digest does not match its contents");

  RuneBundle b;
  b.format_version = version;
  b.digest = stored;
  ByteReader r(body);
  r.raw(6);

  std::uint32_t manifest_len = r.u32();
  std::size_t manifest_at = r.position();
  ByteReader mr(r.raw(manifest_len));
  b.manifest = read_manifest(mr);
  if (!mr.at_end()) fail_at(Errc::Malformed, manifest_at + mr.position(), "trailing bytes in manifest section");

  std::uint32_t code_len = r.u32();
  std::size_t code_at = r.position();
  ByteReader cr(r.raw(code_len));
  b.bytecode = read_bytecode(cr);
  if (!cr.at_end()) fail_at(Errc::Malformed, code_at + cr.position(), "trailing bytes in bytecode section");

  b.model_blobs.resize(r.u16());
  for (auto& blob : b.model_blobs) {
    blob.digest = r.u32();
    std::uint32_t len = r.u32();
    ByteView data = r.raw(len);
    blob.bytes.assign(data.begin(), data.end());
    if (crc32(blob.bytes) != blob.digest) fail(Errc::DigestMismatch, "model blob digest mismatch");
  }
  if (!r.at_end()) fail_at(Errc::Malformed, r.position(), "trailing bytes after blob table");

  if (b.manifest.models.size() != b.model_blobs.size()) {
    fail(Errc::Malformed, "manifest model count disagrees with blob table");
  }
  for (std::size_t i = 0; i < b.model_blobs.size(); ++i) {
    if (b.manifest.models[i].blob_digest != b.model_blobs[i].digest) {
      fail(Errc::DigestMismatch, "manifest digest for model '" + b.manifest.models[i].name +
                                     "' does not match its blob");
    }
  }
  for (const auto& ins : b.bytecode) {
    if (ins.op == Opcode::Infer && ins.operand >= b.model_blobs.size()) {
      fail(Errc::Malformed, "INFER references missing model " + std::to_string(ins.operand));
    }
    if ((ins.op == Opcode::Proc || ins.op == Opcode::ReadCap) && ins.operand > 1) {
      fail(Errc::Malformed, std::string(to_string(ins.op)) + " operand out of range");
    }
  }
  return b;
}

}  // namespace rune::bundle
