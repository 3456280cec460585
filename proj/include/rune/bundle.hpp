#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rune/bytes.hpp"
#include "rune/kinds.hpp"
#include "rune/tensor.hpp"

namespace rune::bundle {

struct CapabilityRequest {
  CapabilityKind kind = CapabilityKind::Audio;
  std::vector<std::pair<std::string, std::uint32_t>> params;
  std::vector<std::pair<std::string, std::string>> extras;

  std::optional<std::uint32_t> param(std::string_view key) const;
  friend bool operator==(const CapabilityRequest&, const CapabilityRequest&) = default;
};

struct ModelInfo {
  std::string name;
  Shape input_shape;
  Shape output_shape;
  std::uint32_t blob_digest = 0;

  friend bool operator==(const ModelInfo&, const ModelInfo&) = default;
};

struct Manifest {
  std::vector<CapabilityRequest> capabilities;
  OutputKind out = OutputKind::Serial;
  std::vector<ModelInfo> models;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// Pipeline bytecode. Each instruction is one opcode byte plus a u16
/// operand: a CapabilityKind for READ_CAP, a BlockId for PROC, a model
/// index for INFER, and zero for WRITE_OUT.
enum class Opcode : std::uint8_t { ReadCap = 0x01, Proc = 0x02, Infer = 0x03, WriteOut = 0x04 };

struct Instruction {
  Opcode op = Opcode::WriteOut;
  std::uint16_t operand = 0;

  static Instruction read_cap(CapabilityKind k) { return {Opcode::ReadCap, static_cast<std::uint16_t>(k)}; }
  static Instruction proc(BlockId b) { return {Opcode::Proc, static_cast<std::uint16_t>(b)}; }
  static Instruction infer(std::uint16_t model) { return {Opcode::Infer, model}; }
  static Instruction write_out() { return {Opcode::WriteOut, 0}; }

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

using Bytecode = std::vector<Instruction>;

std::string_view to_string(Opcode op) noexcept;
std::string disassemble(const Bytecode& code);

struct ModelBlob {
  std::uint32_t digest = 0;
  Bytes bytes;

  friend bool operator==(const ModelBlob&, const ModelBlob&) = default;
};

inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr char kMagic[4] = {'R', 'U', 'N', 'E'};

struct RuneBundle {
  std::uint16_t format_version = kFormatVersion;
  Manifest manifest;
  Bytecode bytecode;
  std::vector<ModelBlob> model_blobs;
  /// CRC-32 over every byte preceding it in the encoded form.
  std::uint32_t digest = 0;

  friend bool operator==(const RuneBundle&, const RuneBundle&) = default;
};

struct EncodeOptions {
  /// When false, READ_CAP may name a capability the manifest does not
  /// request. Only useful for building adversarial bundles in tests; the
  /// runtime still enforces grants.
  bool check_capability_references = true;
};

/// Serializes a bundle. Layout (all integers little-endian):
///
///   "RUNE" | version u16
///   | manifest length u32 | manifest
///   | bytecode length u32 | count u16, (opcode u8, operand u16)*
///   | blob count u16 | (digest u32 | length u32 | bytes)*
///   | CRC-32 u32 over everything above
///
/// Model blob digests are recomputed from the blob bytes. Throws
/// DanglingReference when the bytecode names a missing model or an
/// unrequested capability.
Bytes encode_bundle(const Manifest& manifest, const Bytecode& bytecode,
                    const std::vector<Bytes>& model_blobs, EncodeOptions options = {});

/// Parses and validates a bundle. Checks magic, version, and the body
/// digest before interpreting any section, then verifies per-blob digests
/// and that INFER/PROC operands are in range.
RuneBundle decode_bundle(ByteView bytes);

/// Manifest section on its own (shared with the wire protocol).
void write_manifest(ByteWriter& w, const Manifest& m);
Manifest read_manifest(ByteReader& r);

}  // namespace rune::bundle
