#include "rune/kinds.hpp"

namespace rune {

std::string_view to_string(CapabilityKind kind) noexcept {
  switch (kind) {
    case CapabilityKind::Audio: return "AUDIO";
    case CapabilityKind::Rand: return "RAND";
  }
  return "?";
}

std::string_view to_string(OutputKind kind) noexcept {
  switch (kind) {
    case OutputKind::Serial: return "SERIAL";
  }
  return "?";
}

std::string_view block_path(BlockId id) noexcept {
  switch (id) {
    case BlockId::Fft: return "runicos/fft";
    case BlockId::Normalize: return "runicos/normalize";
  }
  return "?";
}

std::optional<CapabilityKind> parse_capability_kind(std::string_view text) noexcept {
  if (text == "AUDIO") return CapabilityKind::Audio;
  if (text == "RAND") return CapabilityKind::Rand;
  return std::nullopt;
}

std::optional<BlockId> parse_block_path(std::string_view path) noexcept {
  if (path == "runicos/fft") return BlockId::Fft;
  if (path == "runicos/normalize") return BlockId::Normalize;
  return std::nullopt;
}

}  // namespace rune
