#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace rune {

enum class CapabilityKind : std::uint8_t { Audio = 0, Rand = 1 };
inline constexpr CapabilityKind kAllCapabilityKinds[] = {CapabilityKind::Audio, CapabilityKind::Rand};

enum class OutputKind : std::uint8_t { Serial = 0 };

/// Built-in processing blocks.
enum class BlockId : std::uint8_t { Fft = 0, Normalize = 1 };

std::string_view to_string(CapabilityKind kind) noexcept;
std::string_view to_string(OutputKind kind) noexcept;
/// Registry path, e.g. "runicos/fft".
std::string_view block_path(BlockId id) noexcept;

std::optional<CapabilityKind> parse_capability_kind(std::string_view text) noexcept;
std::optional<BlockId> parse_block_path(std::string_view path) noexcept;

}  // namespace rune
