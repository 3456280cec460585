#include <zlib.h>

#include <algorithm>

#include "rune/bytes.hpp"

namespace rune {

std::uint32_t crc32(ByteView data) noexcept { return crc32(data, 0); }

std::uint32_t crc32(ByteView data, std::uint32_t running) noexcept {
  uLong crc = running;
  // zlib takes uInt lengths; feed in bounded slices.
  constexpr std::size_t kSlice = 1u << 30;
  std::size_t pos = 0;
  while (pos < data.size()) {
    std::size_t n = std::min(kSlice, data.size() - pos);
    crc = ::crc32(crc, data.data() + pos, static_cast<uInt>(n));
    pos += n;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace rune
