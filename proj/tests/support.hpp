#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "rune/bytes.hpp"
#include "rune/tensor.hpp"

namespace rune::testing {

inline std::filesystem::path source_dir() { return RUNE_SOURCE_DIR; }
inline std::filesystem::path runes_dir() { return source_dir() / "runes"; }

inline Bytes read_file(const std::filesystem::path& p) {
  FILE* f = std::fopen(p.c_str(), "rb");
  if (!f) return {};
  Bytes out;
  std::uint8_t buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) out.insert(out.end(), buf, buf + n);
  std::fclose(f);
  return out;
}

inline void write_file(const std::filesystem::path& p, std::string_view text) {
  FILE* f = std::fopen(p.c_str(), "wb");
  std::fwrite(text.data(), 1, text.size(), f);
  std::fclose(f);
}

inline void write_file(const std::filesystem::path& p, const Bytes& bytes) {
  FILE* f = std::fopen(p.c_str(), "wb");
  std::fwrite(bytes.data(), 1, bytes.size(), f);
  std::fclose(f);
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("rune-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Any valid tensor: random dtype, rank 1..4, dims 1..6, random payload
/// bytes (so f32 payloads include NaNs and denormals).
inline Tensor random_tensor(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dtype(0, 2), rank(1, 4), dim(1, 6), byte(0, 255);
  auto dt = static_cast<DType>(dtype(rng));
  Shape dims(static_cast<std::size_t>(rank(rng)));
  for (auto& d : dims) d = static_cast<std::uint32_t>(dim(rng));
  // Occasionally a dim large enough to need multi-byte varints.
  if (rng() % 8 == 0) dims[0] = 130 + static_cast<std::uint32_t>(rng() % 200);
  Bytes payload(element_size(dt) * element_count(dims));
  for (auto& b : payload) b = static_cast<std::uint8_t>(byte(rng));
  return Tensor(dt, std::move(dims), std::move(payload));
}

inline Tensor floats(Shape dims, std::vector<float> v) { return Tensor::from_floats(std::move(dims), v); }

}  // namespace rune::testing
