#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "rune/bytes.hpp"

namespace rune {

enum class DType : std::uint8_t { F32 = 0, U8 = 1, I32 = 2 };

std::size_t element_size(DType dtype) noexcept;
std::string_view to_string(DType dtype) noexcept;
bool is_valid_dtype(std::uint8_t raw) noexcept;

using Shape = std::vector<std::uint32_t>;

/// Number of elements described by `dims`; 1 for an empty shape.
std::size_t element_count(const Shape& dims) noexcept;

/// Dense row-major tensor whose payload is held as little-endian element
/// bytes. Stage kernels work on the f32 view; the byte payload is what
/// crosses the host boundary.
class Tensor {
 public:
  Tensor() = default;
  /// Validates that payload size matches dims and that every dim is >= 1.
  Tensor(DType dtype, Shape dims, Bytes payload);

  static Tensor from_floats(Shape dims, std::span<const float> values);
  static Tensor zeros(DType dtype, Shape dims);

  DType dtype() const noexcept { return dtype_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  const Shape& dims() const noexcept { return dims_; }
  const Bytes& payload() const noexcept { return payload_; }
  std::size_t size() const noexcept { return element_count(dims_); }
  std::size_t byte_size() const noexcept { return payload_.size(); }

  /// Copies the payload out as floats. Requires dtype F32.
  std::vector<float> to_floats() const;
  float at_f32(std::size_t i) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  DType dtype_ = DType::F32;
  Shape dims_;
  Bytes payload_;
};

}  // namespace rune
