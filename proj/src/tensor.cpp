#include "rune/tensor.hpp"

#include <bit>
#include <cstring>
#include <string>

namespace rune {

static_assert(std::endian::native == std::endian::little,
              "tensor payloads are stored in host order and assume a little-endian host");

std::size_t element_size(DType dtype) noexcept {
  switch (dtype) {
    case DType::F32: return 4;
    case DType::U8: return 1;
    case DType::I32: return 4;
  }
  return 0;
}

std::string_view to_string(DType dtype) noexcept {
  switch (dtype) {
    case DType::F32: return "f32";
    case DType::U8: return "u8";
    case DType::I32: return "i32";
  }
  return "?";
}

bool is_valid_dtype(std::uint8_t raw) noexcept { return raw <= 2; }

std::size_t element_count(const Shape& dims) noexcept {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

Tensor::Tensor(DType dtype, Shape dims, Bytes payload)
    : dtype_(dtype), dims_(std::move(dims)), payload_(std::move(payload)) {
  if (dims_.empty() || dims_.size() > 255) fail(Errc::InvalidArgument, "tensor rank must be in 1..255");
  for (auto d : dims_) {
    if (d == 0) fail(Errc::InvalidArgument, "tensor dims must be >= 1");
  }
  if (payload_.size() != element_size(dtype_) * element_count(dims_)) {
    fail(Errc::InvalidArgument, "tensor payload is " + std::to_string(payload_.size()) +
                                    " bytes, dims require " +
                                    std::to_string(element_size(dtype_) * element_count(dims_)));
  }
}

Tensor Tensor::from_floats(Shape dims, std::span<const float> values) {
  Bytes payload(values.size() * sizeof(float));
  if (!values.empty()) std::memcpy(payload.data(), values.data(), payload.size());
  return Tensor(DType::F32, std::move(dims), std::move(payload));
}

Tensor Tensor::zeros(DType dtype, Shape dims) {
  Bytes payload(element_size(dtype) * element_count(dims), 0);
  return Tensor(dtype, std::move(dims), std::move(payload));
}

std::vector<float> Tensor::to_floats() const {
  if (dtype_ != DType::F32) fail(Errc::InvalidArgument, "tensor is not f32");
  std::vector<float> out(size());
  if (!out.empty()) std::memcpy(out.data(), payload_.data(), payload_.size());
  return out;
}

float Tensor::at_f32(std::size_t i) const {
  float v;
  std::memcpy(&v, payload_.data() + i * 4, 4);
  return v;
}

}  // namespace rune
