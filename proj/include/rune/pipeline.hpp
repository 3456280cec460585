#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rune/bytes.hpp"
#include "rune/kinds.hpp"
#include "rune/tensor.hpp"

/// Numerical kernels run by pipeline stages.
namespace rune::pipeline {

enum class Activation : std::uint8_t { Linear = 0, Relu = 1, Tanh = 2 };

struct DenseLayer {
  std::uint32_t in = 0;
  std::uint32_t out = 0;
  Activation activation = Activation::Linear;
  std::vector<float> weights;  // row-major [out x in]
  std::vector<float> bias;     // [out]

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// A stack of fully connected layers.
class DenseModel {
 public:
  DenseModel() = default;
  /// Validates that layer dims chain and every weight is finite.
  explicit DenseModel(std::vector<DenseLayer> layers);

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::uint32_t input_size() const noexcept { return layers_.empty() ? 0 : layers_.front().in; }
  std::uint32_t output_size() const noexcept { return layers_.empty() ? 0 : layers_.back().out; }
  /// Widest activation vector, used for working-set estimates.
  std::uint32_t max_width() const noexcept;

  friend bool operator==(const DenseModel&, const DenseModel&) = default;

 private:
  std::vector<DenseLayer> layers_;
};

/// `.rmodel` format, little-endian:
///   "RMDL" | layer count u16
///   | per layer: in u32 | out u32 | activation u8 | weights f32[out*in] | bias f32[out]
///   | CRC-32 u32 over all preceding bytes
Bytes write_rmodel(const DenseModel& model);
/// Throws ModelFormatError on bad magic, truncation, checksum or dims.
DenseModel read_rmodel(ByteView bytes);
DenseModel load_rmodel(const std::filesystem::path& path);

/// Runs the network on the flattened input. The result takes
/// `output_shape`, whose element count must match the last layer.
/// Accumulation is in f32. Throws ShapeMismatch.
Tensor infer(const DenseModel& model, const Tensor& x, const Shape& output_shape);
/// Same, with output shape [out].
Tensor infer(const DenseModel& model, const Tensor& x);

/// |DFT| of the flattened input, full length (bins 0..n-1), same shape as
/// the input. Radix-2 for powers of two, direct summation otherwise;
/// both accumulate in double.
Tensor fft_magnitude(const Tensor& x);

/// (x - min) / (max - min), or all zeros when the range is degenerate.
Tensor normalize(const Tensor& x);

Tensor run_block(BlockId block, const Tensor& x);

}  // namespace rune::pipeline
