#include "rune/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>

namespace rune::pipeline {
namespace {

constexpr char kModelMagic[4] = {'R', 'M', 'D', 'L'};

[[noreturn]] void format_error(const std::string& msg) { fail(Errc::ModelFormatError, msg); }

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::vector<std::complex<double>> radix2(std::span<const float> x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> a(n);
  // Bit-reversed load.
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
    a[r] = x[i];
  }
  std::vector<std::complex<double>> twiddle(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    twiddle[k] = {std::cos(angle), std::sin(angle)};
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    std::size_t half = len / 2;
    std::size_t step = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t j = 0; j < half; ++j) {
        std::complex<double> u = a[i + j];
        std::complex<double> v = a[i + j + half] * twiddle[j * step];
        a[i + j] = u + v;
        a[i + j + half] = u - v;
      }
    }
  }
  return a;
}

std::vector<std::complex<double>> direct_dft(std::span<const float> x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> table(n);
  for (std::size_t m = 0; m < n; ++m) {
    double angle = -2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
    table[m] = {std::cos(angle), std::sin(angle)};
  }
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) acc += static_cast<double>(x[t]) * table[(k * t) % n];
    out[k] = acc;
  }
  return out;
}

float activate(Activation a, float v) {
  switch (a) {
    case Activation::Linear: return v;
    case Activation::Relu: return v > 0.0f ? v : 0.0f;
    case Activation::Tanh: return std::tanh(v);
  }
  return v;
}

}  // namespace

DenseModel::DenseModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) format_error("model has no layers");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.in == 0 || l.out == 0) format_error("layer " + std::to_string(i) + " has a zero dimension");
    if (l.weights.size() != std::size_t{l.in} * l.out || l.bias.size() != l.out) {
      format_error("layer " + std::to_string(i) + " weight or bias size disagrees with its dims");
    }
    if (i > 0 && layers_[i - 1].out != l.in) {
      format_error("layer " + std::to_string(i) + " expects " + std::to_string(l.in) + " inputs, previous layer gives " +
                   std::to_string(layers_[i - 1].out));
    }
    if (static_cast<std::uint8_t>(l.activation) > 2) format_error("unknown activation");
    auto finite = [](float v) { return std::isfinite(v); };
    if (!std::all_of(l.weights.begin(), l.weights.end(), finite) ||
        !std::all_of(l.bias.begin(), l.bias.end(), finite)) {
      format_error("layer " + std::to_string(i) + " has non-finite parameters");
    }
  }
}

std::uint32_t DenseModel::max_width() const noexcept {
  std::uint32_t w = input_size();
  for (const auto& l : layers_) w = std::max(w, l.out);
  return w;
}

Bytes write_rmodel(const DenseModel& model) {
  ByteWriter w;
  w.raw(std::string_view(kModelMagic, 4));
  w.u16(static_cast<std::uint16_t>(model.layers().size()));
  for (const auto& l : model.layers()) {
    w.u32(l.in);
    w.u32(l.out);
    w.u8(static_cast<std::uint8_t>(l.activation));
    for (float v : l.weights) w.f32(v);
    for (float v : l.bias) w.f32(v);
  }
  Bytes out = w.take();
  std::uint32_t crc = crc32(out);
  ByteWriter(out).u32(crc);
  return out;
}

DenseModel read_rmodel(ByteView bytes) {
  if (bytes.size() < 10 || std::memcmp(bytes.data(), kModelMagic, 4) != 0) {
    format_error("not an .rmodel file (expected RMDL magic)");
  }
  ByteView body = bytes.first(bytes.size() - 4);
  if (crc32(body) != ByteReader(bytes.last(4)).u32()) format_error(".rmodel checksum mismatch");
  try {
    ByteReader r(body);
    r.raw(4);
    std::vector<DenseLayer> layers(r.u16());
    for (auto& l : layers) {
      l.in = r.u32();
      l.out = r.u32();
      std::uint8_t act = r.u8();
      if (act > 2) format_error("unknown activation byte " + std::to_string(act));
      l.activation = static_cast<Activation>(act);
      std::size_t count = std::size_t{l.in} * l.out;
      r.need(count * 4);
      l.weights.resize(count);
      for (auto& v : l.weights) v = r.f32();
      l.bias.resize(l.out);
      for (auto& v : l.bias) v = r.f32();
    }
    if (!r.at_end()) format_error("trailing bytes in .rmodel");
    return DenseModel(std::move(layers));
  } catch (const Error& e) {
    if (e.code() == Errc::ModelFormatError) throw;
    format_error(std::string(".rmodel truncated: ") + e.what());
  }
}

DenseModel load_rmodel(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::ModelNotFound, "cannot open model " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return read_rmodel(data);
}

Tensor infer(const DenseModel& model, const Tensor& x, const Shape& output_shape) {
  if (x.dtype() != DType::F32) fail(Errc::ShapeMismatch, "model input must be f32");
  if (model.layers().empty()) fail(Errc::ShapeMismatch, "empty model");
  if (x.size() != model.input_size()) {
    fail(Errc::ShapeMismatch, "model takes " + std::to_string(model.input_size()) + " inputs, got " +
                                  std::to_string(x.size()));
  }
  if (element_count(output_shape) != model.output_size()) {
    fail(Errc::ShapeMismatch, "declared output shape does not match the model's last layer");
  }
  thread_local std::vector<float> cur, next;
  cur.resize(x.size());
  std::memcpy(cur.data(), x.payload().data(), x.byte_size());
  for (const auto& l : model.layers()) {
    next.assign(l.out, 0.0f);
    for (std::uint32_t o = 0; o < l.out; ++o) {
      const float* row = l.weights.data() + std::size_t{o} * l.in;
      float acc = l.bias[o];
      for (std::uint32_t i = 0; i < l.in; ++i) acc += row[i] * cur[i];
      next[o] = activate(l.activation, acc);
    }
    cur.swap(next);
  }
  return Tensor::from_floats(output_shape, cur);
}

Tensor infer(const DenseModel& model, const Tensor& x) {
  return infer(model, x, Shape{model.output_size()});
}

Tensor fft_magnitude(const Tensor& x) {
  std::vector<float> v = x.to_floats();
  auto spectrum = is_power_of_two(v.size()) ? radix2(v) : direct_dft(v);
  std::vector<float> mag(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) mag[k] = static_cast<float>(std::abs(spectrum[k]));
  return Tensor::from_floats(x.dims(), mag);
}

Tensor normalize(const Tensor& x) {
  std::vector<float> v = x.to_floats();
  auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  float lo = *lo_it, hi = *hi_it;
  float range = hi - lo;
  for (auto& e : v) e = range > 0.0f ? (e - lo) / range : 0.0f;
  return Tensor::from_floats(x.dims(), v);
}

Tensor run_block(BlockId block, const Tensor& x) {
  switch (block) {
    case BlockId::Fft: return fft_magnitude(x);
    case BlockId::Normalize: return normalize(x);
  }
  fail(Errc::Malformed, "unknown processing block");
}

}  // namespace rune::pipeline
