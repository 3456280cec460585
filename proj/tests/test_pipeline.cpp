#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "doctest.h"
#include "rune/pipeline.hpp"
#include "support.hpp"

using namespace rune;
using namespace rune::pipeline;
using rune::testing::floats;

namespace {

Errc error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::InvalidArgument;
}

DenseLayer layer(std::uint32_t in, std::uint32_t out, Activation act, std::vector<float> w, std::vector<float> b) {
  DenseLayer l;
  l.in = in;
  l.out = out;
  l.activation = act;
  l.weights = std::move(w);
  l.bias = std::move(b);
  return l;
}

// Reference |DFT| in long double, rounded to f32 at the end.
std::vector<float> dft_oracle(const std::vector<float>& x) {
  const std::size_t n = x.size();
  std::vector<float> out(n);
  const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  std::vector<long double> c(n), s(n);
  for (std::size_t j = 0; j < n; ++j) {
    c[j] = std::cos(two_pi * static_cast<long double>(j) / static_cast<long double>(n));
    s[j] = std::sin(two_pi * static_cast<long double>(j) / static_cast<long double>(n));
  }
  for (std::size_t k = 0; k < n; ++k) {
    long double re = 0, im = 0;
    for (std::size_t t = 0; t < n; ++t) {
      re += x[t] * c[(k * t) % n];
      im -= x[t] * s[(k * t) % n];
    }
    out[k] = static_cast<float>(std::sqrt(re * re + im * im));
  }
  return out;
}

std::vector<float> uniform(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_CASE("identity network returns its input") {
  std::vector<float> w(16, 0.0f);
  for (int i = 0; i < 4; ++i) w[static_cast<std::size_t>(i * 5)] = 1.0f;
  DenseModel m({layer(4, 4, Activation::Linear, w, {0, 0, 0, 0})});
  Tensor x = floats({4, 1}, {0.5f, -2.0f, 3.25f, 0.0f});
  Tensor y = infer(m, x, {4, 1});
  CHECK(y == x);
}

TEST_CASE("ReLU layer clamps negatives") {
  DenseModel m({layer(2, 3, Activation::Relu, {1, 0, 0, 1, 1, -1}, {0, 0, 0.5f})});
  Tensor y = infer(m, floats({2}, {2.0f, 3.0f}));
  CHECK(y.to_floats() == std::vector<float>{2.0f, 3.0f, 0.0f});
  Tensor z = infer(m, floats({2}, {-1.0f, 1.0f}));
  CHECK(z.to_floats() == std::vector<float>{0.0f, 1.0f, 0.0f});
}

TEST_CASE("model construction validates dims and weights") {
  CHECK(error_of([] { DenseModel({layer(2, 1, Activation::Linear, {1}, {0})}); }) == Errc::ModelFormatError);
  CHECK(error_of([] {
          DenseModel({layer(2, 2, Activation::Linear, {1, 0, 0, 1}, {0, 0}),
                      layer(3, 1, Activation::Linear, {1, 1, 1}, {0})});
        }) == Errc::ModelFormatError);
  CHECK(error_of([] { DenseModel({layer(1, 1, Activation::Linear, {NAN}, {0})}); }) == Errc::ModelFormatError);
}

TEST_CASE("inference shape errors") {
  DenseModel m({layer(2, 1, Activation::Linear, {1, 1}, {0})});
  CHECK(error_of([&] { infer(m, floats({3}, {1, 2, 3})); }) == Errc::ShapeMismatch);
  CHECK(error_of([&] { infer(m, floats({2}, {1, 2}), {2}); }) == Errc::ShapeMismatch);
}

TEST_CASE("the sine fixture approximates sin") {
  DenseModel m = load_rmodel(testing::runes_dir() / "sine" / "sine.rmodel");
  CHECK(m.input_size() == 1);
  CHECK(m.output_size() == 1);
  float half_pi = std::numbers::pi_v<float> / 2;
  float y = infer(m, floats({1, 1}, {half_pi}), {1}).at_f32(0);
  CHECK(std::fabs(y - 1.0f) <= 0.15f);
  for (float x = -1.0f; x <= 1.0f; x += 0.125f) {
    CAPTURE(x);
    CHECK(std::fabs(infer(m, floats({1}, {x})).at_f32(0) - std::sin(x)) <= 0.15f);
  }
}

TEST_CASE("FFT of ones(8) puts everything in bin 0") {
  Tensor y = fft_magnitude(floats({8}, std::vector<float>(8, 1.0f)));
  std::vector<float> v = y.to_floats();
  CHECK(v[0] == doctest::Approx(8.0f).epsilon(1e-6));
  for (std::size_t k = 1; k < 8; ++k) CHECK(std::fabs(v[k]) <= 1e-6f);
}

TEST_CASE("FFT of zeros(150) is zeros with the same shape") {
  Tensor x = Tensor::zeros(DType::F32, {150, 1});
  Tensor y = fft_magnitude(x);
  CHECK(y.dims() == Shape{150, 1});
  for (float v : y.to_floats()) CHECK(v == 0.0f);
}

TEST_CASE("FFT of a cosine peaks at its bin and the mirror") {
  const std::size_t n = 16;
  std::vector<float> x(n);
  for (std::size_t t = 0; t < n; ++t) x[t] = static_cast<float>(std::cos(2.0 * std::numbers::pi * 2.0 * t / n));
  std::vector<float> v = fft_magnitude(floats({n}, x)).to_floats();
  for (std::size_t k = 0; k < n; ++k) {
    CAPTURE(k);
    if (k == 2 || k == n - 2) CHECK(v[k] == doctest::Approx(8.0f).epsilon(1e-5));
    else CHECK(std::fabs(v[k]) <= 1e-5f);
  }
}

TEST_CASE("FFT agrees with a long-double DFT within 1e-6 max-abs") {
  std::mt19937_64 rng(31337);
  for (std::size_t n : {8u, 150u, 256u, 1024u}) {
    CAPTURE(n);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<float> x = uniform(rng, n);
      std::vector<float> got = fft_magnitude(floats({static_cast<std::uint32_t>(n), 1}, x)).to_floats();
      std::vector<float> want = dft_oracle(x);
      for (std::size_t k = 0; k < n; ++k) worst = std::max(worst, std::fabs(static_cast<double>(got[k]) - want[k]));
    }
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("FFT magnitudes satisfy Parseval") {
  std::mt19937_64 rng(8);
  for (std::size_t n : {8u, 100u, 150u, 512u}) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<float> x = uniform(rng, n);
      std::vector<float> y = fft_magnitude(floats({static_cast<std::uint32_t>(n)}, x)).to_floats();
      double e_time = 0, e_freq = 0;
      for (float v : x) e_time += static_cast<double>(v) * v;
      for (float v : y) e_freq += static_cast<double>(v) * v;
      CHECK(std::fabs(e_freq / static_cast<double>(n) - e_time) <= 1e-5 * e_time);
    }
  }
}

TEST_CASE("normalize examples") {
  CHECK(normalize(floats({3}, {1, 2, 3})).to_floats() == std::vector<float>{0.0f, 0.5f, 1.0f});
  CHECK(normalize(floats({2, 1}, {4, 4})).to_floats() == std::vector<float>{0.0f, 0.0f});
  CHECK(normalize(floats({2, 1}, {4, 4})).dims() == Shape{2, 1});
}

TEST_CASE("normalize maps into [0, 1] and hits both ends") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    std::size_t n = 2 + rng() % 300;
    std::vector<float> x = uniform(rng, n);
    for (auto& v : x) v *= 100.0f;
    std::vector<float> y = normalize(floats({static_cast<std::uint32_t>(n)}, x)).to_floats();
    auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    CHECK(*lo == 0.0f);
    CHECK(*hi == doctest::Approx(1.0f));
    for (float v : y) CHECK((v >= 0.0f && v <= 1.0f));
  }
}

TEST_CASE("run_block dispatches by id") {
  Tensor x = floats({4}, {1, 2, 3, 4});
  CHECK(run_block(BlockId::Fft, x) == fft_magnitude(x));
  CHECK(run_block(BlockId::Normalize, x) == normalize(x));
}

TEST_CASE(".rmodel round-trips and rejects corruption") {
  std::mt19937_64 rng(12);
  DenseModel m({layer(3, 4, Activation::Tanh, uniform(rng, 12), uniform(rng, 4)),
                layer(4, 2, Activation::Relu, uniform(rng, 8), uniform(rng, 2))});
  Bytes bytes = write_rmodel(m);
  CHECK(bytes[0] == 'R');
  CHECK(bytes[3] == 'L');
  CHECK(read_rmodel(bytes) == m);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    Bytes bad = bytes;
    bad[i] ^= 0x10;
    CHECK(error_of([&] { read_rmodel(bad); }) == Errc::ModelFormatError);
  }
  Bytes cut(bytes.begin(), bytes.end() - 5);
  CHECK(error_of([&] { read_rmodel(cut); }) == Errc::ModelFormatError);
  CHECK(error_of([] { load_rmodel("/nonexistent/model.rmodel"); }) == Errc::ModelNotFound);
}
