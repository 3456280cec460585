#include <algorithm>
#include <random>

#include "doctest.h"
#include "rune/bundle.hpp"
#include "support.hpp"

using namespace rune;
using namespace rune::bundle;

namespace {

Manifest sample_manifest() {
  Manifest m;
  CapabilityRequest audio;
  audio.kind = CapabilityKind::Audio;
  audio.params = {{"hz", 16000}, {"samples", 150}, {"sample-size", 1500}};
  m.capabilities.push_back(audio);
  m.models.push_back(ModelInfo{"model", {150, 1}, {1}, 0});
  return m;
}

Bytecode sample_code() {
  return {Instruction::read_cap(CapabilityKind::Audio), Instruction::proc(BlockId::Fft), Instruction::infer(0),
          Instruction::write_out()};
}

Errc error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::InvalidArgument;
}

// A valid bundle of exactly `size` bytes, padded through the model blob.
Bytes bundle_of_size(std::size_t size) {
  Bytes blob;
  Bytes enc = encode_bundle(sample_manifest(), sample_code(), {blob});
  REQUIRE(enc.size() <= size);
  blob.assign(size - enc.size(), 0x5A);
  for (std::size_t i = 0; i < blob.size(); ++i) blob[i] = static_cast<std::uint8_t>(i * 37 + 11);
  enc = encode_bundle(sample_manifest(), sample_code(), {blob});
  REQUIRE(enc.size() == size);
  return enc;
}

}  // namespace

TEST_CASE("bundle starts with RUNE and the format version") {
  Bytes enc = encode_bundle(sample_manifest(), sample_code(), {Bytes{1, 2, 3}});
  REQUIRE(enc.size() > 6);
  CHECK(enc[0] == 0x52);
  CHECK(enc[1] == 0x55);
  CHECK(enc[2] == 0x4E);
  CHECK(enc[3] == 0x45);
  CHECK(enc[4] == 0x01);
  CHECK(enc[5] == 0x00);
}

TEST_CASE("encode then decode recovers every section") {
  Bytes blob{9, 8, 7, 6, 5};
  Bytes enc = encode_bundle(sample_manifest(), sample_code(), {blob});
  RuneBundle b = decode_bundle(enc);
  CHECK(b.format_version == kFormatVersion);
  CHECK(b.bytecode == sample_code());
  REQUIRE(b.model_blobs.size() == 1);
  CHECK(b.model_blobs[0].bytes == blob);
  CHECK(b.model_blobs[0].digest == crc32(blob));
  CHECK(b.manifest.capabilities == sample_manifest().capabilities);
  CHECK(b.manifest.models[0].blob_digest == crc32(blob));
  CHECK(b.manifest.models[0].input_shape == Shape{150, 1});
}

TEST_CASE("encoding is deterministic") {
  CHECK(encode_bundle(sample_manifest(), sample_code(), {Bytes{1}}) ==
        encode_bundle(sample_manifest(), sample_code(), {Bytes{1}}));
}

TEST_CASE("INFER of a missing model is a DanglingReference") {
  Bytecode code = sample_code();
  code[2] = Instruction::infer(1);
  CHECK(error_of([&] { encode_bundle(sample_manifest(), code, {Bytes{1}}); }) == Errc::DanglingReference);
}

TEST_CASE("READ_CAP of an unrequested capability is a DanglingReference") {
  Bytecode code = sample_code();
  code[0] = Instruction::read_cap(CapabilityKind::Rand);
  CHECK(error_of([&] { encode_bundle(sample_manifest(), code, {Bytes{1}}); }) == Errc::DanglingReference);
  EncodeOptions loose;
  loose.check_capability_references = false;
  CHECK_NOTHROW(encode_bundle(sample_manifest(), code, {Bytes{1}}, loose));
}

TEST_CASE("decode errors") {
  CHECK(error_of([] { decode_bundle(Bytes{}); }) == Errc::Truncated);
  CHECK(error_of([] { decode_bundle(Bytes{'R', 'U'}); }) == Errc::Truncated);
  CHECK(error_of([] { decode_bundle(Bytes{'P', 'K', 3, 4, 0, 0, 0, 0, 0, 0, 0, 0}); }) == Errc::BadMagic);

  Bytes enc = encode_bundle(sample_manifest(), sample_code(), {Bytes{1}});
  Bytes v2 = enc;
  v2[4] = 2;
  CHECK(error_of([&] { decode_bundle(v2); }) == Errc::UnsupportedVersion);

  Bytes bad = enc;
  bad[10] ^= 0x01;
  CHECK(error_of([&] { decode_bundle(bad); }) == Errc::DigestMismatch);

  Bytes cut(enc.begin(), enc.begin() + 8);
  CHECK(error_of([&] { decode_bundle(cut); }) == Errc::Truncated);
}

TEST_CASE("flipping any single byte of a 200-byte bundle is rejected") {
  Bytes good = bundle_of_size(200);
  REQUIRE_NOTHROW(decode_bundle(good));
  int rejected = 0;
  for (std::size_t i = 0; i < good.size(); ++i) {
    Bytes bad = good;
    bad[i] ^= 0xFF;
    try {
      decode_bundle(bad);
    } catch (const Error& e) {
      ++rejected;
      if (i < 4) CHECK(e.code() == Errc::BadMagic);
      else if (i < 6) CHECK(e.code() == Errc::UnsupportedVersion);
      else CHECK(e.code() == Errc::DigestMismatch);
    }
  }
  CHECK(rejected == 200);
}

TEST_CASE("random single-bit flips are always rejected") {
  std::mt19937_64 rng(99);
  Bytes good = bundle_of_size(512);
  for (int i = 0; i < 2000; ++i) {
    Bytes bad = good;
    bad[rng() % bad.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
    CHECK_THROWS_AS(decode_bundle(bad), Error);
  }
}

TEST_CASE("every truncation is rejected") {
  Bytes good = bundle_of_size(200);
  for (std::size_t n = 0; n < good.size(); ++n) {
    Bytes part(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(n));
    CHECK_THROWS_AS(decode_bundle(part), Error);
  }
}

TEST_CASE("manifest section round-trips on its own") {
  Manifest m = sample_manifest();
  m.capabilities[0].extras.emplace_back("mode", "stereo");
  ByteWriter w;
  write_manifest(w, m);
  ByteReader r(w.bytes());
  CHECK(read_manifest(r) == m);
  CHECK(r.at_end());
}

TEST_CASE("disassembly lists one instruction per line") {
  std::string text = disassemble(sample_code());
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  CHECK(text.find("READ_CAP") != std::string::npos);
  CHECK(text.find("WRITE_OUT") != std::string::npos);
}
