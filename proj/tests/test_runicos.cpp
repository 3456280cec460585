#include <random>
#include <sstream>

#include "doctest.h"
#include "rune/forge.hpp"
#include "rune/runicos.hpp"
#include "support.hpp"

using namespace rune;
using namespace rune::runicos;
namespace fs = std::filesystem;

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

forge::Compilation compile_rune(const std::string& dir) {
  fs::path base = testing::runes_dir() / dir;
  std::string src = forge::read_text_file(base / "Runefile");
  return forge::compile(src, [&](const runefile::RunefileAst& ast) { return forge::read_model_blobs(ast, base); });
}

DeviceProfile device(std::initializer_list<CapabilityKind> kinds, std::uint64_t seed = 1) {
  DeviceProfile d;
  d.name = "test board";
  for (auto k : kinds) d.add(std::make_shared<SeededProvider>(k, seed));
  return d;
}

bundle::CapabilityRequest request(CapabilityKind k, std::uint32_t samples) {
  bundle::CapabilityRequest r;
  r.kind = k;
  r.params.emplace_back("samples", samples);
  return r;
}

std::uint64_t total_reads(const DeviceProfile& d) {
  std::uint64_t n = 0;
  for (const auto& [k, p] : d.providers) n += p->reads();
  return n;
}

}  // namespace

TEST_CASE("load, manifest and call the audio example rune") {
  auto c = compile_rune("audio");
  auto dev = device({CapabilityKind::Audio, CapabilityKind::Rand});
  RuneInstance inst = load(c.bundle, dev);
  CHECK(inst.state() == InstanceState::Loaded);
  CHECK(inst.health().state == InstanceState::Loaded);
  CHECK(total_reads(dev) == 0);

  bundle::Manifest m = manifest(inst);
  CHECK(m == c.manifest);
  CHECK(inst.state() == InstanceState::Ready);
  CHECK(inst.granted() == std::set<CapabilityKind>{CapabilityKind::Audio});
  CHECK(total_reads(dev) == 0);

  Tensor out = call(inst, Codec::Fixed);
  CHECK(out.dims() == Shape{1});
  CHECK(dev.providers.at(CapabilityKind::Audio)->reads() == 1);
  CHECK(dev.providers.at(CapabilityKind::Rand)->reads() == 0);
  CHECK(inst.executed_instructions() == 4);
}

TEST_CASE("memory budget is checked at manifest time") {
  bundle::Manifest m;
  m.capabilities.push_back(request(CapabilityKind::Audio, 20000));
  Bytes b = bundle::encode_bundle(m,
                                  {bundle::Instruction::read_cap(CapabilityKind::Audio),
                                   bundle::Instruction::proc(BlockId::Fft), bundle::Instruction::write_out()},
                                  {});
  auto roomy = device({CapabilityKind::Audio});
  roomy.memory_budget = 1u << 20;
  RuneInstance ok = load(b, roomy);
  CHECK_NOTHROW(manifest(ok));
  CHECK(ok.memory_required() > 64u * 1024);
  CHECK(ok.memory_required() <= 1u << 20);

  auto small = device({CapabilityKind::Audio});
  small.memory_budget = 64u * 1024;
  RuneInstance bad = load(b, small);
  CHECK(error_of([&] { manifest(bad); }) == Errc::InsufficientMemory);
  CHECK(bad.state() == InstanceState::Faulted);
  CHECK(error_of([&] { call(bad, Codec::Fixed); }) == Errc::Faulted);
  CHECK(total_reads(small) == 0);
}

TEST_CASE("call before manifest is refused") {
  auto c = compile_rune("sine");
  auto dev = device({CapabilityKind::Rand});
  RuneInstance inst = load(c.bundle, dev);
  CHECK(error_of([&] { call(inst, Codec::Fixed); }) == Errc::NotManifested);
  CHECK(total_reads(dev) == 0);
  CHECK(inst.health().invocations == 0);
}

TEST_CASE("reading an ungranted capability faults the instance") {
  bundle::Manifest m;
  m.capabilities.push_back(request(CapabilityKind::Audio, 4));
  bundle::EncodeOptions loose;
  loose.check_capability_references = false;
  Bytes b = bundle::encode_bundle(
      m, {bundle::Instruction::read_cap(CapabilityKind::Rand), bundle::Instruction::write_out()}, {}, loose);
  auto dev = device({CapabilityKind::Audio, CapabilityKind::Rand});
  RuneInstance inst = load(b, dev);
  manifest(inst);
  CHECK(error_of([&] { call(inst, Codec::Fixed); }) == Errc::PermissionViolation);
  CHECK(inst.state() == InstanceState::Faulted);
  SagaMetrics h = inst.health();
  CHECK(h.state == InstanceState::Faulted);
  REQUIRE(h.last_error.has_value());
  CHECK(h.last_error->find("PermissionViolation") != std::string::npos);
  CHECK(total_reads(dev) == 0);
  CHECK(error_of([&] { call(inst, Codec::Fixed); }) == Errc::Faulted);
}

TEST_CASE("missing device capability is denied before any read") {
  auto c = compile_rune("audio");
  auto dev = device({CapabilityKind::Rand});
  RuneInstance inst = load(c.bundle, dev);
  CHECK(error_of([&] { manifest(inst); }) == Errc::CapabilityDenied);
  CHECK(inst.state() == InstanceState::Faulted);
  CHECK(inst.granted().empty());
  CHECK(total_reads(dev) == 0);
}

TEST_CASE("health counters grow with calls") {
  auto c = compile_rune("sine");
  RuneInstance inst = load(c.bundle, device({CapabilityKind::Rand}));
  manifest(inst);
  SagaMetrics before = inst.health();
  CHECK(before.invocations == 0);
  CHECK(before.boot_time.time_since_epoch().count() > 0);
  std::uint64_t last_nanos = 0;
  for (int i = 1; i <= 5; ++i) {
    call(inst, i % 2 ? Codec::Fixed : Codec::Varint);
    SagaMetrics h = health(inst);
    CHECK(h.invocations == static_cast<std::uint64_t>(i));
    CHECK(h.total_exec_nanos > last_nanos);
    CHECK(h.state == InstanceState::Ready);
    CHECK_FALSE(h.last_error.has_value());
    last_nanos = h.total_exec_nanos;
  }
}

TEST_CASE("manifest grants exactly the requested set, and only when the device covers it") {
  std::mt19937_64 rng(606);
  int granted = 0, denied = 0;
  for (int trial = 0; trial < 400; ++trial) {
    std::set<CapabilityKind> want, have;
    for (auto k : kAllCapabilityKinds) {
      if (rng() % 2) want.insert(k);
      if (rng() % 2) have.insert(k);
    }
    if (want.empty()) want.insert(kAllCapabilityKinds[rng() % 2]);
    bundle::Manifest m;
    for (auto k : want) m.capabilities.push_back(request(k, 1 + static_cast<std::uint32_t>(rng() % 64)));
    Bytes b = bundle::encode_bundle(
        m, {bundle::Instruction::read_cap(*want.begin()), bundle::Instruction::write_out()}, {});
    DeviceProfile dev;
    dev.name = "random";
    for (auto k : have) dev.add(std::make_shared<SeededProvider>(k, trial));

    RuneInstance inst = load(b, dev);
    bool covered = std::includes(have.begin(), have.end(), want.begin(), want.end());
    if (covered) {
      ++granted;
      REQUIRE_NOTHROW(manifest(inst));
      CHECK(inst.granted() == want);
      CHECK(total_reads(dev) == 0);
      call(inst, Codec::Varint);
      CHECK(total_reads(dev) == 1);
    } else {
      ++denied;
      CHECK(error_of([&] { manifest(inst); }) == Errc::CapabilityDenied);
      CHECK(inst.granted().empty());
      CHECK(inst.state() == InstanceState::Faulted);
      CHECK(error_of([&] { call(inst, Codec::Fixed); }) == Errc::Faulted);
      CHECK(inst.executed_instructions() == 0);
      CHECK(total_reads(dev) == 0);
    }
  }
  CHECK(granted > 50);
  CHECK(denied > 50);
}

TEST_CASE("codec choice never changes results") {
  for (const char* dir : {"audio", "sine"}) {
    auto c = compile_rune(dir);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      CAPTURE(dir);
      CAPTURE(seed);
      auto dev_a = device({CapabilityKind::Audio, CapabilityKind::Rand}, seed);
      auto dev_b = device({CapabilityKind::Audio, CapabilityKind::Rand}, seed);
      auto dev_n = device({CapabilityKind::Audio, CapabilityKind::Rand}, seed);
      RuneInstance a = load(c.bundle, dev_a);
      RuneInstance b = load(c.bundle, dev_b);
      manifest(a);
      manifest(b);
      Tensor fixed = call(a, Codec::Fixed);
      Tensor varint = call(b, Codec::Varint);
      Tensor native = run_native(c.graph, c.models, dev_n.providers);
      CHECK(fixed.payload() == varint.payload());
      CHECK(fixed == native);
    }
  }
}

TEST_CASE("run_native rejects an empty pipeline") {
  runefile::PipelineGraph g;
  CHECK(error_of([&] { run_native(g, {}, {}); }) == Errc::EmptyPipeline);
}

TEST_CASE("file provider replays samples and wraps") {
  testing::TempDir tmp;
  std::vector<float> samples{0.25f, -0.5f, 1.0f};
  Bytes raw(samples.size() * 4);
  std::memcpy(raw.data(), samples.data(), raw.size());
  testing::write_file(tmp / "audio.f32", raw);
  FileProvider p(CapabilityKind::Audio, tmp / "audio.f32");
  Tensor t = p.read(request(CapabilityKind::Audio, 5));
  CHECK(t.dims() == Shape{5, 1});
  CHECK(t.to_floats() == std::vector<float>{0.25f, -0.5f, 1.0f, 0.25f, -0.5f});
  p.reseed(0);
  CHECK(p.read(request(CapabilityKind::Audio, 1)).at_f32(0) == 0.25f);
  CHECK(p.reads() == 2);
  CHECK(error_of([&] { FileProvider(CapabilityKind::Audio, tmp / "missing.f32"); }) == Errc::IoError);
}

TEST_CASE("seeded provider is reproducible and in range") {
  SeededProvider a(CapabilityKind::Rand, 9), b(CapabilityKind::Rand, 9);
  Tensor x = a.read(request(CapabilityKind::Rand, 1000));
  CHECK(x == b.read(request(CapabilityKind::Rand, 1000)));
  for (float v : x.to_floats()) CHECK((v >= -1.0f && v < 1.0f));
  a.reseed(9);
  CHECK(a.read(request(CapabilityKind::Rand, 1000)) == x);
}

TEST_CASE("serial sink writes one line per inference") {
  auto c = compile_rune("sine");
  std::ostringstream os;
  auto dev = device({CapabilityKind::Rand}, 3);
  dev.serial = std::make_shared<SerialSink>(os);
  RuneInstance inst = load(c.bundle, dev);
  manifest(inst);
  Tensor a = call(inst, Codec::Fixed);
  Tensor b = call(inst, Codec::Fixed);
  CHECK(os.str() == render_serial_line(a) + "\n" + render_serial_line(b) + "\n");
  CHECK(render_serial_line(testing::floats({3}, {1.5f, -0.0f, 0.1f})) == "1.5 -0 0.1");
}
