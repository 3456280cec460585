#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rune/bundle.hpp"
#include "rune/codec.hpp"
#include "rune/pipeline.hpp"
#include "rune/runefile.hpp"

/// Host runtime: boots bundles, mediates sensor access and runs pipelines.
namespace rune::runicos {

// ---------------------------------------------------------------------------
// Capability providers

/// Sensor access layer. Every read is counted, and the returned tensor is
/// always f32 shaped [samples, 1] where `samples` comes from the request.
class CapabilityProvider {
 public:
  explicit CapabilityProvider(CapabilityKind kind) : kind_(kind) {}
  virtual ~CapabilityProvider() = default;

  CapabilityKind kind() const noexcept { return kind_; }
  Tensor read(const bundle::CapabilityRequest& request);
  std::uint64_t reads() const noexcept { return reads_.load(); }

  /// Restarts the sample stream. Providers without state ignore it.
  virtual void reseed(std::uint64_t /*seed*/) {}

 protected:
  virtual void produce(const bundle::CapabilityRequest& request, std::span<float> out) = 0;

 private:
  CapabilityKind kind_;
  std::atomic<std::uint64_t> reads_{0};
};

/// Emits the same value for every sample.
class ConstantProvider final : public CapabilityProvider {
 public:
  ConstantProvider(CapabilityKind kind, float value) : CapabilityProvider(kind), value_(value) {}

 protected:
  void produce(const bundle::CapabilityRequest&, std::span<float> out) override;

 private:
  float value_;
};

/// Uniform samples in [-1, 1) from a seeded mt19937_64 stream. The float
/// conversion uses the top 24 bits so the sequence is identical on every
/// standard library.
class SeededProvider final : public CapabilityProvider {
 public:
  SeededProvider(CapabilityKind kind, std::uint64_t seed) : CapabilityProvider(kind), rng_(seed) {}
  void reseed(std::uint64_t seed) override { rng_.seed(seed); }

 protected:
  void produce(const bundle::CapabilityRequest&, std::span<float> out) override;

 private:
  std::mt19937_64 rng_;
};

/// Replays a raw little-endian f32 file, wrapping at the end.
class FileProvider final : public CapabilityProvider {
 public:
  FileProvider(CapabilityKind kind, const std::filesystem::path& path);
  void reseed(std::uint64_t) override { pos_ = 0; }

 protected:
  void produce(const bundle::CapabilityRequest&, std::span<float> out) override;

 private:
  std::vector<float> samples_;
  std::size_t pos_ = 0;
};

using ProviderMap = std::map<CapabilityKind, std::shared_ptr<CapabilityProvider>>;

// ---------------------------------------------------------------------------
// Output sinks

class OutputSink {
 public:
  virtual ~OutputSink() = default;
  virtual void write(const Tensor& t) = 0;
};

/// One line per inference: the tensor's elements as shortest round-trip
/// decimal floats separated by single spaces.
class SerialSink final : public OutputSink {
 public:
  explicit SerialSink(std::ostream& out) : out_(out) {}
  void write(const Tensor& t) override;

 private:
  std::ostream& out_;
};

class NullSink final : public OutputSink {
 public:
  void write(const Tensor&) override {}
};

/// Keeps every written tensor; for tests and the device simulator.
class CaptureSink final : public OutputSink {
 public:
  void write(const Tensor& t) override { tensors.push_back(t); }
  std::vector<Tensor> tensors;
};

std::string render_serial_line(const Tensor& t);

// ---------------------------------------------------------------------------
// Device and instance

struct DeviceProfile {
  std::string name;
  ProviderMap providers;
  std::uint64_t memory_budget = 8u << 20;
  std::shared_ptr<OutputSink> serial;  // null discards output

  /// Binds a provider; a kind may only be bound once.
  DeviceProfile& add(std::shared_ptr<CapabilityProvider> provider);
  bool has(CapabilityKind kind) const { return providers.contains(kind); }
};

enum class InstanceState : std::uint8_t { Loaded = 0, Manifested = 1, Ready = 2, Faulted = 3 };
std::string_view to_string(InstanceState s) noexcept;

/// Health counters (the LibSaga role). Counters only grow.
struct SagaMetrics {
  std::uint64_t invocations = 0;
  std::uint64_t total_exec_nanos = 0;
  std::optional<std::string> last_error;
  std::chrono::system_clock::time_point boot_time{};
  InstanceState state = InstanceState::Loaded;
};

/// A booted bundle bound to a device. Confined to one thread at a time,
/// except health(), which may be called concurrently.
class RuneInstance {
 public:
  RuneInstance(RuneInstance&&) noexcept = default;
  RuneInstance& operator=(RuneInstance&&) noexcept = default;

  InstanceState state() const noexcept { return state_; }
  const bundle::RuneBundle& bundle() const noexcept { return bundle_; }
  const DeviceProfile& device() const noexcept { return device_; }
  const std::set<CapabilityKind>& granted() const noexcept { return granted_; }
  std::size_t bundle_size() const noexcept { return bundle_size_; }
  /// Bytecode instructions started since load.
  std::uint64_t executed_instructions() const noexcept { return executed_; }
  /// Static working-set estimate checked by manifest(); set once manifested.
  std::uint64_t memory_required() const noexcept { return memory_required_; }

  SagaMetrics health() const;

 private:
  friend RuneInstance load(ByteView, DeviceProfile);
  friend bundle::Manifest manifest(RuneInstance&);
  friend Tensor call(RuneInstance&, Codec);

  RuneInstance() : saga_(std::make_unique<Saga>()) {}
  void fault(const std::string& message);

  struct Saga {
    mutable std::mutex mu;
    SagaMetrics metrics;
  };

  bundle::RuneBundle bundle_;
  std::vector<pipeline::DenseModel> models_;
  DeviceProfile device_;
  std::set<CapabilityKind> granted_;
  InstanceState state_ = InstanceState::Loaded;
  std::size_t bundle_size_ = 0;
  std::uint64_t executed_ = 0;
  std::uint64_t memory_required_ = 0;
  std::unique_ptr<Saga> saga_;
  Bytes boundary_;
};

/// Decodes and digest-checks a bundle and parses its models. Touches no
/// capability. The result is LOADED.
RuneInstance load(ByteView bundle_bytes, DeviceProfile device);

/// Matches every requested capability against the device and checks the
/// memory budget. On success the instance is READY with grants recorded;
/// otherwise it is FAULTED for good and CapabilityDenied or
/// InsufficientMemory is thrown.
bundle::Manifest manifest(RuneInstance& instance);

/// Runs the bytecode once. Each tensor handed between stages is encoded
/// with `codec` and decoded again on the other side. Requires READY.
Tensor call(RuneInstance& instance, Codec codec);

SagaMetrics health(const RuneInstance& instance);

/// Runs the same stages directly on tensors, with no boundary encoding.
/// `models` is indexed like RunefileAst::models.
Tensor run_native(const runefile::PipelineGraph& graph, std::span<const pipeline::DenseModel> models,
                  const ProviderMap& providers, OutputSink* sink = nullptr);

}  // namespace rune::runicos
