#pragma once

#include <array>
#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rune/deploy/messages.hpp"
#include "rune/deploy/registry.hpp"
#include "rune/deploy/wire.hpp"

/// Controller side of deployment: discovery, cast, health and invoke.
namespace rune::deploy {

using Millis = std::chrono::milliseconds;
inline constexpr Millis kDefaultTimeout{3000};

/// Probes every target with PING concurrently and fills in `available`.
std::vector<Target> targets_ls(std::vector<Target> targets, Millis timeout = Millis{1000});

/// Device name from PONG, or nullopt when the target does not answer.
std::optional<std::string> ping(const Target& target, Millis timeout = kDefaultTimeout);

enum class CastStage : std::uint8_t { VerifyProvider = 0, Upload = 1, VerifyRune = 2, CapabilityCheck = 3 };
enum class StageStatus : std::uint8_t { NotStarted, Running, Done, Failed };
std::string_view to_string(CastStage s) noexcept;
std::string_view to_string(StageStatus s) noexcept;

struct CastSession {
  Target target;
  std::array<StageStatus, 4> stages{};
  /// Stages in the order they were started.
  std::vector<CastStage> started;
  std::optional<Identity> provider;
  std::uint32_t bundle_digest = 0;
  /// Set when the cast failed.
  std::optional<Error> error;

  bool ok() const { return !error; }
  StageStatus status(CastStage s) const { return stages[static_cast<std::size_t>(s)]; }
};

struct CastOptions {
  Millis timeout = kDefaultTimeout;
  /// Progress in percent for the stage currently running.
  std::function<void(CastStage, int)> progress;
  /// Called once the provider identified itself.
  std::function<void(const Identity&)> on_provider;
  /// Fault injection: may rewrite each encoded CAST_CHUNK frame before it
  /// is sent.
  std::function<void(std::size_t chunk_index, Bytes& frame)> tamper;
};

/// Deploys an encoded bundle. The bundle is decoded locally first and a
/// local failure throws before any connection is made. Failures on the
/// device side are reported through CastSession::error: TargetUnreachable,
/// ProviderMismatch, TransferCorrupt, or the relayed manifest error (for
/// CapabilityDenied the message names the missing kind).
CastSession cast(const Target& target, ByteView bundle, const CastOptions& options = {});
CastSession cast_file(const Target& target, const std::filesystem::path& rune_path, const CastOptions& options = {});

/// Throws NoRuneDeployed when the device hosts nothing.
HealthReport health_query(const Target& target, Millis timeout = kDefaultTimeout);

/// Reseeds the device's providers with `seed` and runs one call.
Tensor invoke(const Target& target, std::uint64_t seed, Codec codec = Codec::Fixed, Millis timeout = kDefaultTimeout);

}  // namespace rune::deploy
