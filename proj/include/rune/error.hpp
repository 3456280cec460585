#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rune {

enum class Errc {
  // Runefile front end
  SyntaxError,
  MissingBase,
  DuplicateInstruction,
  UnknownInstruction,
  MissingInstruction,
  DuplicateName,
  UnresolvedName,
  ShapeMismatch,
  NoCapabilitySource,
  InvalidPipeline,
  // Containers and codecs
  DanglingReference,
  BadMagic,
  UnsupportedVersion,
  DigestMismatch,
  Truncated,
  Malformed,
  // Host runtime
  CapabilityDenied,
  InsufficientMemory,
  NotManifested,
  PermissionViolation,
  Faulted,
  EmptyPipeline,
  // Build tooling
  ModelNotFound,
  ModelFormatError,
  IoError,
  // Deployment
  TargetUnreachable,
  ProviderMismatch,
  TransferCorrupt,
  NoRuneDeployed,
  ProtocolError,
  // Benchmarking
  NonPositiveBaseline,
  EmptyRecords,
  InvalidArgument,
};

std::string_view to_string(Errc code) noexcept;

struct SourceLocation {
  std::size_t line = 0;  // 1-based
  std::size_t column = 0;  // 1-based, 0 when unknown
};

/// The single exception type thrown by the toolkit. Callers branch on
/// `code()`; `what()` carries a human-readable message.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);
  Error(Errc code, const std::string& message, SourceLocation where);

  Errc code() const noexcept { return code_; }
  const std::optional<SourceLocation>& where() const noexcept { return where_; }

  /// Byte offset for decode errors, when meaningful.
  std::optional<std::size_t> offset;

 private:
  Errc code_;
  std::optional<SourceLocation> where_;
};

[[noreturn]] void fail(Errc code, const std::string& message);
[[noreturn]] void fail_at(Errc code, std::size_t offset, const std::string& message);

}  // namespace rune
