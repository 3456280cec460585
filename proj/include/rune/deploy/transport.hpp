#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "rune/bytes.hpp"

namespace rune::deploy {

enum class TransportType : std::uint8_t { Tcp = 0, Loopback = 1 };

std::string_view to_string(TransportType t) noexcept;
std::optional<TransportType> parse_transport(std::string_view text) noexcept;

/// A reliable, ordered byte stream. Failures (peer gone, timeout) throw
/// Error{IoError}.
class Stream {
 public:
  virtual ~Stream() = default;
  virtual void write_all(ByteView data) = 0;
  virtual void read_exact(std::span<std::uint8_t> out, std::chrono::milliseconds timeout) = 0;
  virtual void close() = 0;
};

class Listener {
 public:
  virtual ~Listener() = default;
  /// Returns nullptr if nothing connected within `timeout` or the listener
  /// was closed.
  virtual std::unique_ptr<Stream> accept(std::chrono::milliseconds timeout) = 0;
  virtual void close() = 0;
  /// Address clients should connect to (TCP resolves port 0).
  virtual std::string locator() const = 0;
};

/// TCP locators are `host:port`, optionally prefixed `tcp://`. Loopback
/// locators are arbitrary names registered in this process.
/// Throws Error{TargetUnreachable} when nothing is listening.
std::unique_ptr<Stream> connect(std::string_view locator, TransportType type,
                                std::chrono::milliseconds timeout);
std::unique_ptr<Listener> listen(std::string_view locator, TransportType type);

}  // namespace rune::deploy
