#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "rune/deploy/messages.hpp"
#include "rune/deploy/transport.hpp"
#include "rune/runicos.hpp"

namespace rune::deploy {

struct DaemonOptions {
  /// Reported in IDENTITY.
  std::string fqdn = "runicos:sim";
  /// Largest bundle accepted by CAST_BEGIN.
  std::uint32_t max_bundle_bytes = 16u << 20;
  /// Idle time before a silent connection is dropped.
  std::chrono::milliseconds idle_timeout{30000};
};

/// Simulated device hosting RunicOS behind the wire protocol. One thread
/// accepts connections and each connection gets its own thread; the hosted
/// instance is mutated only under `instance_mu_`.
class DeviceDaemon {
 public:
  DeviceDaemon(runicos::DeviceProfile profile, std::unique_ptr<Listener> listener, DaemonOptions options = {});
  ~DeviceDaemon();
  DeviceDaemon(const DeviceDaemon&) = delete;
  DeviceDaemon& operator=(const DeviceDaemon&) = delete;

  /// Serves in a background thread.
  void start();
  /// Serves on the calling thread until stop().
  void run();
  void stop();

  std::string locator() const { return locator_; }
  const runicos::DeviceProfile& profile() const { return profile_; }

  /// Digest of the hosted bundle, if any.
  std::optional<std::uint32_t> deployed_digest() const;
  std::optional<HealthReport> health() const;
  std::uint64_t connections_served() const { return connections_.load(); }

 private:
  struct Connection {
    std::shared_ptr<Stream> stream;
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };

  void accept_loop();
  void serve(Stream& stream);
  void reap(bool all);

  runicos::DeviceProfile profile_;
  std::unique_ptr<Listener> listener_;
  DaemonOptions options_;
  std::string locator_;

  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::mutex conns_mu_;
  std::list<Connection> conns_;
  std::atomic<std::uint64_t> connections_{0};

  // Serializes every RuneInstance mutation: call() and replacement.
  std::mutex instance_mu_;
  // Guards the pointer itself so health queries never wait on a call.
  mutable std::mutex slot_mu_;
  std::shared_ptr<runicos::RuneInstance> instance_;
};

}  // namespace rune::deploy
