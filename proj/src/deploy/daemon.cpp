#include "rune/deploy/daemon.hpp"

#include "rune/deploy/wire.hpp"

namespace rune::deploy {

namespace {

using runicos::RuneInstance;

struct Staging {
  bool begun = false;
  bool verified = false;
  CastBegin expected;
  Bytes data;
};

// Violations of the protocol itself; the connection is dropped after the
// ERROR frame goes out.
struct Violation {
  Errc code;
  std::string message;
};

[[noreturn]] void violate(Errc code, const std::string& message) { throw Violation{code, message}; }

void require_empty(const WireFrame& f) {
  if (!f.payload.empty()) violate(Errc::ProtocolError, std::string(to_string(f.type)) + " takes no payload");
}

std::optional<CapabilityKind> missing_capability(const bundle::Manifest& m, const runicos::DeviceProfile& device) {
  for (const auto& req : m.capabilities) {
    if (!device.has(req.kind)) return req.kind;
  }
  return std::nullopt;
}

}  // namespace

DeviceDaemon::DeviceDaemon(runicos::DeviceProfile profile, std::unique_ptr<Listener> listener, DaemonOptions options)
    : profile_(std::move(profile)), listener_(std::move(listener)), options_(std::move(options)) {
  locator_ = listener_->locator();
}

DeviceDaemon::~DeviceDaemon() { stop(); }

void DeviceDaemon::start() {
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void DeviceDaemon::run() { accept_loop(); }

void DeviceDaemon::stop() {
  if (stopping_.exchange(true)) {
    if (accept_thread_.joinable()) accept_thread_.join();
    return;
  }
  listener_->close();
  if (accept_thread_.joinable()) accept_thread_.join();
  reap(true);
}

void DeviceDaemon::reap(bool all) {
  std::list<Connection> finished;
  {
    std::lock_guard lock(conns_mu_);
    for (auto it = conns_.begin(); it != conns_.end();) {
      if (all || it->done->load()) {
        if (all) it->stream->close();
        finished.splice(finished.end(), conns_, it++);
      } else {
        ++it;
      }
    }
  }
  for (auto& c : finished) c.thread.join();
}

void DeviceDaemon::accept_loop() {
  while (!stopping_.load()) {
    std::unique_ptr<Stream> accepted = listener_->accept(std::chrono::milliseconds(200));
    reap(false);
    if (!accepted) continue;
    ++connections_;
    std::shared_ptr<Stream> stream = std::move(accepted);
    auto done = std::make_shared<std::atomic<bool>>(false);
    std::lock_guard lock(conns_mu_);
    if (stopping_.load()) {
      stream->close();
      break;
    }
    conns_.push_back({stream, std::thread([this, stream, done] {
                        try {
                          serve(*stream);
                        } catch (...) {
                        }
                        stream->close();
                        done->store(true);
                      }),
                      done});
  }
}

std::optional<std::uint32_t> DeviceDaemon::deployed_digest() const {
  std::lock_guard lock(slot_mu_);
  if (!instance_) return std::nullopt;
  return instance_->bundle().digest;
}

std::optional<HealthReport> DeviceDaemon::health() const {
  std::shared_ptr<RuneInstance> inst;
  {
    std::lock_guard lock(slot_mu_);
    inst = instance_;
  }
  if (!inst) return std::nullopt;
  return HealthReport{inst->health(), inst->bundle().digest};
}

void DeviceDaemon::serve(Stream& stream) {
  Staging staging;
  auto reply = [&](MsgType type, Bytes payload = {}) { write_frame(stream, {type, std::move(payload)}); };
  auto reply_error = [&](Errc code, const std::string& msg, std::optional<CapabilityKind> kind = std::nullopt) {
    write_frame(stream, error_frame(code, msg, kind));
  };

  while (!stopping_.load()) {
    WireFrame frame;
    try {
      frame = read_frame(stream, options_.idle_timeout);
    } catch (const Error& e) {
      if (e.code() == Errc::IoError) return;
      reply_error(e.code(), e.what());
      return;
    }

    try {
      switch (frame.type) {
        case MsgType::Ping:
          require_empty(frame);
          reply(MsgType::Pong, encode_pong(profile_.name));
          break;

        case MsgType::Identify:
          decode_identify(frame.payload);
          reply(MsgType::Identity, encode_identity({options_.fqdn, profile_.name, kProtocolVersion}));
          break;

        case MsgType::CastBegin: {
          CastBegin begin = decode_cast_begin(frame.payload);
          if (begin.size == 0 || begin.size > options_.max_bundle_bytes) {
            violate(Errc::ProtocolError, "bundle size " + std::to_string(begin.size) + " out of range");
          }
          staging = Staging{true, false, begin, {}};
          staging.data.reserve(begin.size);
          reply(MsgType::Ack);
          break;
        }

        case MsgType::CastChunk: {
          if (!staging.begun || staging.verified) violate(Errc::ProtocolError, "CAST_CHUNK outside an upload");
          CastChunk chunk = decode_cast_chunk(frame.payload);
          if (chunk.offset != staging.data.size() ||
              staging.data.size() + chunk.data.size() > staging.expected.size) {
            staging = {};
            violate(Errc::TransferCorrupt, "chunk at offset " + std::to_string(chunk.offset) + " does not fit upload");
          }
          staging.data.insert(staging.data.end(), chunk.data.begin(), chunk.data.end());
          reply(MsgType::Ack);
          break;
        }

        case MsgType::CastVerify: {
          require_empty(frame);
          if (!staging.begun || staging.verified) violate(Errc::ProtocolError, "CAST_VERIFY outside an upload");
          std::string problem;
          if (staging.data.size() != staging.expected.size) {
            problem = "received " + std::to_string(staging.data.size()) + " of " +
                      std::to_string(staging.expected.size) + " bytes";
          } else if (crc32(staging.data) != staging.expected.crc) {
            problem = "bundle CRC-32 mismatch";
          } else {
            try {
              bundle::decode_bundle(staging.data);
            } catch (const Error& e) {
              problem = std::string("bundle rejected: ") + e.what();
            }
          }
          if (!problem.empty()) {
            staging = {};
            reply_error(Errc::TransferCorrupt, problem);
            break;
          }
          staging.verified = true;
          reply(MsgType::Ack);
          break;
        }

        case MsgType::CastCommit: {
          require_empty(frame);
          if (!staging.verified) violate(Errc::ProtocolError, "CAST_COMMIT before a verified upload");
          Bytes data = std::move(staging.data);
          staging = {};
          std::shared_ptr<RuneInstance> fresh;
          try {
            auto inst = runicos::load(data, profile_);
            runicos::manifest(inst);
            fresh = std::make_shared<RuneInstance>(std::move(inst));
          } catch (const Error& e) {
            std::optional<CapabilityKind> kind;
            if (e.code() == Errc::CapabilityDenied) {
              kind = missing_capability(bundle::decode_bundle(data).manifest, profile_);
            }
            reply_error(e.code(), e.what(), kind);
            break;
          }
          {
            std::lock_guard exec(instance_mu_);
            std::lock_guard slot(slot_mu_);
            instance_ = std::move(fresh);
          }
          reply(MsgType::Ack);
          break;
        }

        case MsgType::Invoke: {
          InvokeRequest req = decode_invoke(frame.payload);
          std::optional<Tensor> out;
          std::optional<Error> failure;
          {
            std::lock_guard exec(instance_mu_);
            std::shared_ptr<RuneInstance> inst;
            {
              std::lock_guard slot(slot_mu_);
              inst = instance_;
            }
            if (!inst) {
              failure = Error(Errc::NoRuneDeployed, "no rune deployed");
            } else {
              for (auto& [kind, provider] : profile_.providers) provider->reseed(req.seed);
              try {
                out = runicos::call(*inst, req.codec);
              } catch (const Error& e) {
                failure = e;
              }
            }
          }
          if (failure) {
            reply_error(failure->code(), failure->what());
          } else {
            reply(MsgType::InvokeResult, encode_tensor(*out, Codec::Fixed));
          }
          break;
        }

        case MsgType::Health: {
          require_empty(frame);
          auto rep = health();
          if (!rep) {
            reply_error(Errc::NoRuneDeployed, "no rune deployed");
          } else {
            reply(MsgType::HealthReport, encode_health(*rep));
          }
          break;
        }

        default:
          violate(Errc::ProtocolError, "unexpected " + std::string(to_string(frame.type)) + " frame");
      }
    } catch (const Violation& v) {
      reply_error(v.code, v.message);
      return;
    } catch (const Error& e) {
      // Payload decoding failures.
      staging = {};
      reply_error(e.code(), e.what());
      return;
    }
  }
}

}  // namespace rune::deploy
