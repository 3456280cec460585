#include "rune/deploy/hammer.hpp"

#include <fstream>
#include <future>
#include <iterator>

#include "rune/bundle.hpp"
#include "rune/deploy/transport.hpp"

namespace rune::deploy {

std::string_view to_string(CastStage s) noexcept {
  switch (s) {
    case CastStage::VerifyProvider: return "VERIFY_PROVIDER";
    case CastStage::Upload: return "UPLOAD";
    case CastStage::VerifyRune: return "VERIFY_RUNE";
    case CastStage::CapabilityCheck: return "CAPABILITY_CHECK";
  }
  return "?";
}

std::string_view to_string(StageStatus s) noexcept {
  switch (s) {
    case StageStatus::NotStarted: return "not-started";
    case StageStatus::Running: return "running";
    case StageStatus::Done: return "done";
    case StageStatus::Failed: return "failed";
  }
  return "?";
}

namespace {

class Link {
 public:
  Link(const Target& target, Millis timeout)
      : stream_(connect(target.locator, target.type, timeout)), timeout_(timeout) {}
  ~Link() { stream_->close(); }

  WireFrame request(MsgType type, Bytes payload, MsgType expect) {
    write_frame(*stream_, {type, std::move(payload)});
    return receive(expect);
  }

  void send_encoded(const Bytes& frame) { stream_->write_all(frame); }

  WireFrame receive(MsgType expect) {
    WireFrame f = read_frame(*stream_, timeout_);
    if (f.type == MsgType::Error) {
      WireError e = parse_error(f);
      throw Error(e.code, e.message);
    }
    if (f.type != expect) {
      fail(Errc::ProtocolError, "expected " + std::string(to_string(expect)) + ", got " + std::string(to_string(f.type)));
    }
    return f;
  }

 private:
  std::unique_ptr<Stream> stream_;
  Millis timeout_;
};

}  // namespace

std::optional<std::string> ping(const Target& target, Millis timeout) {
  try {
    Link link(target, timeout);
    return decode_pong(link.request(MsgType::Ping, {}, MsgType::Pong).payload);
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::vector<Target> targets_ls(std::vector<Target> targets, Millis timeout) {
  std::vector<std::future<bool>> probes;
  probes.reserve(targets.size());
  for (const auto& t : targets) {
    probes.push_back(std::async(std::launch::async, [t, timeout] { return ping(t, timeout).has_value(); }));
  }
  for (std::size_t i = 0; i < targets.size(); ++i) targets[i].available = probes[i].get();
  return targets;
}

CastSession cast(const Target& target, ByteView bundle_bytes, const CastOptions& options) {
  bundle::RuneBundle decoded = bundle::decode_bundle(bundle_bytes);

  CastSession session;
  session.target = target;
  session.bundle_digest = decoded.digest;
  CastStage current = CastStage::VerifyProvider;
  auto progress = [&](int pct) {
    if (options.progress) options.progress(current, pct);
  };
  auto begin = [&](CastStage s) {
    current = s;
    session.stages[static_cast<std::size_t>(s)] = StageStatus::Running;
    session.started.push_back(s);
    progress(0);
  };
  auto finish = [&] {
    session.stages[static_cast<std::size_t>(current)] = StageStatus::Done;
    progress(100);
  };

  try {
    begin(CastStage::VerifyProvider);
    std::optional<Link> link;
    try {
      link.emplace(target, options.timeout);
    } catch (const Error& e) {
      fail(Errc::TargetUnreachable, e.what());
    }
    Identity id;
    try {
      id = decode_identity(link->request(MsgType::Identify, encode_identify(kProtocolVersion), MsgType::Identity).payload);
    } catch (const Error& e) {
      fail(e.code() == Errc::IoError ? Errc::TargetUnreachable : Errc::ProviderMismatch, e.what());
    }
    if (id.version != kProtocolVersion) {
      fail(Errc::ProviderMismatch, "device speaks protocol version " + std::to_string(id.version));
    }
    if (id.fqdn.rfind("runicos:", 0) != 0) {
      fail(Errc::ProviderMismatch, "provider '" + id.fqdn + "' is not a RunicOS host");
    }
    if (id.name != target.name) {
      fail(Errc::ProviderMismatch, "registry expects '" + target.name + "' but device is '" + id.name + "'");
    }
    session.provider = id;
    finish();
    if (options.on_provider) options.on_provider(id);

    try {
      begin(CastStage::Upload);
      auto size = static_cast<std::uint32_t>(bundle_bytes.size());
      link->request(MsgType::CastBegin, encode_cast_begin({size, crc32(bundle_bytes)}), MsgType::Ack);
      std::size_t chunks = (bundle_bytes.size() + kMaxChunk - 1) / kMaxChunk;
      for (std::size_t i = 0; i < chunks; ++i) {
        std::size_t off = i * kMaxChunk;
        ByteView piece = bundle_bytes.subspan(off, std::min(kMaxChunk, bundle_bytes.size() - off));
        Bytes frame = encode_frame({MsgType::CastChunk, encode_cast_chunk(static_cast<std::uint32_t>(off), piece)});
        if (options.tamper) options.tamper(i, frame);
        link->send_encoded(frame);
        link->receive(MsgType::Ack);
        if (i + 1 < chunks) progress(static_cast<int>((i + 1) * 100 / chunks));
      }
      finish();

      begin(CastStage::VerifyRune);
      link->request(MsgType::CastVerify, {}, MsgType::Ack);
      finish();
    } catch (const Error& e) {
      fail(Errc::TransferCorrupt, e.what());
    }

    begin(CastStage::CapabilityCheck);
    link->request(MsgType::CastCommit, {}, MsgType::Ack);
    finish();
  } catch (const Error& e) {
    session.stages[static_cast<std::size_t>(current)] = StageStatus::Failed;
    session.error = e;
  }
  return session;
}

CastSession cast_file(const Target& target, const std::filesystem::path& rune_path, const CastOptions& options) {
  std::ifstream in(rune_path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot read " + rune_path.string());
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return cast(target, bytes, options);
}

HealthReport health_query(const Target& target, Millis timeout) {
  Link link(target, timeout);
  return decode_health(link.request(MsgType::Health, {}, MsgType::HealthReport).payload);
}

Tensor invoke(const Target& target, std::uint64_t seed, Codec codec, Millis timeout) {
  Link link(target, timeout);
  WireFrame f = link.request(MsgType::Invoke, encode_invoke({seed, codec}), MsgType::InvokeResult);
  try {
    return decode_tensor(f.payload, Codec::Fixed);
  } catch (const Error& e) {
    fail(Errc::ProtocolError, std::string("bad INVOKE_RESULT: ") + e.what());
  }
}

}  // namespace rune::deploy
