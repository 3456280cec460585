#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iterator>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "rune/bundle.hpp"
#include "rune/deploy/hammer.hpp"

namespace dep = rune::deploy;

namespace {

std::string default_registry() {
  if (const char* env = std::getenv("HMR_REGISTRY")) return env;
  return "targets.conf";
}

std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

std::string iso_time(std::chrono::system_clock::time_point t) {
  std::time_t secs = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int cmd_ls(const std::string& registry, int timeout_ms) {
  auto targets = dep::targets_ls(dep::load_registry(registry), dep::Millis{timeout_ms});
  std::cout << dep::render_targets_table(targets);
  return 0;
}

int cmd_cast(const std::string& registry, const std::string& target_id, const std::string& rune_path, int timeout_ms) {
  const auto targets = dep::load_registry(registry);
  const dep::Target& target = dep::find_target(targets, target_id);

  std::ifstream in(rune_path, std::ios::binary);
  if (!in) rune::fail(rune::Errc::IoError, "cannot read " + rune_path);
  rune::Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const rune::bundle::Manifest manifest = rune::bundle::decode_bundle(bytes).manifest;

  std::cout << "Deploying " << rune_path << " to target " << target.locator << "\n";
  dep::CastOptions opts;
  opts.timeout = dep::Millis{timeout_ms};
  opts.on_provider = [](const dep::Identity& id) {
    std::cout << "Provider with fqdn=" << id.fqdn << " found\n";
  };
  opts.progress = [&](dep::CastStage stage, int pct) {
    if (pct != 100) return;
    switch (stage) {
      case dep::CastStage::VerifyProvider: std::cout << "Verifying provider: 100%\n"; break;
      case dep::CastStage::Upload: std::cout << "Uploading rune: 100%\n"; break;
      case dep::CastStage::VerifyRune: std::cout << "Verifying rune: 100%\n"; break;
      case dep::CastStage::CapabilityCheck:
        for (const auto& c : manifest.capabilities) std::cout << "Capability: " << rune::to_string(c.kind) << " OK: 100%\n";
        break;
    }
    std::cout.flush();
  };
  dep::CastSession s = dep::cast(target, bytes, opts);
  if (!s.ok()) {
    std::cerr << "error: " << rune::to_string(s.error->code()) << " during " << dep::to_string(s.started.back())
              << ": " << s.error->what() << "\n";
    return 1;
  }
  return 0;
}

int cmd_health(const std::string& registry, const std::string& target_id, int timeout_ms) {
  const auto targets = dep::load_registry(registry);
  dep::HealthReport rep = dep::health_query(dep::find_target(targets, target_id), dep::Millis{timeout_ms});
  const auto& m = rep.metrics;
  std::cout << "state: " << rune::runicos::to_string(m.state) << "\n"
            << "invocations: " << m.invocations << "\n"
            << "total_exec_nanos: " << m.total_exec_nanos << "\n"
            << "bundle_digest: " << hex32(rep.bundle_digest) << "\n"
            << "boot_time: " << iso_time(m.boot_time) << "\n"
            << "last_error: " << m.last_error.value_or("-") << "\n";
  return 0;
}

int cmd_invoke(const std::string& registry, const std::string& target_id, std::uint64_t seed,
               const std::string& codec, int timeout_ms) {
  const auto targets = dep::load_registry(registry);
  rune::Codec c = codec == "varint" ? rune::Codec::Varint : rune::Codec::Fixed;
  rune::Tensor out = dep::invoke(dep::find_target(targets, target_id), seed, c, dep::Millis{timeout_ms});
  std::cout << rune::runicos::render_serial_line(out) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discover devices and deploy runes to them"};
  app.require_subcommand(1);
  std::string registry = default_registry();
  int timeout_ms = 3000;
  app.add_option("--registry", registry, "Target registry file (default: $HMR_REGISTRY or targets.conf)");
  app.add_option("--timeout-ms", timeout_ms, "Per-request timeout")->check(CLI::PositiveNumber);

  auto* targets = app.add_subcommand("targets", "Manage targets");
  targets->require_subcommand(1);
  auto* ls = targets->add_subcommand("ls", "List registered targets and probe them");

  std::string target_id;
  std::string rune_path;
  auto* cast = targets->add_subcommand("cast", "Deploy a rune to a target");
  cast->add_option("-t,--target", target_id, "Target locator or name")->required();
  cast->add_option("rune", rune_path, "Path to the .rune bundle")->required();

  auto* health = app.add_subcommand("health", "Query the health counters of a target");
  health->add_option("-t,--target", target_id, "Target locator or name")->required();

  std::uint64_t seed = 0;
  std::string codec = "fixed";
  auto* invoke = app.add_subcommand("invoke", "Run the deployed rune once");
  invoke->add_option("-t,--target", target_id, "Target locator or name")->required();
  invoke->add_option("--seed", seed, "Provider seed");
  invoke->add_option("--codec", codec, "Boundary codec")->check(CLI::IsMember({"fixed", "varint"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (ls->parsed()) return cmd_ls(registry, timeout_ms);
    if (cast->parsed()) return cmd_cast(registry, target_id, rune_path, timeout_ms);
    if (health->parsed()) return cmd_health(registry, target_id, timeout_ms);
    if (invoke->parsed()) return cmd_invoke(registry, target_id, seed, codec, timeout_ms);
  } catch (const rune::Error& e) {
    std::cerr << "error: " << rune::to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "hmr: internal error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
