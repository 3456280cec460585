#include <csignal>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rune/deploy/daemon.hpp"

namespace dep = rune::deploy;

int main(int argc, char** argv) {
  CLI::App app{"Simulated RunicOS device speaking the hammer wire protocol"};
  std::string name = "Portenta H7";
  std::string listen_at = "127.0.0.1:0";
  std::string transport = "tcp";
  std::vector<std::string> caps{"audio", "rand"};
  std::uint64_t memory = 8u << 20;
  std::uint64_t seed = 0;
  std::string fqdn = "runicos:sim";
  bool echo = false;
  app.add_option("--name", name, "Device name reported in PONG and IDENTITY");
  app.add_option("--listen", listen_at, "host:port to listen on (port 0 picks one)");
  app.add_option("--transport", transport, "Transport type")->check(CLI::IsMember({"tcp", "TCP"}));
  app.add_option("--caps", caps, "Capabilities the device provides")->delimiter(',');
  app.add_option("--memory", memory, "Memory budget in bytes");
  app.add_option("--seed", seed, "Initial provider seed");
  app.add_option("--fqdn", fqdn, "Provider fqdn reported in IDENTITY");
  app.add_flag("--serial", echo, "Print SERIAL output lines to stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  // Block the stop signals before any thread starts so only sigwait sees them.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

  try {
    rune::runicos::DeviceProfile profile;
    profile.name = name;
    profile.memory_budget = memory;
    for (const auto& c : caps) {
      std::string upper;
      for (char ch : c) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      auto kind = rune::parse_capability_kind(upper);
      if (!kind) rune::fail(rune::Errc::InvalidArgument, "unknown capability '" + c + "'");
      profile.add(std::make_shared<rune::runicos::SeededProvider>(*kind, seed));
    }
    if (echo) profile.serial = std::make_shared<rune::runicos::SerialSink>(std::cout);

    dep::DaemonOptions opts;
    opts.fqdn = fqdn;
    dep::DeviceDaemon daemon(profile, dep::listen(listen_at, dep::TransportType::Tcp), opts);
    daemon.start();
    std::cout << "listening on " << daemon.locator() << std::endl;

    int sig = 0;
    sigwait(&stop_signals, &sig);
    daemon.stop();
    return 0;
  } catch (const rune::Error& e) {
    std::cerr << "rune-device: " << rune::to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  }
}
