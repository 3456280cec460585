#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rune/forge.hpp"

namespace {

// Errors that point at a bug in the toolchain rather than the input.
bool is_internal(rune::Errc code) {
  return code == rune::Errc::DanglingReference || code == rune::Errc::Malformed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compile Runefiles into .rune bundles"};
  app.require_subcommand(1);

  std::string runefile;
  std::string out;
  bool json = false;
  auto* build = app.add_subcommand("build", "Compile a Runefile");
  build->add_option("runefile", runefile, "Path to the Runefile")->required();
  build->add_option("-o,--output", out, "Output bundle path (default: <dir>/<stem>.rune)");
  build->add_flag("--json", json, "Print the build report as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    std::optional<std::filesystem::path> out_path;
    if (!out.empty()) out_path = out;
    rune::forge::BuildReport report = rune::forge::build(runefile, out_path);
    for (const auto& w : report.warnings) std::cerr << runefile << ": warning: " << w << "\n";
    if (json) {
      std::cout << report.to_json() << "\n";
    } else {
      std::cout << report.summary();
    }
    return 0;
  } catch (const rune::Error& e) {
    std::cerr << runefile;
    if (e.where()) {
      std::cerr << ":" << e.where()->line;
      if (e.where()->column) std::cerr << ":" << e.where()->column;
    }
    std::cerr << ": error: " << rune::to_string(e.code()) << ": " << e.what() << "\n";
    return is_internal(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "rune: internal error: " << e.what() << "\n";
    return 2;
  }
}
