#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rune/deploy/transport.hpp"

namespace rune::deploy {

struct Target {
  std::string locator;
  TransportType type = TransportType::Tcp;
  std::string name;
  bool available = false;

  friend bool operator==(const Target&, const Target&) = default;
};

/// One `locator type name` entry per line; the name is the rest of the line
/// and may contain spaces. Blank lines and `#` comments are skipped.
/// Duplicate locators are rejected with InvalidArgument.
std::vector<Target> parse_registry(std::string_view text);
std::string render_registry(const std::vector<Target>& targets);

/// A missing file is an empty registry.
std::vector<Target> load_registry(const std::filesystem::path& path);

/// Looks a target up by locator, then by name. Unknown ids throw
/// TargetUnreachable; a name shared by several targets throws
/// InvalidArgument.
const Target& find_target(const std::vector<Target>& targets, std::string_view id);

/// Table with the columns Target, Type, Name, Available.
std::string render_targets_table(const std::vector<Target>& targets);

}  // namespace rune::deploy
