#include "rune/deploy/registry.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>

namespace rune::deploy {

namespace {

std::string_view trim(std::string_view s) {
  auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

std::string_view next_word(std::string_view& rest) {
  rest = trim(rest);
  auto end = rest.find_first_of(" \t");
  std::string_view word = rest.substr(0, end);
  rest = end == std::string_view::npos ? std::string_view{} : rest.substr(end);
  return word;
}

}  // namespace

std::vector<Target> parse_registry(std::string_view text) {
  std::vector<Target> out;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;

    auto bad = [&](const std::string& why) {
      fail(Errc::InvalidArgument, "registry line " + std::to_string(line_no) + ": " + why);
    };
    std::string_view rest = line;
    std::string_view locator = next_word(rest);
    std::string_view type_word = next_word(rest);
    std::string_view name = trim(rest);
    if (type_word.empty() || name.empty()) bad("expected `locator type name`");
    auto type = parse_transport(type_word);
    if (!type) bad("unknown transport type '" + std::string(type_word) + "'");
    if (!seen.emplace(locator).second) bad("duplicate locator '" + std::string(locator) + "'");
    out.push_back({std::string(locator), *type, std::string(name), false});
  }
  return out;
}

std::string render_registry(const std::vector<Target>& targets) {
  std::string out;
  for (const auto& t : targets) {
    out += t.locator + " " + std::string(to_string(t.type)) + " " + t.name + "\n";
  }
  return out;
}

std::vector<Target> load_registry(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    if (!std::filesystem::exists(path)) return {};
    fail(Errc::IoError, "cannot read registry " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_registry(ss.str());
}

const Target& find_target(const std::vector<Target>& targets, std::string_view id) {
  for (const auto& t : targets) {
    if (t.locator == id) return t;
  }
  const Target* match = nullptr;
  for (const auto& t : targets) {
    if (t.name != id) continue;
    if (match) fail(Errc::InvalidArgument, "target name '" + std::string(id) + "' is ambiguous; use the locator");
    match = &t;
  }
  if (!match) fail(Errc::TargetUnreachable, "no target '" + std::string(id) + "' in the registry");
  return *match;
}

std::string render_targets_table(const std::vector<Target>& targets) {
  const std::array<std::string, 4> headers = {"Target", "Type", "Name", "Available"};
  std::vector<std::array<std::string, 4>> rows;
  for (const auto& t : targets) {
    rows.push_back({t.locator, std::string(to_string(t.type)), t.name, t.available ? "True" : "False"});
  }
  std::array<std::size_t, 4> width{};
  for (std::size_t c = 0; c < 4; ++c) {
    width[c] = headers[c].size();
    for (const auto& r : rows) width[c] = std::max(width[c], r[c].size());
  }
  auto emit = [&](const std::array<std::string, 4>& cells) {
    std::string line;
    for (std::size_t c = 0; c < 4; ++c) {
      line += cells[c];
      if (c + 1 < 4) line += std::string(width[c] - cells[c].size() + 3, ' ');
    }
    return line + "\n";
  };
  std::string out = emit(headers);
  std::array<std::string, 4> rule;
  for (std::size_t c = 0; c < 4; ++c) rule[c] = std::string(width[c], '-');
  out += emit(rule);
  for (const auto& r : rows) out += emit(r);
  return out;
}

}  // namespace rune::deploy
