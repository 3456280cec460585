#include "rune/runefile.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <set>
#include <sstream>

namespace rune::runefile {
namespace {

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

struct Line {
  std::size_t number;
  std::vector<Token> tokens;
};

[[noreturn]] void error_at(Errc code, std::size_t line, std::size_t column, const std::string& msg) {
  std::ostringstream os;
  os << "line " << line;
  if (column != 0) os << ", column " << column;
  os << ": " << msg;
  throw Error(code, os.str(), SourceLocation{line, column});
}

[[noreturn]] void error_at(Errc code, std::size_t line, const Token& tok, const std::string& msg) {
  error_at(code, line, tok.column, msg);
}

std::vector<Line> lex(std::string_view text) {
  std::vector<Line> lines;
  std::size_t number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(start, end - start);
    ++number;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);

    Line line{number, {}};
    std::size_t i = 0;
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; };
    while (i < raw.size()) {
      while (i < raw.size() && is_space(raw[i])) ++i;
      std::size_t tok_start = i;
      while (i < raw.size() && !is_space(raw[i])) ++i;
      if (i > tok_start) line.tokens.push_back({raw.substr(tok_start, i - tok_start), tok_start + 1});
    }
    if (!line.tokens.empty()) lines.push_back(std::move(line));
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

std::optional<std::uint32_t> parse_positive(std::string_view s) {
  if (s.empty() || s.front() == '+' || s.front() == '-') return std::nullopt;
  std::uint32_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || v == 0) return std::nullopt;
  return v;
}

// `[d1,d2,...]` with no internal spaces, or a bare positive integer.
Shape parse_shape(const Token& tok, std::size_t line) {
  std::string_view s = tok.text;
  if (auto scalar = parse_positive(s)) return Shape{*scalar};
  if (s.size() < 3 || s.front() != '[' || s.back() != ']') {
    error_at(Errc::SyntaxError, line, tok, "expected shape literal like [150,1], got '" + std::string(s) + "'");
  }
  Shape dims;
  std::string_view body = s.substr(1, s.size() - 2);
  std::size_t pos = 0;
  while (true) {
    std::size_t comma = body.find(',', pos);
    std::string_view part = body.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    auto d = parse_positive(part);
    if (!d) error_at(Errc::SyntaxError, line, tok, "shape dimensions must be positive integers");
    dims.push_back(*d);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return dims;
}

struct Flag {
  std::string_view key;
  const Token* value;
  const Token* key_token;
};

// Parses trailing `--key value` pairs starting at tokens[first].
std::vector<Flag> parse_flags(const Line& line, std::size_t first) {
  std::vector<Flag> flags;
  for (std::size_t i = first; i < line.tokens.size(); i += 2) {
    const Token& key = line.tokens[i];
    if (key.text.size() < 3 || !key.text.starts_with("--")) {
      error_at(Errc::SyntaxError, line.number, key, "expected a --flag, got '" + std::string(key.text) + "'");
    }
    std::string_view name = key.text.substr(2);
    if (!is_identifier(name)) error_at(Errc::SyntaxError, line.number, key, "invalid flag name");
    if (i + 1 >= line.tokens.size()) {
      error_at(Errc::SyntaxError, line.number, key, "flag '" + std::string(key.text) + "' has no value");
    }
    for (const auto& f : flags) {
      if (f.key == name) error_at(Errc::SyntaxError, line.number, key, "flag given twice");
    }
    flags.push_back({name, &line.tokens[i + 1], &key});
  }
  return flags;
}

const Token& expect_identifier(const Line& line, std::size_t index, std::string_view what) {
  if (index >= line.tokens.size()) {
    const Token& last = line.tokens.back();
    error_at(Errc::SyntaxError, line.number, last.column + last.text.size(), "missing " + std::string(what));
  }
  const Token& tok = line.tokens[index];
  if (!is_identifier(tok.text)) {
    error_at(Errc::SyntaxError, line.number, tok, "invalid " + std::string(what) + " '" + std::string(tok.text) + "'");
  }
  return tok;
}

constexpr std::array<std::string_view, 6> kInstructions = {"FROM", "CAPABILITY", "PROC_BLOCK",
                                                            "MODEL", "RUN", "OUT"};

class Parser {
 public:
  RunefileAst run(std::string_view text) {
    std::vector<Line> lines = lex(text);
    if (lines.empty()) error_at(Errc::MissingBase, 1, 0, "a Runefile must start with FROM");

    std::size_t last_line = lines.back().number;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const Line& line = lines[i];
      std::string_view keyword = line.tokens.front().text;
      bool known = std::find(kInstructions.begin(), kInstructions.end(), keyword) != kInstructions.end();
      if (!known) {
        error_at(Errc::UnknownInstruction, line.number, line.tokens.front(),
                 "unknown instruction '" + std::string(keyword) + "'");
      }
      if (i == 0 && keyword != "FROM") {
        error_at(Errc::MissingBase, line.number, line.tokens.front(), "a Runefile must start with FROM");
      }
      if (keyword == "FROM") {
        from(line);
      } else if (keyword == "CAPABILITY") {
        capability(line);
      } else if (keyword == "PROC_BLOCK") {
        proc_block(line);
      } else if (keyword == "MODEL") {
        model(line);
      } else if (keyword == "RUN") {
        run_instruction(line);
      } else {
        out(line);
      }
    }
    if (!seen_run_) error_at(Errc::MissingInstruction, last_line, 0, "missing RUN instruction");
    if (!seen_out_) error_at(Errc::MissingInstruction, last_line, 0, "missing OUT instruction");
    return std::move(ast_);
  }

 private:
  void bind(const Token& name, std::size_t line) {
    if (!names_.insert(std::string(name.text)).second) {
      error_at(Errc::DuplicateName, line, name, "'" + std::string(name.text) + "' is already declared");
    }
  }

  void arity(const Line& line, std::size_t expected, std::string_view usage) {
    if (line.tokens.size() != expected) {
      std::size_t col = line.tokens.size() > expected ? line.tokens[expected].column : 0;
      error_at(Errc::SyntaxError, line.number, col, "usage: " + std::string(usage));
    }
  }

  void from(const Line& line) {
    if (seen_from_) error_at(Errc::DuplicateInstruction, line.number, line.tokens.front(), "second FROM");
    seen_from_ = true;
    arity(line, 2, "FROM <base>");
    const Token& base = line.tokens[1];
    if (base.text != kBaseImage) {
      error_at(Errc::SyntaxError, line.number, base,
               "unsupported base '" + std::string(base.text) + "', expected " + std::string(kBaseImage));
    }
    ast_.base = std::string(base.text);
    ast_.base_line = line.number;
  }

  void capability(const Line& line) {
    if (line.tokens.size() < 3) error_at(Errc::SyntaxError, line.number, 0, "usage: CAPABILITY <KIND> <name> [--flag value]...");
    const Token& kind_tok = line.tokens[1];
    auto kind = parse_capability_kind(kind_tok.text);
    if (!kind) error_at(Errc::SyntaxError, line.number, kind_tok, "unknown capability kind '" + std::string(kind_tok.text) + "'");
    const Token& name = expect_identifier(line, 2, "capability name");

    CapabilityDecl decl;
    decl.kind = *kind;
    decl.name = std::string(name.text);
    decl.line = line.number;
    auto known = known_capability_flags(*kind);
    for (const Flag& f : parse_flags(line, 3)) {
      bool is_known = std::find(known.begin(), known.end(), f.key) != known.end();
      auto value = parse_positive(f.value->text);
      if (value) {
        decl.params.emplace_back(std::string(f.key), *value);
      } else if (is_known) {
        error_at(Errc::SyntaxError, line.number, *f.value,
                 "--" + std::string(f.key) + " must be a positive integer");
      } else {
        decl.extras.emplace_back(std::string(f.key), std::string(f.value->text));
      }
    }
    for (auto required : known) {
      if (!decl.param(required)) {
        error_at(Errc::SyntaxError, line.number, kind_tok,
                 std::string(to_string(*kind)) + " requires --" + std::string(required));
      }
    }
    bind(name, line.number);
    ast_.capabilities.push_back(std::move(decl));
  }

  void proc_block(const Line& line) {
    if (line.tokens.size() > 3) {
      error_at(Errc::SyntaxError, line.number, line.tokens[3], "PROC_BLOCK takes no flags");
    }
    arity(line, 3, "PROC_BLOCK <source> <name>");
    const Token& source = line.tokens[1];
    auto block = parse_block_path(source.text);
    if (!block) {
      error_at(Errc::SyntaxError, line.number, source,
               "unknown processing block '" + std::string(source.text) + "'");
    }
    const Token& name = expect_identifier(line, 2, "block name");
    bind(name, line.number);
    ast_.proc_blocks.push_back({std::string(source.text), *block, std::string(name.text), line.number});
  }

  void model(const Line& line) {
    if (line.tokens.size() < 3) error_at(Errc::SyntaxError, line.number, 0, "usage: MODEL <path> <name> --input <shape> --output <shape>");
    ModelDecl decl;
    decl.path = std::string(line.tokens[1].text);
    const Token& name = expect_identifier(line, 2, "model name");
    decl.name = std::string(name.text);
    decl.line = line.number;
    bool has_in = false, has_out = false;
    for (const Flag& f : parse_flags(line, 3)) {
      if (f.key == "input") {
        decl.input_shape = parse_shape(*f.value, line.number);
        has_in = true;
      } else if (f.key == "output") {
        decl.output_shape = parse_shape(*f.value, line.number);
        has_out = true;
      } else {
        error_at(Errc::SyntaxError, line.number, *f.key_token, "unknown MODEL flag --" + std::string(f.key));
      }
    }
    if (!has_in) error_at(Errc::SyntaxError, line.number, name, "MODEL requires --input");
    if (!has_out) error_at(Errc::SyntaxError, line.number, name, "MODEL requires --output");
    bind(name, line.number);
    ast_.models.push_back(std::move(decl));
  }

  void run_instruction(const Line& line) {
    if (seen_run_) error_at(Errc::DuplicateInstruction, line.number, line.tokens.front(), "second RUN");
    seen_run_ = true;
    if (line.tokens.size() < 2) error_at(Errc::SyntaxError, line.number, 0, "RUN needs at least one stage");
    for (std::size_t i = 1; i < line.tokens.size(); ++i) {
      ast_.run.emplace_back(expect_identifier(line, i, "stage name").text);
    }
    ast_.run_line = line.number;
  }

  void out(const Line& line) {
    if (seen_out_) error_at(Errc::DuplicateInstruction, line.number, line.tokens.front(), "second OUT");
    seen_out_ = true;
    arity(line, 2, "OUT serial");
    std::string_view sink = line.tokens[1].text;
    if (sink != "serial" && sink != "SERIAL") {
      error_at(Errc::SyntaxError, line.number, line.tokens[1], "unsupported output '" + std::string(sink) + "'");
    }
    ast_.out = OutputKind::Serial;
    ast_.out_line = line.number;
  }

  RunefileAst ast_;
  std::set<std::string> names_;
  bool seen_from_ = false;
  bool seen_run_ = false;
  bool seen_out_ = false;
};

}  // namespace

std::optional<std::uint32_t> CapabilityDecl::param(std::string_view key) const {
  for (const auto& [k, v] : params) {
    if (k == key) return v;
  }
  return std::nullopt;
}

const CapabilityDecl* RunefileAst::find_capability(std::string_view name) const {
  for (const auto& c : capabilities) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const ProcBlockDecl* RunefileAst::find_proc_block(std::string_view name) const {
  for (const auto& p : proc_blocks) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const ModelDecl* RunefileAst::find_model(std::string_view name) const {
  for (const auto& m : models) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

bool is_identifier(std::string_view text) noexcept {
  if (text.empty()) return false;
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (!alpha(text.front())) return false;
  return std::all_of(text.begin() + 1, text.end(), [&](char c) { return alpha(c) || digit(c) || c == '-'; });
}

std::string format_shape(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::span<const std::string_view> known_capability_flags(CapabilityKind kind) noexcept {
  static constexpr std::string_view kAudio[] = {"hz", "samples"};
  static constexpr std::string_view kRand[] = {"samples"};
  switch (kind) {
    case CapabilityKind::Audio: return kAudio;
    case CapabilityKind::Rand: return kRand;
  }
  return {};
}

Shape capability_output_shape(const CapabilityDecl& cap) {
  auto samples = cap.param("samples");
  if (!samples) fail(Errc::SyntaxError, "capability '" + cap.name + "' has no --samples");
  return Shape{*samples, 1};
}

RunefileAst parse(std::string_view text) { return Parser{}.run(text); }

std::string render(const RunefileAst& ast) {
  std::ostringstream os;
  os << "FROM " << ast.base << '\n';
  for (const auto& c : ast.capabilities) {
    os << "CAPABILITY " << to_string(c.kind) << ' ' << c.name;
    for (const auto& [k, v] : c.params) os << " --" << k << ' ' << v;
    for (const auto& [k, v] : c.extras) os << " --" << k << ' ' << v;
    os << '\n';
  }
  for (const auto& p : ast.proc_blocks) os << "PROC_BLOCK " << p.source << ' ' << p.name << '\n';
  for (const auto& m : ast.models) {
    os << "MODEL " << m.path << ' ' << m.name << " --input " << format_shape(m.input_shape)
       << " --output " << format_shape(m.output_shape) << '\n';
  }
  os << "RUN";
  for (const auto& r : ast.run) os << ' ' << r;
  os << "\nOUT serial\n";
  return os.str();
}

PipelineGraph analyze(const RunefileAst& ast) {
  const std::size_t line = ast.run_line;
  if (ast.run.empty()) error_at(Errc::NoCapabilitySource, line, 0, "RUN is empty");

  PipelineGraph graph;
  graph.sink = ast.out;
  for (std::size_t i = 0; i < ast.run.size(); ++i) {
    const std::string& name = ast.run[i];
    Stage stage;
    stage.id = name;
    if (const auto* cap = ast.find_capability(name)) {
      if (i != 0) {
        error_at(Errc::InvalidPipeline, line, 0,
                 "capability '" + name + "' used mid-pipeline; RUN takes exactly one capability, first");
      }
      stage.kind = StageKind::Capability;
      stage.capability = cap->kind;
      stage.capability_params = cap->params;
      stage.output_shape = capability_output_shape(*cap);
    } else if (const auto* block = ast.find_proc_block(name)) {
      if (i == 0) error_at(Errc::NoCapabilitySource, line, 0, "RUN must begin with a capability, got '" + name + "'");
      stage.kind = StageKind::ProcBlock;
      stage.block = block->block;
      stage.input_shape = graph.stages.back().output_shape;
      stage.output_shape = stage.input_shape;
    } else if (const auto* model = ast.find_model(name)) {
      if (i == 0) error_at(Errc::NoCapabilitySource, line, 0, "RUN must begin with a capability, got '" + name + "'");
      const Stage& prev = graph.stages.back();
      if (prev.output_shape != model->input_shape) {
        error_at(Errc::ShapeMismatch, line, 0,
                 "'" + prev.id + "' produces " + format_shape(prev.output_shape) + " but '" + name +
                     "' expects " + format_shape(model->input_shape));
      }
      stage.kind = StageKind::Model;
      stage.model_index = static_cast<std::size_t>(model - ast.models.data());
      stage.input_shape = model->input_shape;
      stage.output_shape = model->output_shape;
    } else {
      error_at(Errc::UnresolvedName, line, 0, "RUN refers to undeclared '" + name + "'");
    }
    graph.stages.push_back(std::move(stage));
  }
  return graph;
}

}  // namespace rune::runefile
