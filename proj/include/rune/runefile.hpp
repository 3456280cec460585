#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rune/error.hpp"
#include "rune/kinds.hpp"
#include "rune/tensor.hpp"

namespace rune::runefile {

// Declarations remember the 1-based line they came from so later passes can
// point at the offending instruction. Line numbers do not take part in
// equality: a re-rendered Runefile is the same program.

struct CapabilityDecl {
  CapabilityKind kind = CapabilityKind::Audio;
  std::string name;
  /// Positive integer flags in source order, including unrecognised ones.
  std::vector<std::pair<std::string, std::uint32_t>> params;
  /// Unrecognised flags whose value is not a positive integer, kept verbatim.
  std::vector<std::pair<std::string, std::string>> extras;
  std::size_t line = 0;

  std::optional<std::uint32_t> param(std::string_view key) const;
  bool operator==(const CapabilityDecl& o) const {
    return kind == o.kind && name == o.name && params == o.params && extras == o.extras;
  }
};

struct ProcBlockDecl {
  std::string source;
  BlockId block = BlockId::Fft;
  std::string name;
  std::size_t line = 0;

  bool operator==(const ProcBlockDecl& o) const {
    return source == o.source && block == o.block && name == o.name;
  }
};

struct ModelDecl {
  std::string path;
  std::string name;
  Shape input_shape;
  Shape output_shape;
  std::size_t line = 0;

  bool operator==(const ModelDecl& o) const {
    return path == o.path && name == o.name && input_shape == o.input_shape &&
           output_shape == o.output_shape;
  }
};

struct RunefileAst {
  std::string base;
  std::vector<CapabilityDecl> capabilities;
  std::vector<ProcBlockDecl> proc_blocks;
  std::vector<ModelDecl> models;
  std::vector<std::string> run;
  OutputKind out = OutputKind::Serial;
  std::size_t base_line = 0;
  std::size_t run_line = 0;
  std::size_t out_line = 0;

  const CapabilityDecl* find_capability(std::string_view name) const;
  const ProcBlockDecl* find_proc_block(std::string_view name) const;
  const ModelDecl* find_model(std::string_view name) const;

  bool operator==(const RunefileAst& o) const {
    return base == o.base && capabilities == o.capabilities && proc_blocks == o.proc_blocks &&
           models == o.models && run == o.run && out == o.out;
  }
};

enum class StageKind : std::uint8_t { Capability, ProcBlock, Model };

struct Stage {
  std::string id;
  StageKind kind = StageKind::Capability;
  Shape input_shape;  // empty for a capability source
  Shape output_shape;
  CapabilityKind capability = CapabilityKind::Audio;  // when kind == Capability
  std::vector<std::pair<std::string, std::uint32_t>> capability_params;
  BlockId block = BlockId::Fft;                       // when kind == ProcBlock
  std::size_t model_index = 0;                        // into RunefileAst::models

  friend bool operator==(const Stage&, const Stage&) = default;
};

struct PipelineGraph {
  std::vector<Stage> stages;
  OutputKind sink = OutputKind::Serial;

  friend bool operator==(const PipelineGraph&, const PipelineGraph&) = default;
};

/// The only base layer accepted by this version.
inline constexpr std::string_view kBaseImage = "runicos/base";

/// Lexes and parses Runefile source. Comments (`#` to end of line) and
/// blank lines are ignored. Errors carry the 1-based line and column.
RunefileAst parse(std::string_view text);

/// Canonical pretty-printer: one instruction per line, declarations
/// grouped by kind. `parse(render(ast)) == ast` for every valid AST.
std::string render(const RunefileAst& ast);

/// Resolves RUN, checks the pipeline is a single linear chain fed by one
/// capability, and infers every stage's shapes.
PipelineGraph analyze(const RunefileAst& ast);

/// Flags with defined meaning for a capability kind. Others are carried
/// opaquely to the provider.
std::span<const std::string_view> known_capability_flags(CapabilityKind kind) noexcept;

/// Shape emitted by a capability source with the given params.
Shape capability_output_shape(const CapabilityDecl& cap);

bool is_identifier(std::string_view text) noexcept;
std::string format_shape(const Shape& shape);

}  // namespace rune::runefile
