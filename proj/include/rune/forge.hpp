#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rune/bundle.hpp"
#include "rune/pipeline.hpp"
#include "rune/runefile.hpp"

/// `rune build`: Runefile and model files in, `.rune` bundle out.
namespace rune::forge {

/// A compiled Runefile held in memory.
struct Compilation {
  runefile::RunefileAst ast;
  runefile::PipelineGraph graph;
  /// Indexed like `ast.models`.
  std::vector<pipeline::DenseModel> models;
  bundle::Manifest manifest;
  bundle::Bytecode bytecode;
  Bytes bundle;
  std::vector<std::string> warnings;
};

struct BuildReport {
  std::filesystem::path bundle_path;
  std::uint64_t bundle_size_bytes = 0;
  bundle::Manifest manifest;
  std::vector<std::string> warnings;

  std::string to_json() const;
  std::string summary() const;
};

/// Raw bytes for each entry of `ast.models`, in order.
using ModelBlobs = std::vector<Bytes>;

/// Reads every declared model relative to `base_dir`. Throws ModelNotFound
/// for a missing file and ModelFormatError for anything that is not a
/// well-formed `.rmodel` whose dims match the declared shapes.
ModelBlobs read_model_blobs(const runefile::RunefileAst& ast, const std::filesystem::path& base_dir);

/// parse -> analyze -> lower RUN to bytecode -> encode. Only models that
/// appear in RUN are embedded, in first-use order. Deterministic.
Compilation compile(std::string_view source, const std::function<ModelBlobs(const runefile::RunefileAst&)>& load_models);
Compilation compile(const runefile::RunefileAst& ast, const ModelBlobs& blobs);

/// Compiles `runefile_path` and writes the bundle. Defaults to
/// `<runefile-dir>/<stem>.rune`. Nothing is written on error.
BuildReport build(const std::filesystem::path& runefile_path,
                  const std::optional<std::filesystem::path>& output_path = std::nullopt);

/// The manifest a Runefile should compile to.
bundle::Manifest manifest_for(const runefile::RunefileAst& ast, const runefile::PipelineGraph& graph,
                              const ModelBlobs& blobs);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace rune::forge
