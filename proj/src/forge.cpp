#include "rune/forge.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "json.hpp"

namespace rune::forge {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

Bytes read_binary(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::ModelNotFound, "model not found: " + path.string());
  return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

json shape_json(const Shape& s) { return json(std::vector<std::uint32_t>(s.begin(), s.end())); }

json manifest_json(const bundle::Manifest& m) {
  json caps = json::array();
  for (const auto& c : m.capabilities) {
    json params = json::object();
    for (const auto& [k, v] : c.params) params[k] = v;
    for (const auto& [k, v] : c.extras) params[k] = v;
    caps.push_back({{"kind", to_string(c.kind)}, {"params", params}});
  }
  json models = json::array();
  for (const auto& mi : m.models) {
    char digest[9];
    std::snprintf(digest, sizeof digest, "%08x", mi.blob_digest);
    models.push_back({{"name", mi.name},
                      {"input", shape_json(mi.input_shape)},
                      {"output", shape_json(mi.output_shape)},
                      {"crc32", digest}});
  }
  return {{"capabilities", caps}, {"out", to_string(m.out)}, {"models", models}};
}

std::vector<std::string> collect_warnings(const runefile::RunefileAst& ast) {
  std::vector<std::string> warnings;
  for (const auto& c : ast.capabilities) {
    auto known = runefile::known_capability_flags(c.kind);
    auto opaque = [&](const std::string& key) {
      warnings.push_back("line " + std::to_string(c.line) + ": capability '" + c.name + "' flag --" + key +
                         " is passed to the provider uninterpreted");
    };
    for (const auto& [k, v] : c.params) {
      if (std::find(known.begin(), known.end(), k) == known.end()) opaque(k);
    }
    for (const auto& [k, v] : c.extras) opaque(k);
  }
  auto used = [&](const std::string& name) {
    return std::find(ast.run.begin(), ast.run.end(), name) != ast.run.end();
  };
  auto unused = [&](const std::string& what, const std::string& name, std::size_t line) {
    warnings.push_back("line " + std::to_string(line) + ": " + what + " '" + name + "' is declared but not in RUN");
  };
  for (const auto& c : ast.capabilities) {
    if (!used(c.name)) unused("capability", c.name, c.line);
  }
  for (const auto& p : ast.proc_blocks) {
    if (!used(p.name)) unused("processing block", p.name, p.line);
  }
  for (const auto& m : ast.models) {
    if (!used(m.name)) unused("model", m.name, m.line);
  }
  return warnings;
}

// Position of each AST model in the bundle's model table (first-use order).
std::map<std::size_t, std::uint16_t> model_slots(const runefile::PipelineGraph& graph) {
  std::map<std::size_t, std::uint16_t> slots;
  for (const auto& stage : graph.stages) {
    if (stage.kind == runefile::StageKind::Model && !slots.contains(stage.model_index)) {
      auto next = static_cast<std::uint16_t>(slots.size());
      slots.emplace(stage.model_index, next);
    }
  }
  return slots;
}

std::vector<std::size_t> slot_order(const std::map<std::size_t, std::uint16_t>& slots) {
  std::vector<std::size_t> order(slots.size());
  for (const auto& [ast_index, slot] : slots) order[slot] = ast_index;
  return order;
}

}  // namespace

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ModelBlobs read_model_blobs(const runefile::RunefileAst& ast, const fs::path& base_dir) {
  ModelBlobs blobs;
  for (const auto& decl : ast.models) {
    fs::path path = fs::path(decl.path).is_absolute() ? fs::path(decl.path) : base_dir / decl.path;
    std::string where = "line " + std::to_string(decl.line) + ": ";
    if (!fs::is_regular_file(path)) fail(Errc::ModelNotFound, where + "model not found: " + path.string());
    Bytes bytes = read_binary(path);
    pipeline::DenseModel model;
    try {
      model = pipeline::read_rmodel(bytes);
    } catch (const Error& e) {
      std::string hint = path.extension() == ".tflite"
                             ? "TensorFlow Lite models are not supported; convert to the .rmodel dense format"
                             : "expected an .rmodel dense model";
      fail(Errc::ModelFormatError, where + path.string() + ": " + hint + " (" + e.what() + ")");
    }
    if (model.input_size() != element_count(decl.input_shape)) {
      fail(Errc::ModelFormatError, where + "model '" + decl.name + "' takes " + std::to_string(model.input_size()) +
                                       " inputs but --input is " + runefile::format_shape(decl.input_shape));
    }
    if (model.output_size() != element_count(decl.output_shape)) {
      fail(Errc::ModelFormatError, where + "model '" + decl.name + "' yields " +
                                       std::to_string(model.output_size()) + " outputs but --output is " +
                                       runefile::format_shape(decl.output_shape));
    }
    blobs.push_back(std::move(bytes));
  }
  return blobs;
}

bundle::Manifest manifest_for(const runefile::RunefileAst& ast, const runefile::PipelineGraph& graph,
                              const ModelBlobs& blobs) {
  bundle::Manifest m;
  m.out = graph.sink;
  for (const auto& stage : graph.stages) {
    if (stage.kind != runefile::StageKind::Capability) continue;
    const auto* decl = ast.find_capability(stage.id);
    m.capabilities.push_back({decl->kind, decl->params, decl->extras});
  }
  for (std::size_t ast_index : slot_order(model_slots(graph))) {
    const auto& decl = ast.models[ast_index];
    m.models.push_back({decl.name, decl.input_shape, decl.output_shape, crc32(blobs.at(ast_index))});
  }
  return m;
}

Compilation compile(const runefile::RunefileAst& ast, const ModelBlobs& blobs) {
  if (blobs.size() != ast.models.size()) fail(Errc::InvalidArgument, "one blob per declared model required");
  Compilation c;
  c.ast = ast;
  c.graph = runefile::analyze(ast);
  for (const auto& b : blobs) c.models.push_back(pipeline::read_rmodel(b));
  c.manifest = manifest_for(ast, c.graph, blobs);

  auto slots = model_slots(c.graph);
  for (const auto& stage : c.graph.stages) {
    switch (stage.kind) {
      case runefile::StageKind::Capability:
        c.bytecode.push_back(bundle::Instruction::read_cap(stage.capability));
        break;
      case runefile::StageKind::ProcBlock:
        c.bytecode.push_back(bundle::Instruction::proc(stage.block));
        break;
      case runefile::StageKind::Model:
        c.bytecode.push_back(bundle::Instruction::infer(slots.at(stage.model_index)));
        break;
    }
  }
  c.bytecode.push_back(bundle::Instruction::write_out());

  std::vector<Bytes> embedded;
  for (std::size_t ast_index : slot_order(slots)) embedded.push_back(blobs[ast_index]);
  c.bundle = bundle::encode_bundle(c.manifest, c.bytecode, embedded);
  c.warnings = collect_warnings(ast);
  return c;
}

Compilation compile(std::string_view source,
                    const std::function<ModelBlobs(const runefile::RunefileAst&)>& load_models) {
  runefile::RunefileAst ast = runefile::parse(source);
  runefile::analyze(ast);  // report pipeline errors before touching model files
  return compile(ast, load_models(ast));
}

BuildReport build(const fs::path& runefile_path, const std::optional<fs::path>& output_path) {
  std::string source = read_text_file(runefile_path);
  fs::path dir = runefile_path.parent_path();
  Compilation c = compile(source, [&](const runefile::RunefileAst& ast) { return read_model_blobs(ast, dir); });

  fs::path out = output_path ? *output_path : dir / (runefile_path.stem().string() + ".rune");
  fs::path tmp = out;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(Errc::IoError, "cannot write " + out.string());
    f.write(reinterpret_cast<const char*>(c.bundle.data()), static_cast<std::streamsize>(c.bundle.size()));
    if (!f) {
      std::error_code ec;
      fs::remove(tmp, ec);
      fail(Errc::IoError, "failed writing " + out.string());
    }
  }
  fs::rename(tmp, out);

  BuildReport report;
  report.bundle_path = out;
  report.bundle_size_bytes = fs::file_size(out);
  report.manifest = c.manifest;
  report.warnings = c.warnings;
  return report;
}

std::string BuildReport::to_json() const {
  json j = {{"bundle", bundle_path.string()},
            {"size_bytes", bundle_size_bytes},
            {"manifest", manifest_json(manifest)},
            {"warnings", warnings}};
  return j.dump(2);
}

std::string BuildReport::summary() const {
  std::ostringstream os;
  os << "Built " << bundle_path.string() << " (" << bundle_size_bytes << " bytes)\n";
  for (const auto& c : manifest.capabilities) {
    os << "  capability " << to_string(c.kind);
    for (const auto& [k, v] : c.params) os << " --" << k << ' ' << v;
    os << '\n';
  }
  for (const auto& m : manifest.models) {
    os << "  model " << m.name << ' ' << runefile::format_shape(m.input_shape) << " -> "
       << runefile::format_shape(m.output_shape) << '\n';
  }
  os << "  out " << to_string(manifest.out) << '\n';
  return os.str();
}

}  // namespace rune::forge
