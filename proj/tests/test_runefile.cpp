#include <random>

#include "doctest.h"
#include "rune/runefile.hpp"
#include "support.hpp"

using namespace rune;
using namespace rune::runefile;

namespace {

const char* kAudioExample =
    "FROM runicos/base\n"
    "CAPABILITY AUDIO audio --hz 16000 --samples 150 --sample-size 1500\n"
    "PROC_BLOCK runicos/fft fft\n"
    "MODEL ./example.rmodel model --input [150,1] --output 1\n"
    "RUN audio fft model\n"
    "OUT serial\n";

Error error_of(std::string_view text, bool analyze_too = false) {
  try {
    auto ast = parse(text);
    if (analyze_too) analyze(ast);
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected an error for: " << text);
  return Error(Errc::InvalidArgument, "");
}

}  // namespace

TEST_CASE("the audio example parses into the expected AST") {
  RunefileAst ast = parse(kAudioExample);
  CHECK(ast.base == "runicos/base");
  REQUIRE(ast.capabilities.size() == 1);
  const auto& cap = ast.capabilities[0];
  CHECK(cap.kind == CapabilityKind::Audio);
  CHECK(cap.name == "audio");
  CHECK(cap.param("hz") == 16000u);
  CHECK(cap.param("samples") == 150u);
  CHECK(cap.param("sample-size") == 1500u);
  REQUIRE(ast.proc_blocks.size() == 1);
  CHECK(ast.proc_blocks[0].source == "runicos/fft");
  CHECK(ast.proc_blocks[0].block == BlockId::Fft);
  CHECK(ast.proc_blocks[0].name == "fft");
  REQUIRE(ast.models.size() == 1);
  CHECK(ast.models[0].name == "model");
  CHECK(ast.models[0].input_shape == Shape{150, 1});
  CHECK(ast.models[0].output_shape == Shape{1});
  CHECK(ast.run == std::vector<std::string>{"audio", "fft", "model"});
  CHECK(ast.out == OutputKind::Serial);
}

TEST_CASE("the shipped audio Runefile matches the inline copy") {
  auto text = testing::read_file(testing::runes_dir() / "audio" / "Runefile");
  CHECK(parse(std::string(text.begin(), text.end())) == parse(kAudioExample));
}

TEST_CASE("minimal legal program") {
  RunefileAst ast = parse(
      "FROM runicos/base\nCAPABILITY RAND r --samples 1\nMODEL ./m.rmodel m --input [1] --output [1]\nRUN r m\nOUT serial");
  CHECK(ast.capabilities.size() == 1);
  CHECK(ast.proc_blocks.empty());
  CHECK(ast.models.size() == 1);
  CHECK(ast.run.size() == 2);
}

TEST_CASE("comments and blank lines are ignored") {
  RunefileAst a = parse(kAudioExample);
  RunefileAst b = parse(std::string("# header\n\n") + "FROM runicos/base   # base layer\n" +
                        std::string(kAudioExample).substr(std::string_view(kAudioExample).find('\n') + 1) + "\n# end\n");
  CHECK(a == b);
}

TEST_CASE("parser errors") {
  SUBCASE("first instruction not FROM") {
    Error e = error_of("CAPABILITY AUDIO a --hz 16000");
    CHECK(e.code() == Errc::MissingBase);
    REQUIRE(e.where());
    CHECK(e.where()->line == 1);
  }
  SUBCASE("second FROM, RUN, OUT") {
    CHECK(error_of("FROM runicos/base\nFROM runicos/base\n").code() == Errc::DuplicateInstruction);
    std::string twice_run = std::string(kAudioExample) + "RUN audio\n";
    Error e = error_of(twice_run);
    CHECK(e.code() == Errc::DuplicateInstruction);
    CHECK(e.where()->line == 7);
    CHECK(error_of(std::string(kAudioExample) + "OUT serial\n").code() == Errc::DuplicateInstruction);
  }
  SUBCASE("unknown keyword") {
    Error e = error_of("FROM runicos/base\nCOPY a b\n");
    CHECK(e.code() == Errc::UnknownInstruction);
    CHECK(e.where()->line == 2);
    CHECK(e.where()->column == 1);
  }
  SUBCASE("malformed instructions are SyntaxError") {
    CHECK(error_of("FROM other/base\n").code() == Errc::SyntaxError);
    CHECK(error_of("FROM runicos/base\nCAPABILITY AUDIO a --hz 0 --samples 1\n").code() == Errc::SyntaxError);
    CHECK(error_of("FROM runicos/base\nCAPABILITY AUDIO a --samples 4\n").code() == Errc::SyntaxError);
    CHECK(error_of("FROM runicos/base\nCAPABILITY SONAR s --samples 4\n").code() == Errc::SyntaxError);
    CHECK(error_of("FROM runicos/base\nPROC_BLOCK runicos/blur b\n").code() == Errc::SyntaxError);
    CHECK(error_of("FROM runicos/base\nMODEL ./m.rmodel m --input [1,0] --output 1\n").code() == Errc::SyntaxError);
    CHECK(error_of("FROM runicos/base\nMODEL ./m.rmodel m --input [1] --output 1 --quant 8\n").code() ==
          Errc::SyntaxError);
    CHECK(error_of("FROM runicos/base\nMODEL ./m.rmodel m --input [1]\n").code() == Errc::SyntaxError);
    CHECK(error_of("FROM runicos/base\nMODEL ./m.rmodel 9m --input [1] --output 1\n").code() == Errc::SyntaxError);
    CHECK(error_of("FROM runicos/base\nOUT lcd\n").code() == Errc::SyntaxError);
  }
  SUBCASE("duplicate names") {
    Error e = error_of(
        "FROM runicos/base\nCAPABILITY RAND x --samples 1\nPROC_BLOCK runicos/fft x\nRUN x\nOUT serial\n");
    CHECK(e.code() == Errc::DuplicateName);
    CHECK(e.where()->line == 3);
  }
  SUBCASE("missing RUN or OUT") {
    CHECK(error_of("FROM runicos/base\nCAPABILITY RAND x --samples 1\nOUT serial\n").code() ==
          Errc::MissingInstruction);
    CHECK(error_of("FROM runicos/base\nCAPABILITY RAND x --samples 1\nRUN x\n").code() == Errc::MissingInstruction);
  }
}

TEST_CASE("the audio example analyzes to a three-stage graph") {
  PipelineGraph g = analyze(parse(kAudioExample));
  REQUIRE(g.stages.size() == 3);
  CHECK(g.stages[0].id == "audio");
  CHECK(g.stages[0].kind == StageKind::Capability);
  CHECK(g.stages[0].input_shape.empty());
  CHECK(g.stages[0].output_shape == Shape{150, 1});
  CHECK(g.stages[1].kind == StageKind::ProcBlock);
  CHECK(g.stages[1].input_shape == Shape{150, 1});
  CHECK(g.stages[1].output_shape == Shape{150, 1});
  CHECK(g.stages[2].kind == StageKind::Model);
  CHECK(g.stages[2].input_shape == Shape{150, 1});
  CHECK(g.stages[2].output_shape == Shape{1});
  CHECK(g.sink == OutputKind::Serial);
}

TEST_CASE("analyzer errors") {
  const std::string head =
      "FROM runicos/base\nCAPABILITY AUDIO audio --hz 16000 --samples 150\nPROC_BLOCK runicos/fft fft\n";
  SUBCASE("shape mismatch") {
    Error e = error_of(head + "MODEL ./m.rmodel model --input [75,1] --output 1\nRUN audio model\nOUT serial\n", true);
    CHECK(e.code() == Errc::ShapeMismatch);
    CHECK(e.where()->line == 5);
  }
  SUBCASE("no capability source") {
    CHECK(error_of(head + "MODEL ./m.rmodel model --input [150,1] --output 1\nRUN fft model\nOUT serial\n", true)
              .code() == Errc::NoCapabilitySource);
  }
  SUBCASE("unresolved name") {
    CHECK(error_of(head + "RUN audio ghost\nOUT serial\n", true).code() == Errc::UnresolvedName);
  }
  SUBCASE("capability in the middle") {
    CHECK(error_of(head + "CAPABILITY RAND r --samples 150\nRUN audio fft r\nOUT serial\n", true).code() ==
          Errc::InvalidPipeline);
  }
}

TEST_CASE("analyze is deterministic") {
  CHECK(analyze(parse(kAudioExample)) == analyze(parse(kAudioExample)));
}

namespace {

// Random valid program: one capability source, a chain of shape-preserving
// blocks and models whose declared shapes line up, plus unused decls.
RunefileAst random_ast(std::mt19937_64& rng) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  RunefileAst ast;
  ast.base = std::string(kBaseImage);
  int counter = 0;
  auto fresh = [&](const char* stem) { return std::string(stem) + "_" + std::to_string(counter++); };

  CapabilityDecl cap;
  cap.kind = pick(0, 1) ? CapabilityKind::Audio : CapabilityKind::Rand;
  cap.name = fresh("cap");
  auto samples = static_cast<std::uint32_t>(pick(1, 300));
  if (cap.kind == CapabilityKind::Audio) cap.params.emplace_back("hz", static_cast<std::uint32_t>(pick(1, 48000)));
  cap.params.emplace_back("samples", samples);
  if (pick(0, 1)) cap.params.emplace_back("sample-size", static_cast<std::uint32_t>(pick(1, 9999)));
  if (pick(0, 3) == 0) cap.extras.emplace_back("mode", "stereo");
  ast.capabilities.push_back(cap);
  ast.run.push_back(cap.name);

  Shape cur{samples, 1};
  int stages = pick(0, 4);
  for (int i = 0; i < stages; ++i) {
    if (pick(0, 1)) {
      ProcBlockDecl p;
      p.block = pick(0, 1) ? BlockId::Fft : BlockId::Normalize;
      p.source = std::string(block_path(p.block));
      p.name = fresh("blk");
      ast.proc_blocks.push_back(p);
      ast.run.push_back(p.name);
    } else {
      ModelDecl m;
      m.path = "./" + fresh("m") + ".rmodel";
      m.name = fresh("model");
      m.input_shape = cur;
      m.output_shape = pick(0, 1) ? Shape{static_cast<std::uint32_t>(pick(1, 20))}
                                  : Shape{static_cast<std::uint32_t>(pick(1, 20)), 1};
      cur = m.output_shape;
      ast.models.push_back(m);
      ast.run.push_back(m.name);
    }
  }
  if (pick(0, 2) == 0) {
    CapabilityDecl unused;
    unused.kind = CapabilityKind::Rand;
    unused.name = fresh("spare");
    unused.params.emplace_back("samples", 4);
    ast.capabilities.push_back(unused);
  }
  return ast;
}

}  // namespace

TEST_CASE("parse(render(ast)) == ast for generated programs") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 300; ++i) {
    RunefileAst ast = random_ast(rng);
    std::string text = render(ast);
    CAPTURE(text);
    RunefileAst back = parse(text);
    REQUIRE(back == ast);
    CHECK(render(back) == text);
  }
}

TEST_CASE("stage shapes compose along the run order") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 300; ++i) {
    RunefileAst ast = random_ast(rng);
    PipelineGraph g = analyze(ast);
    REQUIRE(g.stages.size() == ast.run.size());
    Shape cur;
    for (const auto& st : g.stages) {
      CHECK(st.input_shape == cur);
      switch (st.kind) {
        case StageKind::Capability:
          CHECK(st.output_shape == capability_output_shape(*ast.find_capability(st.id)));
          break;
        case StageKind::ProcBlock:
          CHECK(st.output_shape == st.input_shape);
          break;
        case StageKind::Model:
          CHECK(st.output_shape == ast.models[st.model_index].output_shape);
          break;
      }
      cur = st.output_shape;
    }
  }
}

TEST_CASE("every error carries a 1-based line") {
  const char* bad[] = {
      "FROM runicos/base\n\nBOGUS\n",
      "\n\nCAPABILITY RAND r --samples 1\n",
      "FROM runicos/base\nCAPABILITY RAND r --samples x\n",
      "FROM runicos/base\nCAPABILITY RAND r --samples 1\nRUN r\nRUN r\n",
      "FROM runicos/base\nCAPABILITY RAND r --samples 1\nRUN q\nOUT serial\n",
  };
  for (const char* text : bad) {
    Error e = error_of(text, true);
    REQUIRE(e.where().has_value());
    CHECK(e.where()->line >= 1);
  }
}

TEST_CASE("identifier rule") {
  CHECK(is_identifier("audio"));
  CHECK(is_identifier("_x-1"));
  CHECK_FALSE(is_identifier("1x"));
  CHECK_FALSE(is_identifier("a.b"));
  CHECK_FALSE(is_identifier(""));
}
