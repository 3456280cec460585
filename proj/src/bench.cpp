#include "rune/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "rune/forge.hpp"
#include "rune/runicos.hpp"

namespace rune::bench {

std::string_view to_string(Mode m) noexcept {
  switch (m) {
    case Mode::Native: return "NATIVE";
    case Mode::RuneFixed: return "RUNE_FIXED";
    case Mode::RuneVarint: return "RUNE_VARINT";
  }
  return "?";
}

std::optional<Mode> parse_mode(std::string_view text) noexcept {
  for (Mode m : kAllModes) {
    if (to_string(m) == text) return m;
  }
  return std::nullopt;
}

double compute_overhead(double t_rune, double t_native) {
  if (!(t_native > 0)) fail(Errc::NonPositiveBaseline, "native time must be positive");
  return (t_rune - t_native) / t_native;
}

double median(std::vector<double> samples) {
  if (samples.empty()) fail(Errc::InvalidArgument, "median of nothing");
  std::sort(samples.begin(), samples.end());
  std::size_t n = samples.size();
  return n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
}

double relative_spread(std::vector<double> samples) {
  double med = median(samples);
  auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  return (*hi - *lo) / med;
}

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t mix(std::uint64_t h, const Tensor& t) {
  for (auto b : t.payload()) h = (h ^ b) * 0x100000001b3ull;
  return h;
}

// One timed subject: a closure running a single inference.
struct Subject {
  Mode mode;
  std::function<Tensor()> step;
};

std::string fmt(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

SweepResult run_sweep(const SweepConfig& cfg) {
  if (cfg.iterations.empty() || cfg.modes.empty()) fail(Errc::InvalidArgument, "nothing to sweep");
  if (cfg.repeats < 1) fail(Errc::InvalidArgument, "repeats must be >= 1");
  for (auto n : cfg.iterations) {
    if (n == 0) fail(Errc::InvalidArgument, "iterations must be > 0");
  }
  bool want_overhead = std::any_of(cfg.modes.begin(), cfg.modes.end(), [](Mode m) { return m != Mode::Native; });
  if (want_overhead && std::find(cfg.modes.begin(), cfg.modes.end(), Mode::Native) == cfg.modes.end()) {
    fail(Errc::InvalidArgument, "overhead needs the NATIVE baseline in the sweep");
  }

  auto dir = cfg.runefile.parent_path();
  forge::Compilation comp = forge::compile(forge::read_text_file(cfg.runefile), [&](const runefile::RunefileAst& ast) {
    return forge::read_model_blobs(ast, dir);
  });

  // Every mode reads from its own provider set restarted from the same seed.
  auto make_providers = [&] {
    runicos::ProviderMap map;
    for (const auto& req : comp.manifest.capabilities) {
      map[req.kind] = std::make_shared<runicos::SeededProvider>(req.kind, cfg.seed);
    }
    return map;
  };

  std::vector<Subject> subjects;
  std::vector<runicos::ProviderMap> provider_sets;
  std::vector<std::unique_ptr<runicos::RuneInstance>> instances;
  runicos::NullSink null_sink;
  provider_sets.reserve(cfg.modes.size());
  for (Mode m : cfg.modes) {
    provider_sets.push_back(make_providers());
    const auto& providers = provider_sets.back();
    if (m == Mode::Native) {
      subjects.push_back({m, [&comp, &providers, &null_sink] {
                            return runicos::run_native(comp.graph, comp.models, providers, &null_sink);
                          }});
    } else {
      runicos::DeviceProfile dev;
      dev.name = "bench";
      dev.providers = providers;
      dev.memory_budget = std::uint64_t{1} << 32;
      dev.serial = std::make_shared<runicos::NullSink>();
      auto inst = std::make_unique<runicos::RuneInstance>(runicos::load(comp.bundle, dev));
      runicos::manifest(*inst);
      Codec codec = m == Mode::RuneFixed ? Codec::Fixed : Codec::Varint;
      runicos::RuneInstance* raw = inst.get();
      instances.push_back(std::move(inst));
      subjects.push_back({m, [raw, codec] { return runicos::call(*raw, codec); }});
    }
  }

  auto reseed = [&](std::size_t i) {
    for (auto& [kind, p] : provider_sets[i]) p->reseed(cfg.seed);
  };

  for (std::size_t i = 0; i < subjects.size(); ++i) {
    reseed(i);
    for (std::uint64_t k = 0; k < cfg.warmup_iterations; ++k) subjects[i].step();
  }

  SweepResult result;
  std::map<std::uint64_t, std::uint64_t> reference_hash;
  for (std::uint64_t n : cfg.iterations) {
    for (int r = 0; r < cfg.repeats; ++r) {
      for (std::size_t i = 0; i < subjects.size(); ++i) {
        reseed(i);
        std::uint64_t h = 0xcbf29ce484222325ull;
        auto start = Clock::now();
        for (std::uint64_t k = 0; k < n; ++k) h = mix(h, subjects[i].step());
        double secs = std::chrono::duration<double>(Clock::now() - start).count();
        result.runs[{subjects[i].mode, n}].push_back(secs);
        if (cfg.on_run) cfg.on_run(subjects[i].mode, n, r, secs);
        auto [it, fresh] = reference_hash.emplace(n, h);
        if (!fresh && it->second != h) result.outputs_identical = false;
      }
    }
  }

  for (std::uint64_t n : cfg.iterations) {
    std::optional<double> native;
    if (result.runs.contains({Mode::Native, n})) native = median(result.runs.at({Mode::Native, n}));
    for (Mode m : cfg.modes) {
      BenchmarkRecord rec{m, n, median(result.runs.at({m, n})), std::nullopt};
      if (m != Mode::Native) rec.overhead = compute_overhead(rec.t_total, *native);
      result.records.push_back(rec);
    }
  }
  return result;
}

std::string render_csv(const std::vector<BenchmarkRecord>& records) {
  if (records.empty()) fail(Errc::EmptyRecords, "no benchmark records");
  std::string out = "mode,iterations,t_total_s,overhead\n";
  for (const auto& r : records) {
    out += std::string(to_string(r.mode)) + "," + std::to_string(r.iterations) + "," + fmt(r.t_total) + ",";
    if (r.overhead) out += fmt(*r.overhead);
    out += "\n";
  }
  return out;
}

std::vector<BenchmarkRecord> parse_csv(std::string_view text) {
  std::vector<BenchmarkRecord> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  auto bad = [&](const std::string& why) {
    fail(Errc::InvalidArgument, "CSV line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "mode,iterations,t_total_s,overhead") bad("unexpected header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (cells.size() != 4) bad("expected 4 columns");
    BenchmarkRecord r;
    auto mode = parse_mode(cells[0]);
    if (!mode) bad("unknown mode '" + cells[0] + "'");
    r.mode = *mode;
    auto parse_num = [&](const std::string& s, auto& v) {
      auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) bad("bad number '" + s + "'");
    };
    parse_num(cells[1], r.iterations);
    parse_num(cells[2], r.t_total);
    if (!cells[3].empty()) {
      double o = 0;
      parse_num(cells[3], o);
      r.overhead = o;
    }
    out.push_back(r);
  }
  return out;
}

std::string render_table(const std::vector<BenchmarkRecord>& records) {
  if (records.empty()) fail(Errc::EmptyRecords, "no benchmark records");
  std::ostringstream os;
  os << std::left << std::setw(13) << "Mode" << std::right << std::setw(12) << "Iterations" << std::setw(14)
     << "t_total (s)" << std::setw(11) << "Overhead" << "\n";
  os << std::string(50, '-') << "\n";
  for (const auto& r : records) {
    os << std::left << std::setw(13) << to_string(r.mode) << std::right << std::setw(12) << r.iterations
       << std::setw(14) << std::fixed << std::setprecision(6) << r.t_total << std::setw(11);
    if (r.overhead) {
      std::ostringstream pct;
      pct << std::fixed << std::setprecision(1) << *r.overhead * 100 << "%";
      os << pct.str();
    } else {
      os << "-";
    }
    os << "\n";
  }
  return os.str();
}

void report(const std::vector<BenchmarkRecord>& records, const std::filesystem::path& csv_path) {
  std::string csv = render_csv(records);
  std::string table = render_table(records);
  auto write = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) fail(Errc::IoError, "cannot write " + p.string());
    f << text;
    if (!f) fail(Errc::IoError, "failed writing " + p.string());
  };
  write(csv_path, csv);
  auto table_path = csv_path;
  table_path.replace_extension(".txt");
  write(table_path, table);
}

}  // namespace rune::bench
