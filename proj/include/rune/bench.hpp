#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

/// Containerization overhead: the same pipeline run natively and as a Rune
/// under each boundary codec.
namespace rune::bench {

enum class Mode : std::uint8_t { Native = 0, RuneFixed = 1, RuneVarint = 2 };
inline constexpr Mode kAllModes[] = {Mode::Native, Mode::RuneFixed, Mode::RuneVarint};

std::string_view to_string(Mode m) noexcept;
std::optional<Mode> parse_mode(std::string_view text) noexcept;

struct BenchmarkRecord {
  Mode mode = Mode::Native;
  std::uint64_t iterations = 0;
  double t_total = 0;  // seconds, median over repeats
  std::optional<double> overhead;

  friend bool operator==(const BenchmarkRecord&, const BenchmarkRecord&) = default;
};

/// (t_rune - t_native) / t_native. Throws NonPositiveBaseline when
/// t_native <= 0.
double compute_overhead(double t_rune, double t_native);

/// (max - min) / median.
double relative_spread(std::vector<double> samples);
double median(std::vector<double> samples);

struct SweepConfig {
  std::vector<std::uint64_t> iterations;
  std::vector<Mode> modes{std::begin(kAllModes), std::end(kAllModes)};
  int repeats = 5;
  std::uint64_t seed = 42;
  std::uint64_t warmup_iterations = 2000;
  std::filesystem::path runefile;
  /// Called after each timed run.
  std::function<void(Mode, std::uint64_t iterations, int repeat, double seconds)> on_run;
};

struct SweepResult {
  std::vector<BenchmarkRecord> records;
  /// Every timed run, per (mode, iterations).
  std::map<std::pair<Mode, std::uint64_t>, std::vector<double>> runs;
  /// Whether every mode produced the same output bits for the same seeds.
  bool outputs_identical = true;
};

/// Times `iterations` back-to-back inferences per run. Only the inference
/// loop is timed; bundle load and manifest happen up front. Repeats are
/// interleaved across modes and every run restarts the input stream from
/// `seed`. Overheads are computed from the medians and require NATIVE in
/// `modes`.
SweepResult run_sweep(const SweepConfig& config);

/// CSV with columns mode,iterations,t_total_s,overhead. Throws EmptyRecords.
std::string render_csv(const std::vector<BenchmarkRecord>& records);
std::vector<BenchmarkRecord> parse_csv(std::string_view text);
std::string render_table(const std::vector<BenchmarkRecord>& records);

/// Writes the CSV to `csv_path` and the table next to it with a .txt
/// extension. Throws EmptyRecords or IoError.
void report(const std::vector<BenchmarkRecord>& records, const std::filesystem::path& csv_path);

}  // namespace rune::bench
