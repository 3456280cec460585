#include <sstream>

#include "doctest.h"
#include "rune/bench.hpp"
#include "support.hpp"

using namespace rune;
using namespace rune::bench;

namespace {

Errc error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::InvalidArgument;
}

std::vector<BenchmarkRecord> twelve_records() {
  std::vector<BenchmarkRecord> recs;
  double base = 0.001;
  for (std::uint64_t n : {1000u, 10000u, 100000u, 1000000u}) {
    for (Mode m : kAllModes) {
      double t = base * (m == Mode::Native ? 1.0 : m == Mode::RuneFixed ? 1.25 : 1.4);
      BenchmarkRecord r{m, n, t, std::nullopt};
      if (m != Mode::Native) r.overhead = compute_overhead(t, base);
      recs.push_back(r);
    }
    base *= 10;
  }
  return recs;
}

}  // namespace

TEST_CASE("overhead examples") {
  CHECK(compute_overhead(1.4, 1.0) == doctest::Approx(0.4));
  CHECK(compute_overhead(1.28, 1.0) == doctest::Approx(0.28));
  CHECK(compute_overhead(1.0, 1.0) == 0.0);
  CHECK(compute_overhead(0.9, 1.0) == doctest::Approx(-0.1));
  CHECK(error_of([] { compute_overhead(1.0, 0.0); }) == Errc::NonPositiveBaseline);
  CHECK(error_of([] { compute_overhead(1.0, -2.0); }) == Errc::NonPositiveBaseline);
}

TEST_CASE("median and spread") {
  CHECK(median({3, 1, 2}) == 2);
  CHECK(median({4, 1, 3, 2}) == 2.5);
  CHECK(relative_spread({1, 1, 1}) == 0);
  CHECK(relative_spread({0.9, 1.0, 1.1}) == doctest::Approx(0.2));
}

TEST_CASE("modes print and parse") {
  for (Mode m : kAllModes) CHECK(parse_mode(to_string(m)) == m);
  CHECK(to_string(Mode::RuneFixed) == "RUNE_FIXED");
  CHECK_FALSE(parse_mode("WASM").has_value());
}

TEST_CASE("CSV has a header plus one line per record and round-trips") {
  auto recs = twelve_records();
  std::string csv = render_csv(recs);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);
  CHECK(csv.rfind("mode,iterations,t_total_s,overhead\n", 0) == 0);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  std::getline(lines, line);
  CHECK(line.rfind("NATIVE,1000,", 0) == 0);
  CHECK(line.back() == ',');
  CHECK(parse_csv(csv) == recs);
}

TEST_CASE("empty record sets are refused") {
  CHECK(error_of([] { render_csv({}); }) == Errc::EmptyRecords);
  testing::TempDir tmp;
  CHECK(error_of([&] { report({}, tmp / "r.csv"); }) == Errc::EmptyRecords);
}

TEST_CASE("report writes the CSV and a table") {
  testing::TempDir tmp;
  auto recs = twelve_records();
  report(recs, tmp / "results.csv");
  Bytes csv = testing::read_file(tmp / "results.csv");
  CHECK(parse_csv(std::string(csv.begin(), csv.end())) == recs);
  Bytes txt = testing::read_file(tmp / "results.txt");
  CHECK(std::string(txt.begin(), txt.end()) == render_table(recs));
}

TEST_CASE("a small sweep covers every mode and point with identical outputs") {
  SweepConfig cfg;
  cfg.iterations = {10, 100, 1000};
  cfg.repeats = 3;
  cfg.warmup_iterations = 10;
  cfg.runefile = testing::runes_dir() / "sine" / "Runefile";
  int runs = 0;
  cfg.on_run = [&](Mode, std::uint64_t, int, double s) {
    CHECK(s > 0);
    ++runs;
  };
  SweepResult res = run_sweep(cfg);
  CHECK(res.records.size() == 9);
  CHECK(runs == 27);
  CHECK(res.outputs_identical);
  for (const auto& r : res.records) {
    CHECK(r.t_total > 0);
    CHECK(r.overhead.has_value() == (r.mode != Mode::Native));
    CHECK(res.runs.at({r.mode, r.iterations}).size() == 3);
    CHECK(r.t_total == median(res.runs.at({r.mode, r.iterations})));
  }
  CHECK(render_csv(res.records).size() > 0);
}

TEST_CASE("sweep without NATIVE cannot compute overheads") {
  SweepConfig cfg;
  cfg.iterations = {10};
  cfg.modes = {Mode::RuneFixed};
  cfg.repeats = 1;
  cfg.warmup_iterations = 0;
  cfg.runefile = testing::runes_dir() / "sine" / "Runefile";
  CHECK_THROWS_AS(run_sweep(cfg), Error);
}
