#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rune/bench.hpp"
#include "rune/error.hpp"

namespace rb = rune::bench;

int main(int argc, char** argv) {
  CLI::App app{"Time the sine pipeline natively and as a rune under each codec"};
  std::vector<std::uint64_t> iterations{1000, 10000, 100000, 1000000};
  int repeats = 5;
  std::string out = "results.csv";
  std::string runefile = RUNE_SINE_RUNEFILE;
  std::uint64_t seed = 42;
  bool quiet = false;
  app.add_option("--iterations", iterations, "Comma-separated inference counts")->delimiter(',');
  app.add_option("--repeats", repeats, "Timed runs per point")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "CSV output path; the table goes next to it as .txt");
  app.add_option("--runefile", runefile, "Pipeline to time");
  app.add_option("--seed", seed, "Input seed");
  app.add_flag("-q,--quiet", quiet, "Do not print per-run timings");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    rb::SweepConfig cfg;
    cfg.iterations = iterations;
    cfg.repeats = repeats;
    cfg.runefile = runefile;
    cfg.seed = seed;
    if (!quiet) {
      cfg.on_run = [](rb::Mode m, std::uint64_t n, int r, double secs) {
        std::cerr << rb::to_string(m) << " n=" << n << " repeat " << r + 1 << ": " << secs << " s\n";
      };
    }
    rb::SweepResult res = rb::run_sweep(cfg);
    rb::report(res.records, out);
    std::cout << rb::render_table(res.records) << "\n";
    for (const auto& [key, runs] : res.runs) {
      if (key.second != iterations.back()) continue;
      std::cout << "spread " << rb::to_string(key.first) << " @" << key.second << ": " << std::fixed
                << std::setprecision(2) << rb::relative_spread(runs) * 100 << "%\n";
    }
    std::cout << "outputs identical across modes: " << (res.outputs_identical ? "yes" : "NO") << "\n";
    std::cout << "wrote " << out << "\n";
    return res.outputs_identical ? 0 : 2;
  } catch (const rune::Error& e) {
    std::cerr << "rune-bench: " << rune::to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  }
}
