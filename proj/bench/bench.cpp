// Serial reference vs OpenMP kernels: wall time and output equality.
//
//   cubeagent_bench [--repeats N] [--seeds N]

#include <chrono>
#include <cstdio>
#include <functional>
#include <omp.h>

#include "CLI11.hpp"

#include "cubeagent/harness.hpp"
#include "cubeagent/pruning.hpp"

using namespace cubeagent;

namespace {

double best_of(int repeats, const std::function<void()> &fn) {
  double best = 1e300;
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void row(const char *name, double serial, double parallel, bool same) {
  std::printf("%-22s %10.3f %10.3f %8.2fx  %s\n", name, serial, parallel, serial / parallel,
              same ? "identical" : "DIFFERENT");
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Serial vs parallel kernels"};
  int repeats = 3, seeds = 5;
  app.add_option("--repeats", repeats, "Timing repetitions (best is reported)")->check(CLI::PositiveNumber);
  app.add_option("--seeds", seeds, "Seeds for the evaluation benchmark")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-22s %10s %10s %9s\n", "kernel", "serial s", "omp s", "speedup");

  PruningTables serial_tables, parallel_tables;
  const double ts = best_of(repeats, [&] { serial_tables = PruningTables::build(PruningTables::Build::Serial); });
  const double tp = best_of(repeats, [&] { parallel_tables = PruningTables::build(PruningTables::Build::Parallel); });
  row("pruning tables", ts, tp, serial_tables == parallel_tables);

  // Warm the process-wide tables before timing anything that searches.
  PruningTables::instance();
  const auto suite = generate_suite(7, {6, 3, 3});
  BackendConfig noisy;
  noisy.kind = "noisy";
  std::string serial_json, parallel_json;
  // Stage solutions are memoised process-wide; fill that cache untimed so
  // neither variant pays for it.
  evaluate(suite, noisy, RunConfig{}, seed_range(seeds), true);
  const double es = best_of(repeats, [&] {
    serial_json = results_to_json(evaluate(suite, noisy, RunConfig{}, seed_range(seeds), false));
  });
  const double ep = best_of(repeats, [&] {
    parallel_json = results_to_json(evaluate(suite, noisy, RunConfig{}, seed_range(seeds), true));
  });
  row("noisy evaluation", es, ep, serial_json == parallel_json);
  return serial_tables == parallel_tables && serial_json == parallel_json ? 0 : 1;
}
