#pragma once

// Task suites, evaluation runs and ablations.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cubeagent/agent.hpp"
#include "cubeagent/solver.hpp"

namespace cubeagent {

struct SuiteCounts {
  int low = 15;
  int medium = 18;
  int high = 10;
};

struct TaskSuite {
  std::uint64_t seed = 0;
  std::vector<Task> tasks;
  friend bool operator==(const TaskSuite &, const TaskSuite &) = default;
};

/// Task i of a level uses seed derive_seed(seed, level * 2^32 + i).  Tasks
/// are generated in parallel; the result does not depend on thread count.
TaskSuite generate_suite(std::uint64_t seed, SuiteCounts counts = {}, const GenerationConfig &config = {});

std::string suite_to_json(const TaskSuite &suite);
TaskSuite suite_from_json(std::string_view text);

struct BackendConfig {
  std::string kind = "oracle"; // oracle | noisy | external
  double p_wrong = 0.15;
  double p_stall = 0.05;
  std::string endpoint;
};

/// Noisy backends get a seed derived from the run seed and the task id, so
/// configurations evaluated with the same seeds are paired.
std::unique_ptr<PlannerBackend> make_backend(const BackendConfig &config, std::uint64_t run_seed,
                                             const Task &task);

/// Reads {"backend":…,"p_wrong":…,"p_stall":…,"endpoint":…} plus RunConfig
/// fields; absent keys keep their defaults.
void load_config(std::string_view json, BackendConfig &backend, RunConfig &run);

struct TaskResult {
  std::string task_id;
  Level level = Level::Low;
  std::uint64_t seed = 0;
  bool success = false;
  int moves_used = 0;
  int replans = 0;
  std::optional<std::string> failure_reason;
  std::string actions; // executed moves, space separated; enough to replay the run
  friend bool operator==(const TaskResult &, const TaskResult &) = default;
};

struct ResultRow {
  std::string name;
  std::array<int, 3> successes{};
  std::array<int, 3> totals{};
  std::vector<TaskResult> details; // sorted by task id, then seed

  std::optional<double> accuracy(Level level) const; // nullopt when the level has no runs
};

// One-sided exact sign test on per-seed medium+high accuracy.
struct PairedComparison {
  std::string better, worse;
  int wins = 0, losses = 0, ties = 0;
  double p_value = 1.0;
  bool significant = false; // p < 0.05
};

struct ResultsTable {
  std::vector<ResultRow> rows;
  std::vector<std::uint64_t> seeds;
  std::string config_hash;
  std::vector<PairedComparison> comparisons;
};

/// Accuracy to two decimals, e.g. "38.89%".
std::string format_percent(double fraction);

/// Each task once per seed.  Successes are re-verified by replaying the trace.
ResultRow evaluate_row(const TaskSuite &suite, const BackendConfig &backend, const RunConfig &run,
                       const std::vector<std::uint64_t> &seeds, std::string name, bool parallel = true);

ResultsTable evaluate(const TaskSuite &suite, const BackendConfig &backend, const RunConfig &run,
                      const std::vector<std::uint64_t> &seeds, bool parallel = true);

/// Mean over seeds of the medium+high success rate; one entry per seed.
std::vector<double> per_seed_hard_accuracy(const ResultRow &row, const std::vector<std::uint64_t> &seeds);

PairedComparison sign_test(const ResultRow &better, const ResultRow &worse, const std::vector<std::uint64_t> &seeds);

/// Rows full, no-dual-loop, no-memory, vlm-only with the noisy backend.
ResultsTable run_ablations(const TaskSuite &suite, const std::vector<std::uint64_t> &seeds, double p_wrong = 0.15,
                           double p_stall = 0.05, bool parallel = true);

std::vector<std::uint64_t> seed_range(int n); // 1..n

std::string results_to_json(const ResultsTable &table);
std::string results_to_text(const ResultsTable &table);

} // namespace cubeagent
