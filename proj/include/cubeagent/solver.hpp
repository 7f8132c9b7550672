#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cubeagent/cube.hpp"
#include "cubeagent/notation.hpp"

namespace cubeagent {

class BudgetExceeded : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class GenerationExhausted : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Staged (layered) method

/// One of the 28 named sub-procedures of the layered method.
struct StepTemplate {
  std::string_view id;
  StagePredicate stage;
  std::string_view algorithm; // reference algorithm for the case; empty for piece insertions
};

const std::vector<StepTemplate> &step_templates();

struct Stage {
  StagePredicate goal;
  Algorithm moves;                 // canonical, face moves in the standard frame
  std::vector<std::string> labels; // step template ids this stage covers
};

struct StagePlan {
  std::vector<Stage> stages; // always the five stages, in layered order
  Algorithm concatenated() const;
  int method_length() const; // HTM of canonicalize(concatenated())
};

/// Solves the cubies stage by stage: cross, first-layer corners,
/// second-layer edges, last-layer orientation, last-layer permutation.
/// Each stage is the shortest sequence (first in move order) that reaches the
/// cumulative stage goal from the previous stage's end state.  Frames are
/// ignored; moves are expressed in the standard frame.
StagePlan solve_staged(const CubieState &state);

/// Moves that take `state` through the layered stages up to and including
/// `goal`; empty when the goal already holds.
Algorithm solve_to_stage(const CubieState &state, StagePredicate goal);

// ---------------------------------------------------------------------------
// Two-phase and bounded-optimal search

struct FastSolveConfig {
  int max_len = 30;
  std::chrono::milliseconds time_budget{200};
  // Phase-1 nodes spent looking for shorter solutions once one is known.
  // Node counts, not wall time, keep the result deterministic.
  std::uint64_t improvement_nodes = 20000;
};

/// Two-phase search.  Throws BudgetExceeded when no solution of at most
/// max_len moves is found within the time budget.
Algorithm solve_fast(const CubieState &state, const FastSolveConfig &config = {});

constexpr int kMaxOptimalCap = 12;

/// Exact distance to solved when it is at most depth_cap (<= 12), else nullopt.
std::optional<int> optimal_length_bounded(const CubieState &state, int depth_cap);
/// Same search, returning the first optimal solution found.
std::optional<Algorithm> optimal_solution_bounded(const CubieState &state, int depth_cap);

/// Largest lower bound the pruning tables give for the distance to solved.
int pruning_lower_bound(const CubieState &state);

// ---------------------------------------------------------------------------
// Scrambles and tasks

/// Uniform face moves; never the same face twice in a row, never three moves
/// on one axis in a row.  Deterministic per seed.
Algorithm scramble(std::uint64_t seed, int length);

enum class Level : std::uint8_t { Low, Medium, High };
std::string_view to_string(Level level);
Level parse_level(std::string_view s);

struct Band {
  int lo;
  int hi;
};
Band level_band(Level level);

struct Task {
  std::string id;
  Level level = Level::Low;
  Algorithm scramble;
  FaceletState start_facelets;
  StagePredicate goal = StagePredicate::Solved;
  int max_moves = 0;
  int measured_method_length = 0;
  std::optional<int> measured_optimal_length;

  friend bool operator==(const Task &, const Task &) = default;
};

struct GenerationConfig {
  int max_attempts = 20000;
  int medium_min_scramble = 9;
  int medium_max_scramble = 12;
  int high_min_scramble = 5;
  int high_max_scramble = 9;
};

Task generate_task(std::uint64_t seed, Level level, const GenerationConfig &config = {});

std::string task_to_json(const Task &task);
Task task_from_json(std::string_view text);

// Mixes a base seed with a stream tag (splitmix64).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

} // namespace cubeagent
