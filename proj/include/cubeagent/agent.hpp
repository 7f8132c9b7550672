#pragma once

// Dual-loop planner/executor.  The outer loop decomposes a task into stage
// subtasks and supervises them; the inner loop asks a planner backend for one
// action at a time, drives the rig, and writes to the memory stream.

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cubeagent/cube.hpp"
#include "cubeagent/memory.hpp"
#include "cubeagent/notation.hpp"
#include "cubeagent/solver.hpp"

namespace cubeagent {

class PlannerError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed backend output (bad JSON, missing field, token outside the alphabet).
class ProtocolError : public PlannerError {
public:
  using PlannerError::PlannerError;
};

class BackendUnreachable : public PlannerError {
public:
  using PlannerError::PlannerError;
};

enum class SubtaskStatus : std::uint8_t { Pending, Active, Done, Failed };
std::string_view to_string(SubtaskStatus s);

struct Subtask {
  std::string name;
  StagePredicate goal = StagePredicate::Solved;
  std::optional<Algorithm> hint;
  SubtaskStatus status = SubtaskStatus::Pending;

  // pending -> active -> done|failed; throws std::logic_error otherwise.
  void advance_to(SubtaskStatus next);
};

// What a backend proposes for the next step.
struct StepProposal {
  std::string thought;
  std::string reasoning;
  std::string action; // a move token, "done" or "abort"
  std::optional<int> importance;
};

struct StepRecord {
  std::string thought;
  std::string reasoning;
  std::string action;
  std::optional<std::string> reflection; // set on the step that ends a subtask
  FaceletState state_after;
  Tick tick = 0;

  friend bool operator==(const StepRecord &, const StepRecord &) = default;
};

inline constexpr std::string_view kDoneToken = "done";
inline constexpr std::string_view kAbortToken = "abort";

class PlannerBackend {
public:
  virtual ~PlannerBackend() = default;
  virtual std::vector<Subtask> decompose(const Task &task, const FaceletState &observation,
                                         const std::vector<MemoryObject> &memories) = 0;
  // `history` holds the run's last ten actions, oldest first.
  virtual StepProposal step(const Subtask &subtask, const FaceletState &observation,
                            const std::vector<std::string> &history,
                            const std::vector<MemoryObject> &memories) = 0;
};

/// Follows the layered solver.  One subtask per non-empty stage, its goal
/// lifted to the highest stage that holds once the stage's moves are played.
std::unique_ptr<PlannerBackend> oracle_backend();

/// The oracle with errors.  Each step it substitutes a random basic
/// instruction with probability p_wrong.  A fraction p_stall of states make it
/// repeat its previous move instead, on every visit, which is what produces
/// deadlocks.  Deviations named in a failure reflection for the same goal are
/// suppressed.
std::unique_ptr<PlannerBackend> noisy_backend(std::uint64_t seed, double p_wrong, double p_stall);

/// Speaks the JSON wire protocol.  "http://host:port/path" posts one request
/// per call; "stdio:COMMAND" spawns COMMAND and exchanges one line each way.
std::unique_ptr<PlannerBackend> external_backend(const std::string &endpoint);

// Wire format helpers, shared by the external backend and tests.
std::vector<Subtask> parse_decompose_response(std::string_view json);
StepProposal parse_step_response(std::string_view json);

struct RunConfig {
  bool enable_outer_loop = true;
  bool enable_memory = true;
  int step_budget_factor = 4;
  int max_replans = 3;
  int repeat_state_threshold = 3;
  int retrieval_k = 5;
  std::uint64_t seed = 0;

  void validate() const; // throws std::invalid_argument
};

/// Initial queue from the backend; the last subtask must target solved.
/// Throws PlannerError.
std::vector<Subtask> plan_initial(PlannerBackend &backend, const Task &task,
                                  const FaceletState &observation,
                                  const std::vector<MemoryObject> &memories = {});

enum class Verdict : std::uint8_t { Advance, Replan, Abort };
std::string_view to_string(Verdict v);

struct Reflection {
  Verdict verdict;
  std::string text;
};

struct SubtaskOutcome {
  Subtask subtask;
  int moves = 0;
  std::string failure_reason; // empty when done
  Algorithm named_actions;    // the repeating or trailing actions on failure
  Reflection reflection{Verdict::Advance, {}};
  bool done() const { return subtask.status == SubtaskStatus::Done; }
};

/// done -> Advance; failed with replans left -> Replan; otherwise Abort.
Reflection reflect(const SubtaskOutcome &outcome, const CubieState &state, int replans_left);

struct RunReport {
  std::string task_id;
  bool success = false;
  int moves_used = 0;
  std::vector<StepRecord> steps;
  int replans = 0;
  std::optional<std::string> failure_reason;

  friend bool operator==(const RunReport &, const RunReport &) = default;
};

std::string report_to_json(const RunReport &report);
RunReport report_from_json(std::string_view text);

/// One agent owns its rig state and memory stream; not thread-safe.
class Agent {
public:
  Agent(PlannerBackend &backend, RunConfig config);

  RunReport run_outer_loop(const Task &task);
  SubtaskOutcome run_inner_loop(Subtask &subtask);

  const MemoryStream &memory() const { return memory_; }
  const CubieState &state() const { return state_; }

private:
  std::vector<MemoryObject> recall(const std::string &query);
  void execute(const Move &m);
  std::vector<std::string> recent_actions() const;

  PlannerBackend &backend_;
  RunConfig config_;
  MemoryStream memory_;
  CubieState state_;
  const Task *task_ = nullptr;
  int moves_used_ = 0;
  int replans_left_ = 0;
  std::vector<StepRecord> steps_;
};

/// Replays a report's actions from the task's start.  Returns an empty string
/// when every step's state_after matches and a success claim ends solved
/// within max_moves; otherwise a description of the first mismatch.
std::string verify_trace(const Task &task, const RunReport &report);

} // namespace cubeagent
