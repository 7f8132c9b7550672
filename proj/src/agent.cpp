#include "cubeagent/agent.hpp"

#include <algorithm>
#include <deque>
#include <mutex>
#include <random>
#include <unordered_map>

#include "json.hpp"

namespace cubeagent {

std::string_view to_string(SubtaskStatus s) {
  switch (s) {
  case SubtaskStatus::Pending: return "pending";
  case SubtaskStatus::Active: return "active";
  case SubtaskStatus::Done: return "done";
  case SubtaskStatus::Failed: return "failed";
  }
  return "?";
}

void Subtask::advance_to(SubtaskStatus next) {
  const bool ok = (status == SubtaskStatus::Pending && next == SubtaskStatus::Active) ||
                  (status == SubtaskStatus::Active &&
                   (next == SubtaskStatus::Done || next == SubtaskStatus::Failed));
  if (!ok)
    throw std::logic_error("subtask '" + name + "' cannot go from " + std::string(to_string(status)) +
                           " to " + std::string(to_string(next)));
  status = next;
}

std::string_view to_string(Verdict v) {
  switch (v) {
  case Verdict::Advance: return "advance";
  case Verdict::Replan: return "replan";
  case Verdict::Abort: return "abort";
  }
  return "?";
}

void RunConfig::validate() const {
  if (step_budget_factor < 1 || max_replans < 0 || repeat_state_threshold < 1 || retrieval_k < 1)
    throw std::invalid_argument("run config budgets must be positive");
}

namespace {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Layered-solver lookups, shared across agents.  solve_to_stage is a pure
// function, and harness runs revisit the same states across seeds and
// configurations.

class StageCache {
public:
  static StageCache &instance() {
    static StageCache cache;
    return cache;
  }

  Algorithm to_stage(const CubieState &s, StagePredicate goal) {
    std::string key = key_of(s);
    key.push_back(static_cast<char>(goal));
    {
      std::lock_guard lock(mu_);
      if (auto it = map_.find(key); it != map_.end()) return it->second;
    }
    Algorithm moves = solve_to_stage(s, goal);
    std::lock_guard lock(mu_);
    if (map_.size() > kMaxEntries) map_.clear();
    map_.emplace(std::move(key), moves);
    return moves;
  }

private:
  static constexpr std::size_t kMaxEntries = 1 << 20;

  static std::string key_of(const CubieState &s) {
    std::string k;
    k.append(s.corner_perm.begin(), s.corner_perm.end());
    k.append(s.corner_orient.begin(), s.corner_orient.end());
    k.append(s.edge_perm.begin(), s.edge_perm.end());
    k.append(s.edge_orient.begin(), s.edge_orient.end());
    return k;
  }

  std::mutex mu_;
  std::unordered_map<std::string, Algorithm> map_;
};

// Solver moves are in the standard frame; the rig turns spatial faces.
Move to_spatial(Move m, const Frame &frame) { return Move{frame.spatial_of(m.face), m.turns}; }

StagePredicate highest_holding(const CubieState &s) {
  StagePredicate best = StagePredicate::Cross;
  for (int k = 0; k < kStageCount; ++k) {
    const auto p = static_cast<StagePredicate>(k);
    if (!stage_satisfied(s, p)) break;
    best = p;
  }
  return best;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

double unit_interval(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

// Cuts the canonical layered solution wherever a higher stage first holds, so
// the subtasks together play exactly the method-length solution.
std::vector<Subtask> staged_subtasks(const CubieState &start) {
  const CubieState s0 = start.normalized();
  const Algorithm plan = canonicalize(solve_staged(s0).concatenated());
  std::vector<Subtask> out;
  CubieState s = s0;
  int level = stage_satisfied(s, StagePredicate::Cross) ? static_cast<int>(highest_holding(s)) : -1;
  Algorithm segment;
  for (const Move &m : plan) {
    s = apply_move(s, m);
    segment.push_back(to_spatial(m, start.frame));
    if (!stage_satisfied(s, StagePredicate::Cross)) continue;
    const int now = static_cast<int>(highest_holding(s));
    if (now <= level) continue;
    level = now;
    Subtask t;
    t.goal = static_cast<StagePredicate>(now);
    t.name = std::string(to_string(t.goal));
    t.hint = std::move(segment);
    segment.clear();
    out.push_back(std::move(t));
  }
  if (out.empty()) out.push_back(Subtask{"solved", StagePredicate::Solved, Algorithm{}, SubtaskStatus::Pending});
  return out;
}

class OracleBackend final : public PlannerBackend {
public:
  std::vector<Subtask> decompose(const Task &, const FaceletState &observation,
                                 const std::vector<MemoryObject> &) override {
    pending_.clear();
    return staged_subtasks(from_facelets(observation));
  }

  StepProposal step(const Subtask &subtask, const FaceletState &observation,
                    const std::vector<std::string> &,
                    const std::vector<MemoryObject> &) override {
    const CubieState s = from_facelets(observation);
    if (stage_satisfied(s, subtask.goal))
      return {"goal " + std::string(to_string(subtask.goal)) + " holds", "nothing left to do",
              std::string(kDoneToken), std::nullopt};

    std::string source = "continuing the plan";
    if (!(expected_ == observation && goal_ == subtask.goal && !pending_.empty())) {
      pending_.clear();
      if (subtask.hint && !subtask.hint->empty() &&
          stage_satisfied(apply_algorithm(s, *subtask.hint), subtask.goal)) {
        pending_.assign(subtask.hint->begin(), subtask.hint->end());
        source = "following the hint";
      } else {
        for (const Move &m : StageCache::instance().to_stage(s.normalized(), subtask.goal))
          pending_.push_back(to_spatial(m, s.frame));
        source = "re-solved from the observed state";
      }
    }
    const Move next = pending_.front();
    pending_.pop_front();
    goal_ = subtask.goal;
    expected_ = to_facelets(apply_move(s, next));
    return {"working toward " + std::string(to_string(subtask.goal)) + ", " +
                std::to_string(pending_.size() + 1) + " moves to go",
            source + "; next " + to_string(next), to_string(next), std::nullopt};
  }

private:
  std::deque<Move> pending_;
  FaceletState expected_;
  StagePredicate goal_ = StagePredicate::Solved;
};

// Failure reflections read: "subtask NAME failed on goal GOAL after N moves
// (REASON); actions: A B C".
struct FailureNote {
  std::string goal;
  std::vector<std::string> actions;
};

std::optional<FailureNote> parse_failure(const MemoryObject &m) {
  if (m.kind != MemoryKind::Reflection) return std::nullopt;
  const std::string &d = m.description;
  const auto g = d.find(" failed on goal ");
  const auto a = d.find("; actions:");
  if (g == std::string::npos || a == std::string::npos) return std::nullopt;
  FailureNote note;
  const auto gs = g + std::string_view(" failed on goal ").size();
  note.goal = d.substr(gs, d.find(' ', gs) - gs);
  const auto from = a + std::string_view("; actions:").size();
  const std::string rest = d.substr(from, d.find(';', from) - from);
  std::size_t pos = 0;
  while (pos < rest.size()) {
    const auto start = rest.find_first_not_of(' ', pos);
    if (start == std::string::npos) break;
    const auto end = rest.find(' ', start);
    note.actions.push_back(rest.substr(start, end - start));
    pos = end;
  }
  return note;
}

// The basic instruction set: quarter turns plus whole-cube rotations.
constexpr std::string_view kInstructions[] = {"U", "U'", "R", "R'", "F", "F'", "D", "D'",
                                              "L", "L'", "B", "B'", "x",  "y",  "z"};

class NoisyBackend final : public PlannerBackend {
public:
  NoisyBackend(std::uint64_t seed, double p_wrong, double p_stall)
      : seed_(seed), rng_(seed), p_wrong_(p_wrong), p_stall_(p_stall) {
    if (p_wrong < 0 || p_wrong >= 1 || p_stall < 0 || p_stall >= 1)
      throw std::invalid_argument("error rates must lie in [0, 1)");
  }

  std::vector<Subtask> decompose(const Task &task, const FaceletState &observation,
                                 const std::vector<MemoryObject> &memories) override {
    return oracle_.decompose(task, observation, memories);
  }

  StepProposal step(const Subtask &subtask, const FaceletState &observation,
                    const std::vector<std::string> &history,
                    const std::vector<MemoryObject> &memories) override {
    StepProposal p = oracle_.step(subtask, observation, history, memories);
    if (p.action == kDoneToken) return p;

    // Wrong turns are independent per step.  Stalls depend only on what is
    // seen, so a state that provokes a stall provokes it on every visit.
    const std::string goal(to_string(subtask.goal));
    std::string deviation;
    std::string why;
    if (unit_interval(rng_()) < p_wrong_) {
      deviation = kInstructions[rng_() % std::size(kInstructions)];
      why = "misjudged the layer to turn";
    } else if (!history.empty() &&
               unit_interval(derive_seed(seed_, fnv1a(observation.stickers))) < p_stall_) {
      deviation = history.back();
      why = "repeated the last turn";
    }
    if (deviation.empty() || deviation == p.action) return p;

    for (const auto &m : memories) {
      const auto note = parse_failure(m);
      if (!note || note->goal != goal) continue;
      if (std::find(note->actions.begin(), note->actions.end(), deviation) != note->actions.end()) {
        p.reasoning += "; avoided " + deviation + ", which failed before on " + goal;
        return p;
      }
    }
    p.reasoning = why + "; next " + deviation;
    p.action = deviation;
    return p;
  }

private:
  OracleBackend oracle_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  double p_wrong_, p_stall_;
};

Move parse_single_move(const std::string &token) {
  Algorithm alg;
  try {
    alg = parse_algorithm(token);
  } catch (const ParseError &e) {
    throw ProtocolError("action '" + token + "' is outside the alphabet");
  }
  if (alg.size() != 1) throw ProtocolError("action '" + token + "' is not a single move");
  return alg.front();
}

std::string tokens(const Algorithm &alg) { return format_algorithm(alg); }

} // namespace

std::unique_ptr<PlannerBackend> oracle_backend() { return std::make_unique<OracleBackend>(); }

std::unique_ptr<PlannerBackend> noisy_backend(std::uint64_t seed, double p_wrong, double p_stall) {
  return std::make_unique<NoisyBackend>(seed, p_wrong, p_stall);
}

// ---------------------------------------------------------------------------
// Wire responses

std::vector<Subtask> parse_decompose_response(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const auto &list = j.at("subtasks");
    if (!list.is_array() || list.empty()) throw ProtocolError("decompose response has no subtasks");
    std::vector<Subtask> out;
    for (const auto &item : list) {
      Subtask t;
      t.goal = parse_stage(item.at("goal").get<std::string>());
      t.name = item.contains("name") ? item.at("name").get<std::string>() : std::string(to_string(t.goal));
      if (item.contains("hint") && !item.at("hint").is_null())
        t.hint = parse_algorithm(item.at("hint").get<std::string>());
      out.push_back(std::move(t));
    }
    return out;
  } catch (const ProtocolError &) {
    throw;
  } catch (const std::exception &e) {
    throw ProtocolError(std::string("bad decompose response: ") + e.what());
  }
}

StepProposal parse_step_response(std::string_view text) {
  StepProposal p;
  try {
    const auto j = nlohmann::json::parse(text);
    p.thought = j.value("thought", "");
    p.reasoning = j.value("reasoning", "");
    p.action = j.at("action").get<std::string>();
    if (j.contains("importance") && !j.at("importance").is_null()) {
      const int imp = j.at("importance").get<int>();
      if (imp < 1 || imp > 10) throw ProtocolError("importance must lie in 1..10");
      p.importance = imp;
    }
  } catch (const ProtocolError &) {
    throw;
  } catch (const std::exception &e) {
    throw ProtocolError(std::string("bad step response: ") + e.what());
  }
  if (p.action != kDoneToken && p.action != kAbortToken) parse_single_move(p.action);
  return p;
}

// ---------------------------------------------------------------------------
// Planning and reflection

std::vector<Subtask> plan_initial(PlannerBackend &backend, const Task &task, const FaceletState &observation,
                                  const std::vector<MemoryObject> &memories) {
  auto queue = backend.decompose(task, observation, memories);
  if (queue.empty()) throw PlannerError("backend returned an empty plan");
  if (queue.back().goal != StagePredicate::Solved)
    throw PlannerError("plan does not end in a solved subtask");
  for (auto &t : queue) t.status = SubtaskStatus::Pending;
  return queue;
}

Reflection reflect(const SubtaskOutcome &outcome, const CubieState &state, int replans_left) {
  const auto &t = outcome.subtask;
  const std::string goal(to_string(t.goal));
  if (outcome.done())
    return {Verdict::Advance, "subtask " + t.name + " complete: goal " + goal + " reached after " +
                                  std::to_string(outcome.moves) + " moves"};
  const Verdict v = replans_left > 0 ? Verdict::Replan : Verdict::Abort;
  std::string text = "subtask " + t.name + " failed on goal " + goal + " after " + std::to_string(outcome.moves) +
                     " moves (" + outcome.failure_reason + "); actions: " + tokens(outcome.named_actions);
  text += stage_satisfied(state, StagePredicate::Cross)
              ? "; cube holds " + std::string(to_string(highest_holding(state)))
              : "; cross is broken";
  text += v == Verdict::Replan ? "; replanning" : "; giving up";
  return {v, text};
}

// ---------------------------------------------------------------------------
// Agent

Agent::Agent(PlannerBackend &backend, RunConfig config) : backend_(backend), config_(config) {
  config_.validate();
}

std::vector<MemoryObject> Agent::recall(const std::string &query) {
  if (!config_.enable_memory || memory_.empty()) return {};
  return memory_.retrieve(query, config_.retrieval_k);
}

std::vector<std::string> Agent::recent_actions() const {
  std::vector<std::string> out;
  for (auto it = steps_.rbegin(); it != steps_.rend() && out.size() < 10; ++it)
    if (it->action != kDoneToken && it->action != kAbortToken) out.push_back(it->action);
  std::reverse(out.begin(), out.end());
  return out;
}

void Agent::execute(const Move &m) {
  state_ = apply_move(state_, m);
  if (!m.is_rotation()) ++moves_used_;
}

SubtaskOutcome Agent::run_inner_loop(Subtask &subtask) {
  subtask.advance_to(SubtaskStatus::Active);
  SubtaskOutcome out;
  const std::string goal(to_string(subtask.goal));
  const int remaining = std::max(1, task_->max_moves - moves_used_);
  const int expected = subtask.hint ? std::max(1, htm_length(*subtask.hint)) : remaining;
  const int step_budget = config_.step_budget_factor * expected;
  const std::size_t first_step = steps_.size();

  std::unordered_map<std::string, int> seen;
  std::unordered_map<std::string, std::size_t> last_seen; // state -> history length
  std::vector<std::string> history;
  Algorithm moves;
  {
    const auto f = to_facelets(state_).stickers;
    seen[f] = 1;
    last_seen[f] = 0;
  }

  auto fail = [&](std::string reason, Algorithm named) {
    out.failure_reason = std::move(reason);
    out.named_actions = std::move(named);
    subtask.advance_to(SubtaskStatus::Failed);
  };
  auto trailing = [&] {
    const std::size_t n = std::min<std::size_t>(moves.size(), 10);
    return Algorithm(moves.end() - static_cast<std::ptrdiff_t>(n), moves.end());
  };

  while (true) {
    if (stage_satisfied(state_, subtask.goal)) {
      subtask.advance_to(SubtaskStatus::Done);
      break;
    }
    if (moves_used_ >= task_->max_moves) {
      fail("move_budget_exhausted", trailing());
      break;
    }
    if (static_cast<int>(history.size()) >= step_budget) {
      fail("step_budget_exhausted", trailing());
      break;
    }

    const auto memories = recall("goal " + goal + " subtask " + subtask.name + " failed actions");
    const FaceletState seen_now = to_facelets(state_);
    std::optional<StepProposal> proposal;
    std::optional<Move> move;
    std::string error;
    for (int attempt = 0; attempt < 2 && !proposal; ++attempt) {
      try {
        StepProposal p = backend_.step(subtask, seen_now, recent_actions(), memories);
        if (p.action != kDoneToken && p.action != kAbortToken) move = parse_single_move(p.action);
        proposal = std::move(p);
      } catch (const BackendUnreachable &e) {
        error = "backend_unreachable";
        break;
      } catch (const ProtocolError &e) {
        error = "protocol_error";
      }
    }
    if (!proposal) {
      fail(error, trailing());
      break;
    }

    StepRecord rec;
    rec.thought = proposal->thought;
    rec.reasoning = proposal->reasoning;
    rec.action = proposal->action;
    rec.tick = memory_.clock();
    if (!move) {
      rec.state_after = seen_now;
      steps_.push_back(std::move(rec));
      fail(proposal->action == kDoneToken ? "premature_done" : "aborted", trailing());
      break;
    }

    execute(*move);
    moves.push_back(*move);
    history.push_back(proposal->action);
    rec.state_after = to_facelets(state_);
    steps_.push_back(std::move(rec));
    const bool reached = stage_satisfied(state_, subtask.goal);
    memory_.record("executed " + proposal->action + " toward " + goal + (reached ? "; " + goal + " reached" : ""),
                   MemoryKind::Observation, proposal->importance);

    const auto &f = steps_.back().state_after.stickers;
    const int count = ++seen[f];
    const std::size_t prev = last_seen.count(f) ? last_seen[f] : 0;
    last_seen[f] = history.size();
    if (count > config_.repeat_state_threshold) {
      // Name the cycle that brought us back here.
      fail("deadlock", Algorithm(moves.begin() + static_cast<std::ptrdiff_t>(prev), moves.end()));
      break;
    }
  }

  out.moves = static_cast<int>(moves.size());
  out.subtask = subtask;
  out.reflection = reflect(out, state_, replans_left_);
  if (steps_.size() > first_step) steps_.back().reflection = out.reflection.text;
  if (config_.enable_memory) memory_.record(out.reflection.text, MemoryKind::Reflection);
  return out;
}

RunReport Agent::run_outer_loop(const Task &task) {
  task_ = &task;
  state_ = from_facelets(task.start_facelets);
  memory_ = MemoryStream();
  moves_used_ = 0;
  steps_.clear();
  replans_left_ = config_.enable_outer_loop ? config_.max_replans : 0;

  RunReport report;
  report.task_id = task.id;
  auto finish = [&](std::optional<std::string> reason) {
    report.moves_used = moves_used_;
    report.steps = std::move(steps_);
    steps_.clear();
    report.success = !reason && is_solved(state_) && moves_used_ <= task.max_moves;
    if (!reason && !report.success) reason = is_solved(state_) ? "move_budget_exhausted" : "plan_incomplete";
    report.failure_reason = std::move(reason);
    task_ = nullptr;
    return report;
  };

  std::deque<Subtask> queue;
  std::string plan_error;
  auto plan = [&](const std::string &query) -> bool {
    try {
      auto subtasks = plan_initial(backend_, task, to_facelets(state_), recall(query));
      if (!config_.enable_outer_loop) {
        // One flat subtask: no stage structure to supervise.
        Subtask flat{"solved", StagePredicate::Solved, Algorithm{}, SubtaskStatus::Pending};
        for (const auto &t : subtasks) {
          if (!t.hint) {
            flat.hint.reset();
            break;
          }
          flat.hint->insert(flat.hint->end(), t.hint->begin(), t.hint->end());
        }
        subtasks.assign(1, flat);
      }
      queue.assign(subtasks.begin(), subtasks.end());
      std::string names;
      for (const auto &t : queue) names += (names.empty() ? "" : " -> ") + t.name;
      memory_.record("plan: " + names, MemoryKind::Plan);
      return true;
    } catch (const BackendUnreachable &) {
      plan_error = "backend_unreachable";
      return false;
    } catch (const PlannerError &) {
      plan_error = "planner_error";
      return false;
    }
  };

  if (!plan("plan to solve the cube")) return finish(plan_error);
  while (!queue.empty()) {
    Subtask current = queue.front();
    queue.pop_front();
    const SubtaskOutcome outcome = run_inner_loop(current);
    switch (outcome.reflection.verdict) {
    case Verdict::Advance:
      break;
    case Verdict::Replan:
      if (moves_used_ >= task.max_moves) return finish("move_budget_exhausted");
      ++report.replans;
      --replans_left_;
      if (!plan("replan after failure on goal " + std::string(to_string(current.goal)) + " failed actions"))
        return finish(plan_error);
      break;
    case Verdict::Abort:
      if (outcome.failure_reason == "move_budget_exhausted" || !config_.enable_outer_loop ||
          outcome.failure_reason == "aborted" || outcome.failure_reason == "backend_unreachable")
        return finish(outcome.failure_reason);
      return finish("replan_exhausted");
    }
  }
  return finish(std::nullopt);
}

// ---------------------------------------------------------------------------
// Reports

std::string report_to_json(const RunReport &r) {
  ordered_json j;
  j["task_id"] = r.task_id;
  j["success"] = r.success;
  j["moves_used"] = r.moves_used;
  auto steps = ordered_json::array();
  for (const auto &s : r.steps) {
    ordered_json o;
    o["thought"] = s.thought;
    o["reasoning"] = s.reasoning;
    o["action"] = s.action;
    if (s.reflection) o["reflection"] = *s.reflection;
    o["state_after"] = s.state_after.stickers;
    o["tick"] = s.tick;
    steps.push_back(std::move(o));
  }
  j["steps"] = std::move(steps);
  j["replans"] = r.replans;
  if (r.failure_reason) j["failure_reason"] = *r.failure_reason;
  return j.dump(2);
}

RunReport report_from_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text);
  RunReport r;
  r.task_id = j.at("task_id").get<std::string>();
  r.success = j.at("success").get<bool>();
  r.moves_used = j.at("moves_used").get<int>();
  for (const auto &o : j.at("steps")) {
    StepRecord s;
    s.thought = o.at("thought").get<std::string>();
    s.reasoning = o.at("reasoning").get<std::string>();
    s.action = o.at("action").get<std::string>();
    if (o.contains("reflection")) s.reflection = o.at("reflection").get<std::string>();
    s.state_after = FaceletState{o.at("state_after").get<std::string>()};
    s.tick = o.at("tick").get<Tick>();
    r.steps.push_back(std::move(s));
  }
  r.replans = j.at("replans").get<int>();
  if (j.contains("failure_reason")) r.failure_reason = j.at("failure_reason").get<std::string>();
  return r;
}

std::string verify_trace(const Task &task, const RunReport &report) {
  CubieState s = from_facelets(task.start_facelets);
  int moves = 0;
  for (std::size_t i = 0; i < report.steps.size(); ++i) {
    const auto &step = report.steps[i];
    if (step.action != kDoneToken && step.action != kAbortToken) {
      Move m;
      try {
        m = parse_single_move(step.action);
      } catch (const ProtocolError &e) {
        return "step " + std::to_string(i) + ": " + e.what();
      }
      s = apply_move(s, m);
      if (!m.is_rotation()) ++moves;
    }
    if (to_facelets(s) != step.state_after) return "step " + std::to_string(i) + ": state_after does not match replay";
  }
  if (moves != report.moves_used)
    return "report claims " + std::to_string(report.moves_used) + " moves, replay counts " + std::to_string(moves);
  if (report.success && !is_solved(s)) return "success claimed but replay does not end solved";
  if (report.success && moves > task.max_moves)
    return "success claimed with " + std::to_string(moves) + " moves over the limit of " +
           std::to_string(task.max_moves);
  return {};
}

} // namespace cubeagent
