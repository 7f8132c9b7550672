#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <thread>

#include "cubeagent/agent.hpp"
#include "httplib.h"
#include "json.hpp"

using namespace cubeagent;

namespace {

Task make_task(std::string_view scramble, int max_moves) {
  Task t;
  t.id = "t-" + std::string(scramble);
  t.scramble = parse_algorithm(scramble);
  t.start_facelets = to_facelets(apply_algorithm(identity(), t.scramble));
  t.max_moves = max_moves;
  return t;
}

// Plays one fixed action forever.
struct FixedBackend : PlannerBackend {
  std::vector<Subtask> plan{Subtask{"solved", StagePredicate::Solved, std::nullopt, SubtaskStatus::Pending}};
  std::string action = "U";
  int decomposes = 0;

  std::vector<Subtask> decompose(const Task &, const FaceletState &, const std::vector<MemoryObject> &) override {
    ++decomposes;
    return plan;
  }
  StepProposal step(const Subtask &, const FaceletState &, const std::vector<std::string> &,
                    const std::vector<MemoryObject> &) override {
    return {"turning", "always the same", action, std::nullopt};
  }
};

int count_kind(const MemoryStream &m, MemoryKind kind) {
  int n = 0;
  for (const auto &o : m.objects()) n += o.kind == kind;
  return n;
}

} // namespace

TEST_CASE("subtask status transitions") {
  Subtask t{"cross", StagePredicate::Cross, std::nullopt, SubtaskStatus::Pending};
  CHECK_THROWS_AS(t.advance_to(SubtaskStatus::Done), std::logic_error);
  t.advance_to(SubtaskStatus::Active);
  CHECK_THROWS_AS(t.advance_to(SubtaskStatus::Pending), std::logic_error);
  t.advance_to(SubtaskStatus::Failed);
  CHECK_THROWS_AS(t.advance_to(SubtaskStatus::Done), std::logic_error);
}

TEST_CASE("oracle plan: low task is one solved subtask with the one-move hint") {
  const Task task = generate_task(11, Level::Low);
  auto oracle = oracle_backend();
  const auto plan = plan_initial(*oracle, task, task.start_facelets);
  REQUIRE(plan.size() == 1);
  CHECK(plan[0].goal == StagePredicate::Solved);
  CHECK(plan[0].name == "solved");
  REQUIRE(plan[0].hint);
  CHECK(*plan[0].hint == invert(task.scramble));
}

TEST_CASE("oracle plan: solved start needs no moves") {
  const Task task = make_task("", 4);
  auto oracle = oracle_backend();
  const auto plan = plan_initial(*oracle, task, task.start_facelets);
  REQUIRE(plan.size() == 1);
  CHECK(plan[0].hint->empty());
  Agent agent(*oracle, {});
  const auto report = agent.run_outer_loop(task);
  CHECK(report.success);
  CHECK(report.moves_used == 0);
  CHECK(report.steps.empty());
}

TEST_CASE("oracle plan: high tasks mirror the layered solution") {
  // One subtask per non-empty stage, unless canonical cancellation across a
  // stage boundary removes that intermediate state from the plan.
  for (std::uint64_t seed : {1, 2, 3, 4, 58}) {
    CAPTURE(seed);
    const Task task = generate_task(seed, Level::High);
    auto oracle = oracle_backend();
    const auto plan = plan_initial(*oracle, task, task.start_facelets);
    REQUIRE(!plan.empty());
    CHECK(plan.size() <= 5);
    Algorithm all;
    CubieState s = from_facelets(task.start_facelets);
    for (std::size_t i = 0; i < plan.size(); ++i) {
      if (i > 0) CHECK(plan[i].goal > plan[i - 1].goal);
      CHECK_FALSE(stage_satisfied(s, plan[i].goal));
      s = apply_algorithm(s, *plan[i].hint);
      CHECK(stage_satisfied(s, plan[i].goal));
      all.insert(all.end(), plan[i].hint->begin(), plan[i].hint->end());
    }
    CHECK(plan.back().goal == StagePredicate::Solved);
    CHECK(htm_length(all) == task.measured_method_length);

    const auto staged = solve_staged(from_facelets(task.start_facelets));
    std::size_t nonempty = 0;
    for (const auto &st : staged.stages) nonempty += !st.moves.empty();
    if (canonicalize(staged.concatenated()) == staged.concatenated()) CHECK(plan.size() == nonempty);
    if (seed == 58) {
      REQUIRE(plan.size() == 5);
      CHECK(plan[0].name == "cross");
      CHECK(plan[4].name == "solved");
    }
  }
}

TEST_CASE("plan_initial rejects plans that do not end solved") {
  FixedBackend b;
  b.plan = {Subtask{"cross", StagePredicate::Cross, std::nullopt, SubtaskStatus::Pending}};
  const Task task = make_task("R", 4);
  CHECK_THROWS_AS(plan_initial(b, task, task.start_facelets), PlannerError);
  b.plan.clear();
  CHECK_THROWS_AS(plan_initial(b, task, task.start_facelets), PlannerError);
}

TEST_CASE("oracle runs succeed within the method length") {
  for (std::uint64_t seed = 1; seed <= 2; ++seed) {
    for (Level level : {Level::Low, Level::Medium, Level::High}) {
      const Task task = generate_task(seed, level);
      auto oracle = oracle_backend();
      Agent agent(*oracle, {});
      const auto report = agent.run_outer_loop(task);
      CHECK(report.success);
      CHECK_FALSE(report.failure_reason);
      CHECK(report.replans == 0);
      CHECK(report.moves_used <= task.measured_method_length);
      CHECK(verify_trace(task, report).empty());
      // One observation per action, one reflection per subtask, one plan.
      CHECK(count_kind(agent.memory(), MemoryKind::Observation) == report.moves_used);
      CHECK(count_kind(agent.memory(), MemoryKind::Plan) == 1);
      int reflections = 0;
      for (const auto &s : report.steps) reflections += s.reflection.has_value();
      CHECK(count_kind(agent.memory(), MemoryKind::Reflection) == reflections);
    }
  }
}

TEST_CASE("inner loop: oracle plays exactly the hint") {
  const Task task = generate_task(3, Level::High);
  auto oracle = oracle_backend();
  const auto plan = plan_initial(*oracle, task, task.start_facelets);
  Agent agent(*oracle, {});
  const auto report = agent.run_outer_loop(task);
  Algorithm hints;
  for (const auto &t : plan) hints.insert(hints.end(), t.hint->begin(), t.hint->end());
  REQUIRE(report.steps.size() == hints.size());
  for (std::size_t i = 0; i < hints.size(); ++i) CHECK(report.steps[i].action == to_string(hints[i]));
}

TEST_CASE("inner loop: a satisfied subtask is done without actions") {
  const Task task = make_task("U", 8);
  FixedBackend b;
  b.plan = {Subtask{"cross", StagePredicate::Cross, std::nullopt, SubtaskStatus::Pending},
            Subtask{"solved", StagePredicate::Solved, std::nullopt, SubtaskStatus::Pending}};
  b.action = "U'";
  Agent agent(b, {});
  const auto report = agent.run_outer_loop(task);
  CHECK(report.success);
  CHECK(report.moves_used == 1);
  const auto &objects = agent.memory().objects();
  const auto first_reflection = std::find_if(objects.begin(), objects.end(),
                                             [](const auto &m) { return m.kind == MemoryKind::Reflection; });
  REQUIRE(first_reflection != objects.end());
  CHECK(first_reflection->description == "subtask cross complete: goal cross reached after 0 moves");
}

TEST_CASE("deadlock: a backend that always plays U") {
  const Task task = make_task("R", 100);
  FixedBackend b;
  RunConfig flat;
  flat.enable_outer_loop = false;
  Agent agent(b, flat);
  const auto report = agent.run_outer_loop(task);
  CHECK_FALSE(report.success);
  CHECK(report.failure_reason == "deadlock");
  // U has order 4: the start state is seen a fourth time after 12 turns.
  CHECK(report.moves_used == 12);
  REQUIRE(report.steps.back().reflection);
  CHECK(report.steps.back().reflection->find("failed on goal solved") != std::string::npos);
  CHECK(report.steps.back().reflection->find("actions: U U U U") != std::string::npos);
  CHECK(verify_trace(task, report).empty());
}

TEST_CASE("replanning is bounded") {
  const Task task = make_task("R", 100);
  FixedBackend b;
  Agent agent(b, {});
  const auto report = agent.run_outer_loop(task);
  CHECK_FALSE(report.success);
  CHECK(report.failure_reason == "replan_exhausted");
  CHECK(report.replans == 3);
  CHECK(b.decomposes == 4);
  CHECK(report.moves_used == 48);
}

TEST_CASE("the task move budget stops a run") {
  const Task task = make_task("R", 5);
  FixedBackend b;
  Agent agent(b, {});
  const auto report = agent.run_outer_loop(task);
  CHECK(report.failure_reason == "move_budget_exhausted");
  CHECK(report.moves_used == 5);
}

TEST_CASE("reflect verdicts") {
  SubtaskOutcome done;
  done.subtask = Subtask{"cross", StagePredicate::Cross, std::nullopt, SubtaskStatus::Done};
  done.moves = 4;
  CHECK(reflect(done, identity(), 3).verdict == Verdict::Advance);

  SubtaskOutcome failed;
  failed.subtask = Subtask{"cross", StagePredicate::Cross, std::nullopt, SubtaskStatus::Failed};
  failed.moves = 9;
  failed.failure_reason = "deadlock";
  failed.named_actions = parse_algorithm("D' D");
  const auto r = reflect(failed, apply_algorithm(identity(), "D"), 2);
  CHECK(r.verdict == Verdict::Replan);
  CHECK(r.text.find("goal cross") != std::string::npos);
  CHECK(r.text.find("9 moves") != std::string::npos);
  CHECK(reflect(failed, identity(), 0).verdict == Verdict::Abort);
  CHECK(builtin_importance(MemoryKind::Reflection, r.text) > builtin_importance(MemoryKind::Observation, "executed U"));
}

TEST_CASE("noisy backend without errors is the oracle") {
  for (std::uint64_t seed = 1; seed <= 2; ++seed) {
    const Task task = generate_task(seed, Level::High);
    auto oracle = oracle_backend();
    auto noisy = noisy_backend(seed, 0.0, 0.0);
    Agent a(*oracle, {}), b(*noisy, {});
    CHECK(report_to_json(a.run_outer_loop(task)) == report_to_json(b.run_outer_loop(task)));
  }
  CHECK_THROWS_AS(noisy_backend(1, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(noisy_backend(1, 0.1, -0.1), std::invalid_argument);
}

TEST_CASE("noisy runs are deterministic and replayable") {
  const Task task = generate_task(2, Level::Medium);
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    auto n1 = noisy_backend(seed, 0.15, 0.05);
    auto n2 = noisy_backend(seed, 0.15, 0.05);
    Agent a(*n1, {}), b(*n2, {});
    const auto ra = a.run_outer_loop(task);
    const auto rb = b.run_outer_loop(task);
    CHECK(report_to_json(ra) == report_to_json(rb));
    CHECK(verify_trace(task, ra).empty());
  }
}

TEST_CASE("noisy backend: failure reflections suppress a repeated deviation") {
  const Task task = make_task("R", 8);
  const FaceletState obs = task.start_facelets;
  const Subtask solved{"solved", StagePredicate::Solved, std::nullopt, SubtaskStatus::Active};
  const std::vector<std::string> history{"D"};

  // Stalls on every state: repeats D.
  auto noisy = noisy_backend(5, 0.0, 0.999999);
  CHECK(noisy->step(solved, obs, history, {}).action == "D");

  MemoryStream stream;
  stream.record("subtask solved failed on goal solved after 8 moves (deadlock); actions: D' D; cross is broken",
                MemoryKind::Reflection);
  const auto memories = stream.retrieve("goal solved", 5);
  CHECK(noisy->step(solved, obs, history, memories).action == "R'");

  // A reflection about another goal does not apply.
  MemoryStream other;
  other.record("subtask cross failed on goal cross after 8 moves (deadlock); actions: D' D", MemoryKind::Reflection);
  CHECK(noisy->step(solved, obs, history, other.retrieve("goal solved", 5)).action == "D");
}

TEST_CASE("memory ablation discards reflections") {
  const Task task = generate_task(1, Level::High);
  auto oracle = oracle_backend();
  RunConfig off;
  off.enable_memory = false;
  Agent agent(*oracle, off);
  const auto report = agent.run_outer_loop(task);
  CHECK(report.success);
  CHECK(count_kind(agent.memory(), MemoryKind::Reflection) == 0);
  CHECK(count_kind(agent.memory(), MemoryKind::Observation) == report.moves_used);
}

TEST_CASE("dual-loop ablation runs one flat subtask") {
  const Task task = generate_task(1, Level::High);
  auto oracle = oracle_backend();
  RunConfig flat;
  flat.enable_outer_loop = false;
  Agent agent(*oracle, flat);
  const auto report = agent.run_outer_loop(task);
  CHECK(report.success);
  CHECK(report.moves_used == task.measured_method_length);
  int reflections = 0;
  for (const auto &s : report.steps) reflections += s.reflection.has_value();
  CHECK(reflections == 1);
}

TEST_CASE("run config validation") {
  RunConfig c;
  c.step_budget_factor = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  FixedBackend b;
  CHECK_THROWS_AS(Agent(b, c), std::invalid_argument);
}

TEST_CASE("report JSON round trip and trace tampering") {
  const Task task = generate_task(4, Level::Medium);
  auto noisy = noisy_backend(9, 0.15, 0.05);
  Agent agent(*noisy, {});
  const auto report = agent.run_outer_loop(task);
  const auto text = report_to_json(report);
  CHECK(report_from_json(text) == report);
  const auto j = nlohmann::json::parse(text);
  CHECK(j.contains("task_id"));
  CHECK(j.contains("moves_used"));
  CHECK(j.contains("replans"));

  RunReport forged = report;
  REQUIRE(forged.steps.size() > 2);
  forged.steps[1].action = forged.steps[1].action == "U" ? "D" : "U";
  CHECK_FALSE(verify_trace(task, forged).empty());
  RunReport claimed = report;
  claimed.moves_used += 1;
  CHECK_FALSE(verify_trace(task, claimed).empty());
}

TEST_CASE("wire responses are validated") {
  const auto subtasks = parse_decompose_response(
      R"({"subtasks":[{"name":"c","goal":"cross","hint":"R U"},{"name":"s","goal":"solved"}]})");
  REQUIRE(subtasks.size() == 2);
  CHECK(subtasks[0].goal == StagePredicate::Cross);
  CHECK(*subtasks[0].hint == parse_algorithm("R U"));
  CHECK_FALSE(subtasks[1].hint);
  CHECK_THROWS_AS(parse_decompose_response(R"({"subtasks":[]})"), ProtocolError);
  CHECK_THROWS_AS(parse_decompose_response(R"({"subtasks":[{"goal":"nearly"}]})"), ProtocolError);
  CHECK_THROWS_AS(parse_decompose_response("not json"), ProtocolError);

  const auto step = parse_step_response(R"({"thought":"t","reasoning":"r","action":"R'","importance":7})");
  CHECK(step.action == "R'");
  CHECK(step.importance == 7);
  CHECK(parse_step_response(R"({"action":"done"})").action == "done");
  CHECK_THROWS_AS(parse_step_response(R"({"action":"Q"})"), ProtocolError);
  CHECK_THROWS_AS(parse_step_response(R"({"action":"R U"})"), ProtocolError);
  CHECK_THROWS_AS(parse_step_response(R"({"action":"R","importance":11})"), ProtocolError);
  CHECK_THROWS_AS(parse_step_response(R"({"thought":"no action"})"), ProtocolError);
}

TEST_CASE("external backend over HTTP") {
  httplib::Server server;
  std::atomic<int> steps{0};
  std::string action = "R'";
  server.Post("/plan", [&](const httplib::Request &req, httplib::Response &res) {
    const auto j = nlohmann::json::parse(req.body);
    if (j.at("kind") == "decompose") {
      CHECK(j.at("facelets").get<std::string>().size() == 54);
      res.set_content(R"({"subtasks":[{"name":"solved","goal":"solved","hint":"R'"}]})", "application/json");
    } else {
      ++steps;
      CHECK(j.at("subtask").at("goal") == "solved");
      CHECK(j.at("history").size() <= 10);
      res.set_content(nlohmann::json{{"thought", "t"}, {"reasoning", "r"}, {"action", action}}.dump(),
                      "application/json");
    }
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  const std::string url = "http://127.0.0.1:" + std::to_string(port) + "/plan";
  const Task task = make_task("R", 4);

  {
    auto backend = external_backend(url);
    Agent agent(*backend, {});
    const auto report = agent.run_outer_loop(task);
    CHECK(report.success);
    CHECK(report.moves_used == 1);
  }
  {
    // A token outside the alphabet is retried once, then the subtask fails.
    action = "Q";
    steps = 0;
    auto backend = external_backend(url);
    RunConfig flat;
    flat.enable_outer_loop = false;
    Agent agent(*backend, flat);
    const auto report = agent.run_outer_loop(task);
    CHECK_FALSE(report.success);
    CHECK(report.failure_reason == "protocol_error");
    CHECK(steps == 2);
  }
  server.stop();
  thread.join();

  auto dead = external_backend(url);
  Agent agent(*dead, {});
  CHECK(agent.run_outer_loop(task).failure_reason == "backend_unreachable");
  CHECK_THROWS_AS(external_backend("ftp://example"), BackendUnreachable);
}

TEST_CASE("external backend over stdio") {
  const std::string script =
      "stdio:while IFS= read -r line; do case \"$line\" in "
      "*decompose*) echo '{\"subtasks\":[{\"name\":\"solved\",\"goal\":\"solved\"}]}' ;; "
      "*) echo '{\"thought\":\"t\",\"reasoning\":\"r\",\"action\":\"U\"}' ;; esac; done";
  auto backend = external_backend(script);
  const Task task = make_task("U'", 4);
  Agent agent(*backend, {});
  const auto report = agent.run_outer_loop(task);
  CHECK(report.success);
  CHECK(report.moves_used == 1);

  auto silent = external_backend("stdio:true");
  Agent quiet(*silent, {});
  CHECK(quiet.run_outer_loop(task).failure_reason == "backend_unreachable");
}
