// Acceptance run: one PASS/FAIL line per headline criterion.  Exit status is
// non-zero when any criterion fails.  Replays and distances are checked
// against the sticker-level simulator, not the cubie engine under test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "cubeagent/harness.hpp"
#include "cubeagent/memory.hpp"
#include "cubeagent/pruning.hpp"
#include "cubeagent/rig.hpp"
#include "sticker_oracle.hpp"
#include "test_util.hpp"

using namespace cubeagent;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned limits.
constexpr double kSuiteSeconds = 300;
constexpr double kOracleSeconds = 120;
constexpr double kAblationSeconds = 600;
constexpr double kFastMeanMs = 100;
constexpr double kLowFloor = 0.95;
constexpr double kAlpha = 0.05;
constexpr int kAblationSeeds = 20;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char *f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool uniform_faces(const std::string &s) {
  for (int f = 0; f < 6; ++f)
    for (int i = 1; i < 9; ++i)
      if (s[f * 9 + i] != s[f * 9]) return false;
  return true;
}

// Equal up to holding the whole cube differently (24 orientations).
bool same_up_to_rotation(const std::string &a, const std::string &b) {
  for (const char *tilt : {"", "x", "x2", "x'", "z", "z'"})
    for (const char *spin : {"", "y", "y2", "y'"})
      if (oracle::apply_text(oracle::apply_text(b, tilt), spin) == a) return true;
  return false;
}

bool is_rotation_token(const std::string &t) { return t[0] == 'x' || t[0] == 'y' || t[0] == 'z'; }

std::vector<std::string> tokens(const std::string &text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

// Exact distances of every state within `depth` face turns of solved.
std::map<std::string, int> sticker_ball(int depth) {
  static const char *moves[] = {"U", "U2", "U'", "R", "R2", "R'", "F", "F2", "F'",
                                "D", "D2", "D'", "L", "L2", "L'", "B", "B2", "B'"};
  std::map<std::string, int> dist{{oracle::solved(), 0}};
  std::vector<std::string> frontier{oracle::solved()};
  for (int d = 1; d <= depth; ++d) {
    std::vector<std::string> next;
    for (const auto &s : frontier)
      for (const char *m : moves) {
        auto n = oracle::apply_token(s, m);
        if (dist.emplace(n, d).second) next.push_back(std::move(n));
      }
    frontier = std::move(next);
  }
  return dist;
}

struct Outcome {
  bool pass = true;
  std::string detail;
  std::vector<std::string> failures;

  void require(bool ok, const std::string &what) {
    if (ok) return;
    pass = false;
    if (failures.size() < 5) failures.push_back(what);
  }
};

struct Shared {
  std::optional<TaskSuite> suite;
  std::vector<ResultsTable> tables;
};

Outcome suite_regeneration(Shared &shared) {
  Outcome o;
  auto t0 = Clock::now();
  const auto tables = PruningTables::build(PruningTables::Build::Parallel);
  const double build_s = seconds_since(t0);
  t0 = Clock::now();
  shared.suite = generate_suite(1);
  const double gen_s = seconds_since(t0);
  const auto &tasks = shared.suite->tasks;

  std::array<int, 3> counts{};
  std::set<std::string> ids;
  for (const auto &task : tasks) {
    ++counts[static_cast<int>(task.level)];
    o.require(ids.insert(task.id).second, "duplicate id " + task.id);
    o.require(oracle::apply_text(oracle::solved(), format_algorithm(task.scramble)) == task.start_facelets.stickers,
              task.id + ": start facelets do not match the scramble");
    const CubieState start = from_facelets(task.start_facelets);
    switch (task.level) {
    case Level::Low: {
      bool one = false;
      for (const char *m : {"U", "U2", "U'", "R", "R2", "R'", "F", "F2", "F'", "D", "D2", "D'", "L", "L2", "L'",
                            "B", "B2", "B'"})
        one |= uniform_faces(oracle::apply_token(task.start_facelets.stickers, m));
      o.require(one && !uniform_faces(task.start_facelets.stickers), task.id + ": not one move from solved");
      o.require(task.measured_optimal_length == 1, task.id + ": recorded optimal length is not 1");
      break;
    }
    case Level::Medium: {
      const auto sol = optimal_solution_bounded(start, 12);
      const int len = sol ? htm_length(*sol) : -1;
      o.require(sol && len >= 9 && len <= 12, task.id + fmt(": optimal length %d outside [9,12]", len));
      if (sol)
        o.require(uniform_faces(oracle::apply_text(task.start_facelets.stickers, format_algorithm(*sol))),
                  task.id + ": optimal solution does not solve");
      o.require(!optimal_length_bounded(start, 8), task.id + ": solvable in 8 moves");
      o.require(task.measured_optimal_length == len, task.id + ": recorded optimal length differs");
      break;
    }
    case Level::High: {
      const auto plan = canonicalize(solve_staged(start).concatenated());
      const int len = htm_length(plan);
      o.require(len >= 19 && len <= 31, task.id + fmt(": method length %d outside [19,31]", len));
      o.require(len == task.measured_method_length, task.id + ": recorded method length differs");
      o.require(uniform_faces(oracle::apply_text(task.start_facelets.stickers, format_algorithm(plan))),
                task.id + ": staged plan does not solve");
      break;
    }
    }
  }
  o.require(counts == std::array<int, 3>{15, 18, 10}, fmt("counts %d/%d/%d", counts[0], counts[1], counts[2]));
  o.require(tables == PruningTables::instance(), "fresh table build differs from the cached tables");
  o.require(build_s + gen_s < kSuiteSeconds, "too slow");
  o.detail = fmt("%d/%d/%d tasks; table build %.1f s + generation %.1f s (limit %.0f s)", counts[0], counts[1],
                 counts[2], build_s, gen_s, kSuiteSeconds);
  return o;
}

Outcome oracle_completeness(Shared &shared) {
  Outcome o;
  if (!shared.suite) return {false, "no suite", {}};
  const auto t0 = Clock::now();
  auto table = evaluate(*shared.suite, BackendConfig{}, RunConfig{}, seed_range(1));
  const double s = seconds_since(t0);
  const auto &row = table.rows.at(0);
  std::string acc;
  for (Level l : {Level::Low, Level::Medium, Level::High}) {
    const auto a = row.accuracy(l);
    o.require(a && *a == 1.0, std::string(to_string(l)) + " below 100%");
    acc += (acc.empty() ? "" : " / ") + (a ? format_percent(*a) : std::string("n/a"));
  }
  o.require(s < kOracleSeconds, "too slow");
  o.detail = fmt("low/medium/high %s in %.1f s (limit %.0f s)", acc.c_str(), s, kOracleSeconds);
  shared.tables.push_back(std::move(table));
  return o;
}

double hard_accuracy(const ResultRow &r) {
  const int runs = r.totals[1] + r.totals[2];
  return runs ? static_cast<double>(r.successes[1] + r.successes[2]) / runs : 0.0;
}

Outcome ablation_shape(Shared &shared) {
  Outcome o;
  if (!shared.suite) return {false, "no suite", {}};
  const auto t0 = Clock::now();
  auto table = run_ablations(*shared.suite, seed_range(kAblationSeeds), 0.15, 0.05);
  const double s = seconds_since(t0);
  std::map<std::string, const ResultRow *> rows;
  for (const auto &r : table.rows) rows[r.name] = &r;
  o.require(rows.size() == 4, "expected four rows");
  const double full = hard_accuracy(*rows.at("full")), flat = hard_accuracy(*rows.at("no-dual-loop"));
  const double nomem = hard_accuracy(*rows.at("no-memory")), vlm = hard_accuracy(*rows.at("vlm-only"));
  o.require(full >= flat, "full < no-dual-loop");
  o.require(full >= nomem, "full < no-memory");
  o.require(nomem >= vlm, "no-memory < vlm-only");
  const auto &cmp = table.comparisons.at(0);
  o.require(cmp.better == "full" && cmp.worse == "vlm-only" && cmp.p_value < kAlpha && full > vlm,
            fmt("full vs vlm-only not significant (p = %.4f)", cmp.p_value));
  for (const auto &r : table.rows)
    o.require(r.accuracy(Level::Low).value_or(0) >= kLowFloor, r.name + ": low below 95%");
  o.require(s < kAblationSeconds, "too slow");
  o.detail = fmt("medium+high full %s, no-dual-loop %s, no-memory %s, vlm-only %s; sign test %d-%d-%d p=%.2g; "
                 "%.1f s (limit %.0f s)",
                 format_percent(full).c_str(), format_percent(flat).c_str(), format_percent(nomem).c_str(),
                 format_percent(vlm).c_str(), cmp.wins, cmp.losses, cmp.ties, cmp.p_value, s, kAblationSeconds);
  std::cout << results_to_text(table);
  shared.tables.push_back(std::move(table));
  return o;
}

Outcome solver_soundness(Shared &) {
  Outcome o;
  PruningTables::instance(); // warm
  double fast_ms = 0;
  int staged_ok = 0, fast_ok = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto scr = scramble(derive_seed(2024, i), 25);
    const std::string start = oracle::apply_text(oracle::solved(), format_algorithm(scr));
    const CubieState s = from_facelets(start);
    staged_ok += uniform_faces(oracle::apply_text(start, format_algorithm(solve_staged(s).concatenated())));
    const auto t0 = Clock::now();
    Algorithm fast;
    try {
      fast = solve_fast(s);
    } catch (const BudgetExceeded &) {
      fast = {};
    }
    fast_ms += seconds_since(t0) * 1000;
    fast_ok += !fast.empty() && htm_length(fast) <= 30 && uniform_faces(oracle::apply_text(start, format_algorithm(fast)));
  }
  fast_ms /= 1000;
  o.require(staged_ok == 1000, fmt("staged solved %d/1000", staged_ok));
  o.require(fast_ok == 1000, fmt("fast solved %d/1000", fast_ok));
  o.require(fast_ms < kFastMeanMs, "fast solver too slow");

  // Admissibility: exact distances in the depth-4 ball, upper bounds beyond.
  int checked = 0, violations = 0;
  for (const auto &[stickers, d] : sticker_ball(4)) {
    ++checked;
    const int lb = pruning_lower_bound(from_facelets(stickers));
    violations += lb > d || (d == 0) != (lb == 0);
  }
  std::mt19937_64 rng(99);
  for (int i = 0; i < 10000; ++i) {
    const auto scr = testutil::random_algorithm(rng, 20, false);
    const std::string st = oracle::apply_text(oracle::solved(), format_algorithm(scr));
    ++checked;
    violations += pruning_lower_bound(from_facelets(st)) > htm_length(scr);
  }
  o.require(violations == 0, fmt("%d lower bounds exceed the true distance", violations));
  o.detail = fmt("staged %d/1000, fast %d/1000, fast mean %.2f ms (limit %.0f ms); %d states, %d inadmissible bounds",
                 staged_ok, fast_ok, fast_ms, kFastMeanMs, checked, violations);
  return o;
}

Outcome group_and_parser(Shared &) {
  Outcome o;
  auto order = [](const std::string &alg) {
    std::string s = oracle::apply_text(oracle::solved(), alg);
    int n = 1;
    for (; s != oracle::solved() && n < 2000; ++n) s = oracle::apply_text(s, alg);
    return n;
  };
  auto engine_order = [](const std::string &alg) {
    CubieState s = apply_algorithm(identity(), alg);
    int n = 1;
    for (; !(s == identity()) && n < 2000; ++n) s = apply_algorithm(s, alg);
    return n;
  };
  for (auto [alg, want] : std::vector<std::pair<std::string, int>>{
           {"U", 4}, {"U2", 2}, {"R U R' U'", 6}, {"R U R' U R U2 R'", 6}}) {
    o.require(order(alg) == want, alg + ": oracle order mismatch");
    o.require(engine_order(alg) == want, alg + fmt(": order %d, expected %d", engine_order(alg), want));
  }

  std::mt19937_64 rng(5);
  static const char *alphabet[] = {"U", "U2", "U'", "R", "R2", "R'", "F", "F2", "F'", "D", "D2", "D'", "L", "L2",
                                   "L'", "B", "B2", "B'", "x", "x2", "x'", "y", "y2", "y'", "z", "z2", "z'"};
  int conserve_bad = 0;
  for (int i = 0; i < 10000; ++i) {
    const CubieState s = testutil::random_state(rng, static_cast<int>(rng() % 30));
    for (const char *m : alphabet) {
      const CubieState r = apply_algorithm(s, m);
      int twist = 0, flip = 0;
      for (auto c : r.corner_orient) twist += c;
      for (auto e : r.edge_orient) flip += e;
      conserve_bad += twist % 3 != 0 || flip % 2 != 0 || corner_parity(r) != edge_parity(r);
    }
  }
  o.require(conserve_bad == 0, fmt("%d states broke twist/flip/parity", conserve_bad));

  int parse_bad = 0, facelet_bad = 0, canon_bad = 0, memory_bad = 0, script_bad = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto a = testutil::random_algorithm(rng, 30);
    const auto text = format_algorithm(a);
    parse_bad += !(parse_algorithm(text) == a) || format_algorithm(parse_algorithm(text)) != text;

    const CubieState s = apply_algorithm(identity(), a);
    const auto f = to_facelets(s);
    facelet_bad += !(from_facelets(f) == s) || !(to_facelets(from_facelets(f)) == f);

    const auto c = canonicalize(a);
    // Rotations are dropped, so only the orientation may differ.
    canon_bad += !same_up_to_rotation(oracle::apply_text(oracle::solved(), text),
                                      oracle::apply_text(oracle::solved(), format_algorithm(c))) ||
                 !(canonicalize(c) == c) || htm_length(c) > htm_length(a);

    MemoryObject m;
    m.id = i + 1;
    m.description = text.empty() ? "empty" : "executed " + text;
    m.kind = static_cast<MemoryKind>(rng() % 3);
    m.created_at = static_cast<Tick>(rng() % 1000);
    m.last_accessed_at = m.created_at + static_cast<Tick>(rng() % 1000);
    m.importance = static_cast<int>(rng() % 10) + 1;
    m.embedding = embed(m.description);
    memory_bad += !(memory_from_json(to_json_line(m)) == m);

    const auto script = compile_script(a);
    script_bad += !(script_from_jsonl(script_to_jsonl(script)) == script);
  }
  // Through the file as well.
  MemoryStream stream;
  for (int i = 0; i < 500; ++i) stream.record("observation " + std::to_string(rng() % 97), MemoryKind::Observation);
  stream.retrieve("observation 5", 7);
  const auto path = std::filesystem::temp_directory_path() / "cubeagent-acceptance-memory.jsonl";
  stream.persist(path);
  memory_bad += !(MemoryStream::load(path) == stream);
  std::filesystem::remove(path);

  o.require(parse_bad == 0, fmt("%d parse/format round trips failed", parse_bad));
  o.require(facelet_bad == 0, fmt("%d facelet round trips failed", facelet_bad));
  o.require(canon_bad == 0, fmt("%d canonicalize checks failed", canon_bad));
  o.require(memory_bad == 0, fmt("%d memory persist/load round trips failed", memory_bad));
  o.require(script_bad == 0, fmt("%d script round trips failed", script_bad));
  o.detail = "move orders 4/2/6/6; 270000 conservation checks; 10000 parse, facelet, canonicalize, memory and "
             "script round trips";
  return o;
}

// Straight evaluation of the retrieval score, for comparison with the stream.
std::vector<double> hand_scores(const std::vector<std::array<double, 3>> &raw) {
  std::vector<double> total(raw.size(), 0.0);
  for (int c = 0; c < 3; ++c) {
    double lo = raw[0][c], hi = raw[0][c];
    for (const auto &r : raw) lo = std::min(lo, r[c]), hi = std::max(hi, r[c]);
    for (std::size_t i = 0; i < raw.size(); ++i) total[i] += hi > lo ? (raw[i][c] - lo) / (hi - lo) : 1.0;
  }
  return total;
}

Embedding with_cosine(double c) {
  Embedding e{};
  e[0] = c;
  e[1] = std::sqrt(1 - c * c);
  return e;
}

MemoryObject fixture(std::uint64_t id, Tick created, Tick accessed, int importance, double cos) {
  MemoryObject m;
  m.id = id;
  m.description = "memory " + std::to_string(id);
  m.created_at = created;
  m.last_accessed_at = accessed;
  m.importance = importance;
  m.embedding = with_cosine(cos);
  return m;
}

Outcome memory_fixtures(Shared &) {
  Outcome o;
  auto stub = [] { return MemoryStream([](std::string_view) { return with_cosine(1.0); }); };

  // (ticks since access, importance, cosine) = (0,5,0.2), (50,9,0.2), (50,5,0.9) at now = 60.
  MemoryStream s = stub();
  s.insert(fixture(1, 0, 60, 5, 0.2));
  s.insert(fixture(2, 5, 10, 9, 0.2));
  s.insert(fixture(3, 10, 10, 5, 0.9));
  const auto hand = hand_scores({{1.0, 5, 0.2}, {std::pow(0.995, 50), 9, 0.2}, {std::pow(0.995, 50), 5, 0.9}});
  // Equal scores fall back to the most recently created memory.
  std::vector<std::uint64_t> expected{1, 2, 3};
  std::stable_sort(expected.begin(), expected.end(), [&](auto a, auto b) {
    const double sa = hand[a - 1], sb = hand[b - 1];
    if (std::abs(sa - sb) > 1e-9) return sa > sb;
    return s.find(a)->created_at > s.find(b)->created_at;
  });
  const auto scored = s.score("query", 60);
  std::vector<std::uint64_t> got;
  for (const auto &m : scored) {
    got.push_back(m.id);
    o.require(std::abs(m.score - hand[m.id - 1]) < 1e-9, fmt("memory %d score mismatch", int(m.id)));
  }
  o.require(got == expected, "three-memory ranking differs from hand evaluation");

  // Dominance.
  MemoryStream d = stub();
  d.insert(fixture(1, 0, 0, 3, 0.1));
  d.insert(fixture(2, 1, 40, 9, 0.95));
  d.insert(fixture(3, 2, 20, 5, 0.5));
  o.require(d.retrieve("q", 1, 40).at(0).id == 2, "dominant memory not first");

  // Recency monotonicity and access side effect.
  MemoryStream r = stub();
  r.insert(fixture(1, 0, 5, 5, 0.5));
  r.insert(fixture(2, 0, 30, 5, 0.5));
  r.insert(fixture(3, 0, 1, 2, 0.1));
  const auto top = r.retrieve("q", 2, 100);
  o.require(top.size() == 2 && top[0].id == 2, "more recently accessed memory not first");
  int touched = 0;
  for (const auto &m : r.objects()) touched += m.last_accessed_at == 100;
  o.require(touched == 2 && r.find(3)->last_accessed_at == 1, "access ticks not updated exactly for the top-k");

  // Determinism with the real embedder.
  MemoryStream a, b;
  for (auto *m : {&a, &b}) {
    m->record("cross complete on the down face", MemoryKind::Observation);
    m->record("subtask 2 failed on goal first_layer after 12 moves", MemoryKind::Reflection);
    m->record("plan: cross -> first_layer -> solved", MemoryKind::Plan);
  }
  const auto ra = a.retrieve("goal first_layer failed", 2), rb = b.retrieve("goal first_layer failed", 2);
  o.require(ra == rb && a == b, "retrieval is not deterministic");
  o.detail = "three-memory fixture, dominance, recency, access side effect, determinism";
  return o;
}

Outcome trace_replay(Shared &shared) {
  Outcome o;
  if (!shared.suite) return {false, "no suite", {}};
  std::map<std::string, const Task *> by_id;
  for (const auto &t : shared.suite->tasks) by_id[t.id] = &t;
  int replayed = 0;
  for (const auto &table : shared.tables)
    for (const auto &row : table.rows)
      for (const auto &r : row.details) {
        if (!r.success) continue;
        ++replayed;
        const Task &task = *by_id.at(r.task_id);
        std::string s = task.start_facelets.stickers;
        int moves = 0;
        for (const auto &t : tokens(r.actions)) {
          s = oracle::apply_token(s, t);
          moves += !is_rotation_token(t);
        }
        o.require(uniform_faces(s), r.task_id + ": replay does not end solved");
        o.require(moves == r.moves_used && moves <= task.max_moves, r.task_id + ": move count mismatch or over budget");
      }
  o.require(replayed > 0, "nothing to replay");

  std::mt19937_64 rng(17);
  int script_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto a = testutil::random_algorithm(rng, 30);
    const CubieState start = testutil::random_state(rng);
    script_bad += !(simulate(compile_script(a), start) == apply_algorithm(start, a));
  }
  o.require(script_bad == 0, fmt("%d script round trips differ", script_bad));
  o.detail = fmt("%d successful runs replayed; 1000 compiled scripts match", replayed);
  return o;
}

} // namespace

int main() {
  const std::vector<std::pair<const char *, std::function<Outcome(Shared &)>>> criteria = {
      {"suite regeneration", suite_regeneration}, {"oracle completeness", oracle_completeness},
      {"ablation shape", ablation_shape},         {"solver soundness", solver_soundness},
      {"group/parser properties", group_and_parser}, {"memory-stream fixtures", memory_fixtures},
      {"trace replay", trace_replay},
  };
  Shared shared;
  std::vector<std::string> lines;
  bool all = true;
  for (const auto &[name, run] : criteria) {
    Outcome o;
    try {
      o = run(shared);
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what(), {}};
    }
    std::string line = std::string(o.pass ? "PASS" : "FAIL") + "  " + name + ": " + o.detail;
    for (const auto &f : o.failures) line += "\n      " + f;
    std::cout << line << std::endl;
    lines.push_back(line);
    all &= o.pass;
  }
  std::cout << "\nsummary\n";
  for (const auto &l : lines) std::cout << l.substr(0, l.find('\n')) << '\n';
  return all ? 0 : 1;
}
