#include "cubeagent/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <map>
#include <sstream>

#include "json.hpp"

namespace cubeagent {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr Level kLevels[] = {Level::Low, Level::Medium, Level::High};

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

ordered_json run_config_json(const RunConfig &r) {
  ordered_json j;
  j["enable_outer_loop"] = r.enable_outer_loop;
  j["enable_memory"] = r.enable_memory;
  j["step_budget_factor"] = r.step_budget_factor;
  j["max_replans"] = r.max_replans;
  j["repeat_state_threshold"] = r.repeat_state_threshold;
  j["retrieval_k"] = r.retrieval_k;
  j["seed"] = r.seed;
  return j;
}

ordered_json backend_config_json(const BackendConfig &b) {
  ordered_json j;
  j["backend"] = b.kind;
  if (b.kind == "noisy") {
    j["p_wrong"] = b.p_wrong;
    j["p_stall"] = b.p_stall;
  }
  if (b.kind == "external") j["endpoint"] = b.endpoint;
  return j;
}

} // namespace

TaskSuite generate_suite(std::uint64_t seed, SuiteCounts counts, const GenerationConfig &config) {
  if (counts.low < 0 || counts.medium < 0 || counts.high < 0)
    throw std::invalid_argument("task counts must not be negative");
  struct Job {
    Level level;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  const int per_level[] = {counts.low, counts.medium, counts.high};
  for (int l = 0; l < 3; ++l)
    for (int i = 0; i < per_level[l]; ++i)
      jobs.push_back({kLevels[l], derive_seed(seed, (static_cast<std::uint64_t>(l) << 32) | static_cast<unsigned>(i))});

  TaskSuite suite;
  suite.seed = seed;
  suite.tasks.resize(jobs.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    try {
      suite.tasks[i] = generate_task(jobs[i].seed, jobs[i].level, config);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return suite;
}

std::string suite_to_json(const TaskSuite &suite) {
  ordered_json j;
  j["seed"] = suite.seed;
  auto tasks = ordered_json::array();
  for (const auto &t : suite.tasks) tasks.push_back(ordered_json::parse(task_to_json(t)));
  j["tasks"] = std::move(tasks);
  return j.dump(2) + "\n";
}

TaskSuite suite_from_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text);
  TaskSuite s;
  s.seed = j.at("seed").get<std::uint64_t>();
  for (const auto &t : j.at("tasks")) s.tasks.push_back(task_from_json(t.dump()));
  return s;
}

std::unique_ptr<PlannerBackend> make_backend(const BackendConfig &config, std::uint64_t run_seed, const Task &task) {
  if (config.kind == "oracle") return oracle_backend();
  if (config.kind == "noisy") return noisy_backend(derive_seed(run_seed, fnv1a(task.id)), config.p_wrong, config.p_stall);
  if (config.kind == "external") {
    std::string endpoint = config.endpoint;
    if (endpoint.empty())
      if (const char *env = std::getenv("CUBEAGENT_ENDPOINT")) endpoint = env;
    return external_backend(endpoint);
  }
  throw std::invalid_argument("unknown backend '" + config.kind + "'");
}

void load_config(std::string_view text, BackendConfig &backend, RunConfig &run) {
  const auto j = nlohmann::json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  static const char *known[] = {"backend", "p_wrong", "p_stall", "endpoint", "enable_outer_loop",
                                "enable_memory", "step_budget_factor", "max_replans",
                                "repeat_state_threshold", "retrieval_k", "seed"};
  for (const auto &[key, _] : j.items())
    if (std::find(std::begin(known), std::end(known), key) == std::end(known))
      throw std::invalid_argument("unknown config key '" + key + "'");
  backend.kind = j.value("backend", backend.kind);
  backend.p_wrong = j.value("p_wrong", backend.p_wrong);
  backend.p_stall = j.value("p_stall", backend.p_stall);
  backend.endpoint = j.value("endpoint", backend.endpoint);
  run.enable_outer_loop = j.value("enable_outer_loop", run.enable_outer_loop);
  run.enable_memory = j.value("enable_memory", run.enable_memory);
  run.step_budget_factor = j.value("step_budget_factor", run.step_budget_factor);
  run.max_replans = j.value("max_replans", run.max_replans);
  run.repeat_state_threshold = j.value("repeat_state_threshold", run.repeat_state_threshold);
  run.retrieval_k = j.value("retrieval_k", run.retrieval_k);
  run.seed = j.value("seed", run.seed);
  run.validate();
}

std::optional<double> ResultRow::accuracy(Level level) const {
  const auto l = static_cast<std::size_t>(level);
  if (totals[l] == 0) return std::nullopt;
  return static_cast<double>(successes[l]) / totals[l];
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", fraction * 100.0);
  return buf;
}

ResultRow evaluate_row(const TaskSuite &suite, const BackendConfig &backend, const RunConfig &run,
                       const std::vector<std::uint64_t> &seeds, std::string name, bool parallel) {
  const std::size_t n = suite.tasks.size() * seeds.size();
  std::vector<TaskResult> results(n);
  auto one = [&](std::size_t i) {
    const Task &task = suite.tasks[i / seeds.size()];
    const std::uint64_t seed = seeds[i % seeds.size()];
    TaskResult r;
    r.task_id = task.id;
    r.level = task.level;
    r.seed = seed;
    try {
      auto planner = make_backend(backend, seed, task);
      RunConfig rc = run;
      rc.seed = seed;
      Agent agent(*planner, rc);
      const RunReport report = agent.run_outer_loop(task);
      r.success = report.success;
      r.moves_used = report.moves_used;
      r.replans = report.replans;
      r.failure_reason = report.failure_reason;
      for (const auto &step : report.steps) {
        if (step.action == kDoneToken || step.action == kAbortToken) continue;
        if (!r.actions.empty()) r.actions += ' ';
        r.actions += step.action;
      }
      // Successes only count once the trace replays.
      if (r.success && !verify_trace(task, report).empty()) {
        r.success = false;
        r.failure_reason = "trace_mismatch";
      }
    } catch (const std::exception &e) {
      r.success = false;
      r.failure_reason = std::string("error: ") + e.what();
    }
    results[i] = std::move(r);
  };
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < n; ++i) one(i);
  } else {
    for (std::size_t i = 0; i < n; ++i) one(i);
  }

  std::sort(results.begin(), results.end(), [](const TaskResult &a, const TaskResult &b) {
    return a.task_id != b.task_id ? a.task_id < b.task_id : a.seed < b.seed;
  });
  ResultRow row;
  row.name = std::move(name);
  for (const auto &r : results) {
    const auto l = static_cast<std::size_t>(r.level);
    ++row.totals[l];
    row.successes[l] += r.success;
  }
  row.details = std::move(results);
  return row;
}

ResultsTable evaluate(const TaskSuite &suite, const BackendConfig &backend, const RunConfig &run,
                      const std::vector<std::uint64_t> &seeds, bool parallel) {
  ResultsTable t;
  t.seeds = seeds;
  t.rows.push_back(evaluate_row(suite, backend, run, seeds, backend.kind, parallel));
  ordered_json cfg;
  cfg["suite_seed"] = suite.seed;
  cfg["backend"] = backend_config_json(backend);
  cfg["run"] = run_config_json(run);
  cfg["seeds"] = seeds;
  t.config_hash = hex64(fnv1a(cfg.dump()));
  return t;
}

std::vector<double> per_seed_hard_accuracy(const ResultRow &row, const std::vector<std::uint64_t> &seeds) {
  std::map<std::uint64_t, std::pair<int, int>> by_seed; // seed -> (successes, runs)
  for (auto s : seeds) by_seed[s] = {0, 0};
  for (const auto &r : row.details) {
    if (r.level == Level::Low) continue;
    auto &[ok, runs] = by_seed[r.seed];
    ok += r.success;
    ++runs;
  }
  std::vector<double> out;
  for (auto s : seeds) {
    const auto [ok, runs] = by_seed[s];
    out.push_back(runs ? static_cast<double>(ok) / runs : 0.0);
  }
  return out;
}

PairedComparison sign_test(const ResultRow &better, const ResultRow &worse, const std::vector<std::uint64_t> &seeds) {
  PairedComparison c;
  c.better = better.name;
  c.worse = worse.name;
  const auto a = per_seed_hard_accuracy(better, seeds);
  const auto b = per_seed_hard_accuracy(worse, seeds);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) ++c.wins;
    else if (a[i] < b[i]) ++c.losses;
    else ++c.ties;
  }
  // P(X >= wins) for X ~ Binomial(wins + losses, 1/2).
  const int n = c.wins + c.losses;
  double p = 0.0;
  for (int k = c.wins; k <= n; ++k)
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0));
  c.p_value = n == 0 ? 1.0 : std::min(1.0, p);
  c.significant = c.p_value < 0.05;
  return c;
}

ResultsTable run_ablations(const TaskSuite &suite, const std::vector<std::uint64_t> &seeds, double p_wrong,
                           double p_stall, bool parallel) {
  BackendConfig backend;
  backend.kind = "noisy";
  backend.p_wrong = p_wrong;
  backend.p_stall = p_stall;
  struct Variant {
    const char *name;
    bool outer, memory;
  };
  const Variant variants[] = {
      {"full", true, true}, {"no-dual-loop", false, true}, {"no-memory", true, false}, {"vlm-only", false, false}};

  ResultsTable t;
  t.seeds = seeds;
  ordered_json cfg;
  cfg["suite_seed"] = suite.seed;
  cfg["backend"] = backend_config_json(backend);
  cfg["seeds"] = seeds;
  for (const auto &v : variants) {
    RunConfig run;
    run.enable_outer_loop = v.outer;
    run.enable_memory = v.memory;
    cfg["runs"].push_back(run_config_json(run));
    t.rows.push_back(evaluate_row(suite, backend, run, seeds, v.name, parallel));
  }
  t.config_hash = hex64(fnv1a(cfg.dump()));
  t.comparisons.push_back(sign_test(t.rows[0], t.rows[3], seeds));
  return t;
}

std::vector<std::uint64_t> seed_range(int n) {
  std::vector<std::uint64_t> s;
  for (int i = 1; i <= n; ++i) s.push_back(static_cast<std::uint64_t>(i));
  return s;
}

std::string results_to_json(const ResultsTable &t) {
  ordered_json j;
  j["config_hash"] = t.config_hash;
  j["seeds"] = t.seeds;
  auto rows = ordered_json::array();
  for (const auto &r : t.rows) {
    ordered_json row;
    row["config"] = r.name;
    for (Level l : kLevels) {
      const auto i = static_cast<std::size_t>(l);
      ordered_json cell;
      cell["successes"] = r.successes[i];
      cell["runs"] = r.totals[i];
      const auto acc = r.accuracy(l);
      cell["accuracy"] = acc ? ordered_json(format_percent(*acc)) : ordered_json(nullptr);
      row[std::string(to_string(l))] = std::move(cell);
    }
    auto details = ordered_json::array();
    for (const auto &d : r.details) {
      ordered_json o;
      o["task_id"] = d.task_id;
      o["level"] = to_string(d.level);
      o["seed"] = d.seed;
      o["success"] = d.success;
      o["moves_used"] = d.moves_used;
      o["replans"] = d.replans;
      if (d.failure_reason) o["failure_reason"] = *d.failure_reason;
      o["actions"] = d.actions;
      details.push_back(std::move(o));
    }
    row["tasks"] = std::move(details);
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  if (!t.comparisons.empty()) {
    auto cmp = ordered_json::array();
    for (const auto &c : t.comparisons) {
      ordered_json o;
      o["better"] = c.better;
      o["worse"] = c.worse;
      o["wins"] = c.wins;
      o["losses"] = c.losses;
      o["ties"] = c.ties;
      o["p_value"] = std::round(c.p_value * 1e6) / 1e6;
      o["significant"] = c.significant;
      cmp.push_back(std::move(o));
    }
    j["paired_tests"] = std::move(cmp);
  }
  return j.dump(2) + "\n";
}

std::string results_to_text(const ResultsTable &t) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "%-14s %10s %10s %10s\n", "config", "low", "medium", "high");
  out << line;
  for (const auto &r : t.rows) {
    std::string cells[3];
    for (Level l : kLevels) {
      const auto acc = r.accuracy(l);
      cells[static_cast<int>(l)] = acc ? format_percent(*acc) : "-";
    }
    std::snprintf(line, sizeof line, "%-14s %10s %10s %10s\n", r.name.c_str(), cells[0].c_str(), cells[1].c_str(),
                  cells[2].c_str());
    out << line;
  }
  for (const auto &c : t.comparisons) {
    std::snprintf(line, sizeof line, "%s vs %s (medium+high, per seed): %d wins, %d losses, %d ties, p=%.4f\n",
                  c.better.c_str(), c.worse.c_str(), c.wins, c.losses, c.ties, c.p_value);
    out << line;
  }
  return out.str();
}

} // namespace cubeagent
