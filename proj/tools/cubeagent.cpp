// cubeagent: suite generation, solving, agent runs and ablations from the shell.
//
// Exit codes: 0 success, 1 agent-run task failure, 2 usage or I/O error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cubeagent/harness.hpp"
#include "cubeagent/rig.hpp"

using namespace cubeagent;

namespace {

constexpr int kOk = 0;
constexpr int kTaskFailed = 1;
constexpr int kUsage = 2;

// Thrown for anything the user can fix: bad files, bad flags, bad input.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const char *kSchemaHelp = R"(
Input formats
  facelets   54 characters, faces in order U R F D L B, each face read
             row by row from its top-left sticker (as drawn by `render`).
             Colors are the letters U R F D L B.
  task file  {"id", "level", "scramble", "start_facelets", "goal",
              "max_moves", "measured_method_length", "measured_optimal_length"?}
             A suite file ({"seed", "tasks": [...]}) works with --id.
  config     {"backend": "oracle"|"noisy"|"external", "p_wrong", "p_stall",
              "endpoint", "enable_outer_loop", "enable_memory",
              "step_budget_factor", "max_replans", "repeat_state_threshold",
              "retrieval_k", "seed"}; absent keys keep their defaults.
Environment
  CUBEAGENT_ENDPOINT     external backend endpoint when --endpoint is absent
  CUBEAGENT_TABLE_CACHE  pruning-table cache file (empty disables caching)
Exit codes: 0 success, 1 agent-run task failed, 2 usage or I/O error.
)";

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out.flush()) throw UsageError("cannot write " + path);
}

Task load_task(const std::string &path, const std::string &id) {
  const auto text = read_file(path);
  const auto j = nlohmann::json::parse(text);
  if (!j.contains("tasks")) return task_from_json(text);
  const auto suite = suite_from_json(text);
  if (id.empty()) throw UsageError(path + " is a suite; pick a task with --id");
  for (const auto &t : suite.tasks)
    if (t.id == id) return t;
  throw UsageError("no task '" + id + "' in " + path);
}

CubieState parse_state(const std::string &facelets) {
  try {
    return from_facelets(facelets);
  } catch (const CubeError &e) {
    throw UsageError(e.what());
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Cube agent toolkit"};
  app.footer(kSchemaHelp);
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string out_path, suite_path, config_path, facelets, alg_text;
  SuiteCounts counts;

  auto *gen = app.add_subcommand("gen-suite", "Generate the low/medium/high task suite");
  gen->add_option("--seed", seed, "Suite seed")->required();
  gen->add_option("--out", out_path, "Suite JSON output file")->required();
  gen->add_option("--low", counts.low, "Number of low tasks")->check(CLI::NonNegativeNumber);
  gen->add_option("--medium", counts.medium, "Number of medium tasks")->check(CLI::NonNegativeNumber);
  gen->add_option("--high", counts.high, "Number of high tasks")->check(CLI::NonNegativeNumber);

  int length = 25;
  auto *scr = app.add_subcommand("scramble", "Print a random scramble");
  scr->add_option("--len", length, "Number of moves")->required()->check(CLI::NonNegativeNumber);
  scr->add_option("--seed", seed, "Scramble seed")->required();

  std::string method = "staged";
  auto *solve = app.add_subcommand("solve", "Solve a facelet string");
  solve->add_option("--facelets", facelets, "54-character facelet string")->required();
  solve->add_option("--method", method, "Solver")->check(CLI::IsMember({"staged", "fast"}));

  std::string task_path, task_id, backend_kind = "oracle", endpoint, report_path;
  bool no_outer = false, no_memory = false;
  BackendConfig noise;
  auto *run = app.add_subcommand("agent-run", "Run the agent on one task");
  run->add_option("--task", task_path, "Task JSON file (or suite with --id)")->required();
  run->add_option("--id", task_id, "Task id when --task is a suite");
  run->add_option("--backend", backend_kind, "Planner backend")
      ->check(CLI::IsMember({"oracle", "noisy", "external"}));
  run->add_option("--endpoint", endpoint, "External planner: http://host:port/path or stdio:COMMAND");
  run->add_flag("--no-outer-loop", no_outer, "Single flat subtask, no replanning");
  run->add_flag("--no-memory", no_memory, "Disable retrieval and reflections");
  run->add_option("--seed", seed, "Run seed");
  run->add_option("--p-wrong", noise.p_wrong, "Noisy backend: wrong-move probability")->check(CLI::Range(0.0, 1.0));
  run->add_option("--p-stall", noise.p_stall, "Noisy backend: stall probability")->check(CLI::Range(0.0, 1.0));
  run->add_option("--report", report_path, "Write the run report JSON here (default: stdout)");

  int n_seeds = 20;
  auto *bench = app.add_subcommand("bench", "Evaluate one configuration over a suite");
  bench->add_option("--suite", suite_path, "Suite JSON file")->required();
  bench->add_option("--config", config_path, "Configuration JSON file")->required();
  bench->add_option("--seeds", n_seeds, "Seeds 1..N")->required()->check(CLI::PositiveNumber);
  bench->add_option("--out", out_path, "Results JSON output file");

  auto *ablate = app.add_subcommand("ablate", "Run the four-configuration ablation");
  ablate->add_option("--suite", suite_path, "Suite JSON file")->required();
  ablate->add_option("--seeds", n_seeds, "Seeds 1..N")->required()->check(CLI::PositiveNumber);
  ablate->add_option("--p-wrong", noise.p_wrong, "Wrong-move probability")->check(CLI::Range(0.0, 1.0));
  ablate->add_option("--p-stall", noise.p_stall, "Stall probability")->check(CLI::Range(0.0, 1.0));
  ablate->add_option("--out", out_path, "Results JSON output file");

  auto *render = app.add_subcommand("render", "Draw a facelet string as an unfolded net");
  render->add_option("--facelets", facelets, "54-character facelet string")->required();

  auto *compile = app.add_subcommand("compile-script", "Compile an algorithm to robot primitives (JSONL)");
  compile->add_option("--alg", alg_text, "Algorithm, e.g. \"R U R' U'\"")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*gen) {
      const auto suite = generate_suite(seed, counts);
      write_file(out_path, suite_to_json(suite));
      std::cout << "wrote " << suite.tasks.size() << " tasks to " << out_path << '\n';
    } else if (*scr) {
      std::cout << format_algorithm(scramble(seed, length)) << '\n';
    } else if (*solve) {
      const auto state = parse_state(facelets);
      const auto alg = method == "fast" ? solve_fast(state) : canonicalize(solve_staged(state).concatenated());
      if (!alg.empty()) std::cout << format_algorithm(alg) << '\n';
    } else if (*run) {
      const Task task = load_task(task_path, task_id);
      BackendConfig backend = noise;
      backend.kind = backend_kind;
      backend.endpoint = endpoint;
      RunConfig config;
      config.enable_outer_loop = !no_outer;
      config.enable_memory = !no_memory;
      config.seed = seed;
      std::unique_ptr<PlannerBackend> planner;
      try {
        planner = make_backend(backend, seed, task);
      } catch (const std::invalid_argument &e) {
        throw UsageError(e.what());
      }
      Agent agent(*planner, config);
      const auto report = agent.run_outer_loop(task);
      if (report_path.empty())
        std::cout << report_to_json(report) << '\n';
      else
        write_file(report_path, report_to_json(report) + "\n");
      std::cerr << task.id << ": " << (report.success ? "solved" : "failed") << " in " << report.moves_used
                << " moves, " << report.replans << " replans";
      if (report.failure_reason) std::cerr << " (" << *report.failure_reason << ")";
      std::cerr << '\n';
      return report.success ? kOk : kTaskFailed;
    } else if (*bench) {
      const auto suite = suite_from_json(read_file(suite_path));
      BackendConfig backend;
      RunConfig config;
      load_config(read_file(config_path), backend, config);
      const auto table = evaluate(suite, backend, config, seed_range(n_seeds));
      std::cout << results_to_text(table);
      if (!out_path.empty()) write_file(out_path, results_to_json(table));
    } else if (*ablate) {
      const auto suite = suite_from_json(read_file(suite_path));
      const auto table = run_ablations(suite, seed_range(n_seeds), noise.p_wrong, noise.p_stall);
      std::cout << results_to_text(table);
      if (!out_path.empty()) write_file(out_path, results_to_json(table));
    } else if (*render) {
      std::cout << render_net(to_facelets(parse_state(facelets)));
    } else if (*compile) {
      std::cout << script_to_jsonl(compile_script(parse_algorithm(alg_text)));
    }
  } catch (const UsageError &e) {
    std::cerr << "error: " << e.what() << '\n' << kSchemaHelp;
    return kUsage;
  } catch (const ParseError &e) {
    std::cerr << "error: " << e.what() << '\n' << kSchemaHelp;
    return kUsage;
  } catch (const nlohmann::json::exception &e) {
    std::cerr << "error: malformed JSON: " << e.what() << '\n' << kSchemaHelp;
    return kUsage;
  } catch (const std::invalid_argument &e) {
    std::cerr << "error: " << e.what() << '\n' << kSchemaHelp;
    return kUsage;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kOk;
}
