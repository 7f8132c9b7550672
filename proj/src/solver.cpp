#include "cubeagent/solver.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

#include "json.hpp"
#include "search.hpp"

namespace cubeagent {

using coords::CoordState;

// ---------------------------------------------------------------------------
// Step templates

const std::vector<StepTemplate> &step_templates() {
  using SP = StagePredicate;
  static const std::vector<StepTemplate> templates = {
      {"cross-edge-DR", SP::Cross, ""},
      {"cross-edge-DF", SP::Cross, ""},
      {"cross-edge-DL", SP::Cross, ""},
      {"cross-edge-DB", SP::Cross, ""},
      {"corner-DFR", SP::FirstLayer, "R U R' U'"},
      {"corner-DLF", SP::FirstLayer, "L' U' L U"},
      {"corner-DBL", SP::FirstLayer, "L U L' U'"},
      {"corner-DRB", SP::FirstLayer, "R' U' R U"},
      {"edge-FR", SP::FirstTwoLayers, "U R U' R' U' F' U F"},
      {"edge-FL", SP::FirstTwoLayers, "U' L' U L U F U' F'"},
      {"edge-BL", SP::FirstTwoLayers, "U L U' L' U' B' U B"},
      {"edge-BR", SP::FirstTwoLayers, "U' R' U R U B U' B'"},
      {"eo-dot", SP::LastLayerOriented, "F R U R' U' F' U2 F R U R' U' R U R' U' F'"},
      {"eo-line", SP::LastLayerOriented, "F R U R' U' F'"},
      {"eo-L", SP::LastLayerOriented, "F U R U' R' F'"},
      {"co-sune", SP::LastLayerOriented, "R U R' U R U2 R'"},
      {"co-antisune", SP::LastLayerOriented, "R U2 R' U' R U' R'"},
      {"co-H", SP::LastLayerOriented, "F R U R' U' R U R' U' R U R' U' F'"},
      {"co-pi", SP::LastLayerOriented, "R U2 R2 U' R2 U' R2 U2 R"},
      {"co-headlights", SP::LastLayerOriented, "R2 D R' U2 R D' R' U2 R'"},
      {"co-T", SP::LastLayerOriented, "L F R' F' L' F R F'"},
      {"co-bowtie", SP::LastLayerOriented, "F' L F R' F' L' F R"},
      {"cp-adjacent", SP::Solved, "R U R' U' R' F R2 U' R' U' R U R' F'"},
      {"cp-diagonal", SP::Solved, "F R U' R' U' R U R' F' R U R' U' R' F R F'"},
      {"ep-Ua", SP::Solved, "R U' R U R U R U' R' U' R2"},
      {"ep-Ub", SP::Solved, "R2 U R U R' U' R' U' R' U R'"},
      {"ep-H", SP::Solved, "R2 U2 R U2 R2 U2 R2 U2 R U2 R2"},
      {"ep-Z", SP::Solved, "R' U' R U' R U R U' R' U R U R2 U' R'"},
  };
  return templates;
}

namespace {

// Ring order of the four top slots; a U turn shifts pieces one step along it.
constexpr std::array<int, 4> kTopCornerRing = {URF, UFL, ULB, UBR};
constexpr std::array<int, 4> kTopEdgeRing = {UF, UL, UB, UR};

bool cyclic_equal(std::array<int, 4> a, std::array<int, 4> b) {
  for (int r = 0; r < 4; ++r) {
    if (a == b) return true;
    std::rotate(a.begin(), a.begin() + 1, a.end());
  }
  return false;
}

std::vector<std::string> orientation_labels(const CubieState &s) {
  std::vector<std::string> labels;
  std::array<int, 4> eo{};
  for (int i = 0; i < 4; ++i) eo[i] = s.edge_orient[kTopEdgeRing[i]];
  const int flipped = eo[0] + eo[1] + eo[2] + eo[3];
  if (flipped == 4) labels.emplace_back("eo-dot");
  else if (flipped == 2) labels.emplace_back(eo[0] == eo[2] ? "eo-line" : "eo-L");

  std::array<int, 4> co{};
  for (int i = 0; i < 4; ++i) co[i] = s.corner_orient[kTopCornerRing[i]];
  const int twisted = static_cast<int>(std::count_if(co.begin(), co.end(), [](int v) { return v; }));
  if (twisted == 3) {
    labels.emplace_back(std::count(co.begin(), co.end(), 2) == 3 ? "co-sune" : "co-antisune");
  } else if (twisted == 4) {
    labels.emplace_back(cyclic_equal(co, {1, 2, 1, 2}) ? "co-H" : "co-pi");
  } else if (twisted == 2) {
    // Diagonal pair, or an adjacent pair whose stickers face the same side.
    if ((co[0] == 0) == (co[2] == 0)) labels.emplace_back("co-bowtie");
    else if (cyclic_equal(co, {0, 0, 2, 1})) labels.emplace_back("co-headlights");
    else labels.emplace_back("co-T");
  }
  return labels;
}

int ring_pos(const std::array<int, 4> &ring, int piece) {
  return static_cast<int>(std::find(ring.begin(), ring.end(), piece) - ring.begin());
}

std::vector<std::string> permutation_labels(const CubieState &s) {
  std::vector<std::string> labels;
  // Displacement of each top piece along the ring; equal displacements mean
  // the pieces are correct up to a U turn.
  std::array<int, 4> dc{}, de{};
  for (int i = 0; i < 4; ++i) {
    dc[i] = (ring_pos(kTopCornerRing, s.corner_perm[kTopCornerRing[i]]) - i + 4) % 4;
    de[i] = (ring_pos(kTopEdgeRing, s.edge_perm[kTopEdgeRing[i]]) - i + 4) % 4;
  }
  const bool corners_done = std::all_of(dc.begin(), dc.end(), [&](int d) { return d == dc[0]; });
  if (!corners_done) {
    bool headlights = false;
    for (int i = 0; i < 4; ++i) headlights |= dc[i] == dc[(i + 1) % 4];
    labels.emplace_back(headlights ? "cp-adjacent" : "cp-diagonal");
  }
  // Edge case relative to the most common corner displacement.
  std::array<int, 4> count{};
  for (int d : dc) ++count[d];
  const int ref = static_cast<int>(std::max_element(count.begin(), count.end()) - count.begin());
  std::array<int, 4> rel{};
  for (int i = 0; i < 4; ++i) rel[i] = (de[i] - ref + 4) % 4;
  const int fixed = static_cast<int>(std::count(rel.begin(), rel.end(), 0));
  if (fixed == 4) return labels;
  if (fixed == 1) {
    const int moved = static_cast<int>(std::count(rel.begin(), rel.end(), 1));
    labels.emplace_back(moved == 2 ? "ep-Ub" : "ep-Ua");
  } else if (std::all_of(rel.begin(), rel.end(), [](int d) { return d == 2; })) {
    labels.emplace_back("ep-H");
  } else {
    labels.emplace_back("ep-Z");
  }
  return labels;
}

std::vector<std::string> piece_labels(const CubieState &s, StagePredicate stage) {
  std::vector<std::string> labels;
  switch (stage) {
  case StagePredicate::Cross:
    for (int e : {DR, DF, DL, DB})
      if (s.edge_perm[e] != e || s.edge_orient[e]) labels.push_back(std::string(step_templates()[e - DR].id));
    break;
  case StagePredicate::FirstLayer:
    for (int c : {DFR, DLF, DBL, DRB})
      if (s.corner_perm[c] != c || s.corner_orient[c])
        labels.push_back(std::string(step_templates()[4 + c - DFR].id));
    break;
  case StagePredicate::FirstTwoLayers:
    for (int e : {FR, FL, BL, BR})
      if (s.edge_perm[e] != e || s.edge_orient[e])
        labels.push_back(std::string(step_templates()[8 + e - FR].id));
    break;
  case StagePredicate::LastLayerOriented: return orientation_labels(s);
  case StagePredicate::Solved: return permutation_labels(s);
  }
  return labels;
}

CubieState apply_face_moves(CubieState s, const Algorithm &alg) {
  for (const Move &m : alg) s = multiply(s, face_move_action(m.face_move_index()));
  return s;
}

// Once the earlier stages hold, the second-layer and orientation searches
// only see one coordinate each (slice-edge subset; twist and flip), so their
// results are cached per coordinate.  The cache is exact, not a heuristic.
class StageMemo {
public:
  std::optional<Algorithm> find(std::uint32_t key) const {
    std::shared_lock lock(mutex_);
    const auto it = map_.find(key);
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }
  void store(std::uint32_t key, const Algorithm &alg) {
    std::unique_lock lock(mutex_);
    map_.emplace(key, alg);
  }

private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::uint32_t, Algorithm> map_;
};

std::optional<std::uint32_t> memo_key(const CubieState &s, StagePredicate goal) {
  if (goal == StagePredicate::FirstTwoLayers && stage_satisfied(s, StagePredicate::FirstLayer))
    return static_cast<std::uint32_t>(coords::piece_set(coords::Subset::SliceEdges).encode(s));
  if (goal == StagePredicate::LastLayerOriented &&
      stage_satisfied(s, StagePredicate::FirstTwoLayers))
    return static_cast<std::uint32_t>(coords::twist(s) * coords::kFlip + coords::flip(s));
  return std::nullopt;
}

Algorithm search_uncached(const CubieState &s, StagePredicate goal);

Algorithm search_or_throw(const CubieState &s, StagePredicate goal) {
  static StageMemo memos[kStageCount];
  const auto key = memo_key(s, goal);
  if (!key) return search_uncached(s, goal);
  auto &memo = memos[static_cast<int>(goal)];
  if (auto hit = memo.find(*key)) return *hit;
  Algorithm alg = search_uncached(s, goal);
  memo.store(*key, alg);
  return alg;
}

// Last-layer permutation is searched inside <U,D,R2,L2,F2,B2>, where the
// permutation tables are tight; every earlier stage is searched optimally.
Algorithm search_uncached(const CubieState &s, StagePredicate goal) {
  std::optional<Algorithm> moves;
  if (goal == StagePredicate::Solved && detail::in_g1(s))
    moves = detail::search_g1(s, detail::kMaxSearchDepth);
  else
    moves = detail::search_stage(CoordState::from(s), goal, detail::kMaxSearchDepth).moves;
  if (!moves) throw UnsolvableState("no stage solution found");
  return *moves;
}

} // namespace

Algorithm StagePlan::concatenated() const {
  Algorithm all;
  for (const auto &st : stages) all.insert(all.end(), st.moves.begin(), st.moves.end());
  return all;
}

int StagePlan::method_length() const { return htm_length(canonicalize(concatenated())); }

StagePlan solve_staged(const CubieState &state) {
  CubieState s = state.normalized();
  verify_reachable(s);
  StagePlan plan;
  for (int k = 0; k < kStageCount; ++k) {
    const auto goal = static_cast<StagePredicate>(k);
    Stage stage{goal, {}, {}};
    if (!stage_satisfied(s, goal)) {
      stage.labels = piece_labels(s, goal);
      stage.moves = search_or_throw(s, goal);
      s = apply_face_moves(s, stage.moves);
    }
    plan.stages.push_back(std::move(stage));
  }
  return plan;
}

Algorithm solve_to_stage(const CubieState &state, StagePredicate goal) {
  CubieState s = state.normalized();
  verify_reachable(s);
  Algorithm out;
  for (int k = 0; k <= static_cast<int>(goal); ++k) {
    const auto g = static_cast<StagePredicate>(k);
    if (stage_satisfied(s, g)) continue;
    const Algorithm moves = search_or_throw(s, g);
    s = apply_face_moves(s, moves);
    out.insert(out.end(), moves.begin(), moves.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bounded optimal search

std::optional<Algorithm> optimal_solution_bounded(const CubieState &state, int depth_cap) {
  if (depth_cap < 0 || depth_cap > kMaxOptimalCap)
    throw std::invalid_argument("depth cap must be within [0, 12]");
  verify_reachable(state.normalized());
  return detail::search_stage(CoordState::from(state.normalized()), StagePredicate::Solved,
                              depth_cap)
      .moves;
}

std::optional<int> optimal_length_bounded(const CubieState &state, int depth_cap) {
  const auto sol = optimal_solution_bounded(state, depth_cap);
  if (!sol) return std::nullopt;
  return static_cast<int>(sol->size());
}

int pruning_lower_bound(const CubieState &state) {
  return detail::stage_bound(CoordState::from(state.normalized()), StagePredicate::Solved,
                             PruningTables::instance());
}

// ---------------------------------------------------------------------------
// Two-phase

namespace {

struct TwoPhase {
  TwoPhase(const CubieState &s, const FastSolveConfig &c)
      : mt(coords::MoveTables::instance()), pt(PruningTables::instance()), start(s), config(c),
        deadline(std::chrono::steady_clock::now() + c.time_budget) {}

  const coords::MoveTables &mt;
  const PruningTables &pt;
  CubieState start;
  FastSolveConfig config;
  std::chrono::steady_clock::time_point deadline{};

  std::array<int, detail::kMaxSearchDepth * 2> path{};
  std::optional<Algorithm> best;
  std::uint64_t nodes_after_first = 0;
  bool stop = false;
  bool timed_out = false;

  int phase1_bound(int tw, int fl, int comb) const {
    return std::max(pt.twist_slice[tw * coords::kSliceComb + comb],
                    pt.flip_slice[fl * coords::kSliceComb + comb]);
  }

  int phase2_bound(int cp, int ep, int sp) const {
    return std::max(pt.corner_slice_perm[cp * coords::kSlicePerm + sp],
                    pt.edge_slice_perm[ep * coords::kSlicePerm + sp]);
  }

  bool check_limits() {
    if (best && ++nodes_after_first > config.improvement_nodes) stop = true;
    if ((nodes_after_first & 1023) == 0 && std::chrono::steady_clock::now() > deadline) {
      timed_out = true;
      stop = true;
    }
    return stop;
  }

  bool phase2(int cp, int ep, int sp, int depth, int remaining, int last_face) {
    if (remaining == 0) return cp == 0 && ep == 0 && sp == 0;
    for (int m : coords::kPhase2Moves) {
      const int face = m / 3;
      if (detail::redundant(face, last_face)) continue;
      const int cp2 = mt.corner_perm[cp * kFaceMoveCount + m];
      const int ep2 = mt.ud_edge_perm[ep * kFaceMoveCount + m];
      const int sp2 = mt.slice[sp * kFaceMoveCount + m];
      if (phase2_bound(cp2, ep2, sp2) > remaining - 1) continue;
      path[depth] = m;
      if (phase2(cp2, ep2, sp2, depth + 1, remaining - 1, face)) return true;
    }
    return false;
  }

  void finish_phase1(int depth1, int last_face) {
    CubieState s = start;
    for (int i = 0; i < depth1; ++i) s = multiply(s, face_move_action(path[i]));
    const int cp = coords::corner_perm(s), ep = coords::ud_edge_perm(s);
    const int sp = coords::slice(s) % coords::kSlicePerm;
    const int limit = std::min(config.max_len, best ? static_cast<int>(best->size()) - 1
                                                    : config.max_len) -
                      depth1;
    for (int d2 = phase2_bound(cp, ep, sp); d2 <= limit; ++d2) {
      // The first phase-2 move must leave the phase-1 face alone.
      if (phase2(cp, ep, sp, depth1, d2, last_face)) {
        Algorithm alg;
        for (int i = 0; i < depth1 + d2; ++i) alg.push_back(Move::from_face_move_index(path[i]));
        best = std::move(alg);
        return;
      }
    }
  }

  void phase1(int tw, int fl, int sl, int depth, int remaining, int last_face, int last_move) {
    if (stop) return;
    if (remaining == 0) {
      const bool enters_g1 =
          depth == 0 || std::find(coords::kPhase2Moves.begin(), coords::kPhase2Moves.end(),
                                  last_move) == coords::kPhase2Moves.end();
      if (tw == 0 && fl == 0 && sl / coords::kSlicePerm == 0 && enters_g1)
        finish_phase1(depth, last_face);
      return;
    }
    if (check_limits()) return;
    for (int m = 0; m < kFaceMoveCount; ++m) {
      const int face = m / 3;
      if (detail::redundant(face, last_face)) continue;
      const int tw2 = mt.twist[tw * kFaceMoveCount + m];
      const int fl2 = mt.flip[fl * kFaceMoveCount + m];
      const int sl2 = mt.slice[sl * kFaceMoveCount + m];
      if (phase1_bound(tw2, fl2, sl2 / coords::kSlicePerm) > remaining - 1) continue;
      path[depth] = m;
      phase1(tw2, fl2, sl2, depth + 1, remaining - 1, face, m);
      if (stop) return;
    }
  }
};

} // namespace

Algorithm solve_fast(const CubieState &state, const FastSolveConfig &config) {
  const CubieState s = state.normalized();
  verify_reachable(s);
  if (is_solved(s)) return {};
  TwoPhase tp(s, config);
  const int tw = coords::twist(s), fl = coords::flip(s), sl = coords::slice(s);
  for (int d1 = tp.phase1_bound(tw, fl, sl / coords::kSlicePerm); d1 <= config.max_len; ++d1) {
    if (tp.best && d1 >= static_cast<int>(tp.best->size())) break;
    tp.phase1(tw, fl, sl, 0, d1, -1, -1);
    if (tp.stop) break;
  }
  if (!tp.best)
    throw BudgetExceeded(tp.timed_out ? "two-phase search ran out of time"
                                      : "no solution within the length limit");
  return *tp.best;
}

// ---------------------------------------------------------------------------
// Scrambles and tasks

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

namespace {

// Unbiased draw in [0, n); portable across standard libraries.
std::uint64_t uniform_below(std::mt19937_64 &rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

Algorithm scramble_with(std::mt19937_64 &rng, int length) {
  Algorithm alg;
  for (int i = 0; i < length; ++i) {
    std::vector<int> faces;
    for (int f = 0; f < 6; ++f) {
      if (!alg.empty() && face_index(alg.back().face) == f) continue;
      const int n = static_cast<int>(alg.size());
      if (n >= 2 && face_index(alg[n - 1].face) % 3 == f % 3 &&
          face_index(alg[n - 2].face) % 3 == f % 3)
        continue;
      faces.push_back(f);
    }
    const auto pick = uniform_below(rng, faces.size() * 3);
    alg.push_back(Move{static_cast<Face>(faces[pick / 3]), static_cast<std::uint8_t>(pick % 3 + 1)});
  }
  return alg;
}

} // namespace

Algorithm scramble(std::uint64_t seed, int length) {
  if (length < 0) throw std::invalid_argument("scramble length must be non-negative");
  std::mt19937_64 rng(seed);
  return scramble_with(rng, length);
}

std::string_view to_string(Level level) {
  switch (level) {
  case Level::Low: return "low";
  case Level::Medium: return "medium";
  case Level::High: return "high";
  }
  return "?";
}

Level parse_level(std::string_view s) {
  if (s == "low") return Level::Low;
  if (s == "medium") return Level::Medium;
  if (s == "high") return Level::High;
  throw std::invalid_argument("unknown level '" + std::string(s) + "'");
}

Band level_band(Level level) {
  switch (level) {
  case Level::Low: return {1, 1};
  case Level::Medium: return {9, 12};
  case Level::High: return {19, 31};
  }
  return {0, 0};
}

Task generate_task(std::uint64_t seed, Level level, const GenerationConfig &config) {
  std::mt19937_64 rng(seed);
  const Band band = level_band(level);
  Task task;
  task.id = std::string(to_string(level)) + "-" + std::to_string(seed);
  task.level = level;
  task.goal = StagePredicate::Solved;
  task.max_moves = 4 * band.hi;

  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    Algorithm scr;
    if (level == Level::Low) {
      // The inverse of one basic quarter-turn instruction.
      const auto pick = uniform_below(rng, 12);
      const Move instruction{static_cast<Face>(pick / 2),
                             static_cast<std::uint8_t>(pick % 2 ? 3 : 1)};
      scr = invert(Algorithm{instruction});
    } else {
      const int lo = level == Level::Medium ? config.medium_min_scramble : config.high_min_scramble;
      const int hi = level == Level::Medium ? config.medium_max_scramble : config.high_max_scramble;
      scr = scramble_with(rng, lo + static_cast<int>(uniform_below(rng, hi - lo + 1)));
    }
    const CubieState start = apply_algorithm(identity(), scr);
    const int method = solve_staged(start).method_length();

    std::optional<int> optimal;
    if (level != Level::High) {
      optimal = optimal_length_bounded(start, kMaxOptimalCap);
      if (!optimal || *optimal < band.lo || *optimal > band.hi) continue;
    } else if (method < band.lo || method > band.hi) {
      continue;
    }
    // The oracle plan has to fit the task's own move budget.
    if (method > task.max_moves) continue;

    task.scramble = std::move(scr);
    task.start_facelets = to_facelets(start);
    task.measured_method_length = method;
    task.measured_optimal_length = optimal;
    return task;
  }
  throw GenerationExhausted("no " + std::string(to_string(level)) + " task after " +
                            std::to_string(config.max_attempts) + " attempts");
}

std::string task_to_json(const Task &task) {
  nlohmann::ordered_json j;
  j["id"] = task.id;
  j["level"] = to_string(task.level);
  j["scramble"] = format_algorithm(task.scramble);
  j["start_facelets"] = task.start_facelets.stickers;
  j["goal"] = to_string(task.goal);
  j["max_moves"] = task.max_moves;
  j["measured_method_length"] = task.measured_method_length;
  if (task.measured_optimal_length) j["measured_optimal_length"] = *task.measured_optimal_length;
  return j.dump();
}

Task task_from_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text);
  Task t;
  t.id = j.at("id").get<std::string>();
  t.level = parse_level(j.at("level").get<std::string>());
  t.scramble = parse_algorithm(j.at("scramble").get<std::string>());
  t.start_facelets.stickers = j.at("start_facelets").get<std::string>();
  t.goal = parse_stage(j.at("goal").get<std::string>());
  t.max_moves = j.at("max_moves").get<int>();
  t.measured_method_length = j.at("measured_method_length").get<int>();
  if (j.contains("measured_optimal_length"))
    t.measured_optimal_length = j.at("measured_optimal_length").get<int>();
  return t;
}

} // namespace cubeagent
