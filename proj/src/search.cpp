#include "search.hpp"

#include <algorithm>
#include <mutex>

namespace cubeagent::detail {

using coords::CoordState;
using coords::Subset;

namespace {
constexpr int idx(Subset s) { return static_cast<int>(s); }
} // namespace

int stage_bound(const CoordState &c, StagePredicate goal, const PruningTables &pt) {
  const int level = static_cast<int>(goal);
  int h = pt.subset[idx(Subset::CrossEdges)][c.subset[idx(Subset::CrossEdges)]];
  if (level >= 1) h = std::max<int>(h, pt.subset[idx(Subset::BottomCorners)][c.subset[idx(Subset::BottomCorners)]]);
  if (level >= 2) {
    h = std::max<int>(h, pt.subset[idx(Subset::SliceEdges)][c.subset[idx(Subset::SliceEdges)]]);
    h = std::max<int>(h, pt.bottom_slice[c.subset[idx(Subset::BottomCorners)] * coords::kSliceComb +
                                         c.slice / coords::kSlicePerm]);
  }
  if (level >= 3) {
    h = std::max<int>(h, pt.twist_flip[c.twist * coords::kFlip + c.flip]);
  }
  if (level >= 4) {
    const int comb = c.slice / coords::kSlicePerm;
    h = std::max<int>(h, pt.subset[idx(Subset::TopCorners)][c.subset[idx(Subset::TopCorners)]]);
    h = std::max<int>(h, pt.subset[idx(Subset::TopEdges)][c.subset[idx(Subset::TopEdges)]]);
    h = std::max<int>(h, pt.twist_slice[c.twist * coords::kSliceComb + comb]);
    h = std::max<int>(h, pt.flip_slice[c.flip * coords::kSliceComb + comb]);
    h = std::max<int>(h, pt.corner_perm[c.corner_perm]);
  }
  return h;
}

bool stage_reached(const CoordState &c, StagePredicate goal, const coords::MoveTables &mt) {
  const int level = static_cast<int>(goal);
  auto home = [&](Subset s) { return c.subset[idx(s)] == mt.subset_solved[idx(s)]; };
  if (!home(Subset::CrossEdges)) return false;
  if (level >= 1 && !home(Subset::BottomCorners)) return false;
  if (level >= 2 && !home(Subset::SliceEdges)) return false;
  if (level >= 3 && (c.twist != 0 || c.flip != 0)) return false;
  if (level >= 4 && !(home(Subset::TopCorners) && home(Subset::TopEdges))) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Goal balls

GoalBall::Key GoalBall::key(const CoordState &c) const {
  // Only the coordinates the goal constrains, so the ball lives in the
  // quotient space where the goal is a single point.
  Key k = c.subset[idx(Subset::CrossEdges)];
  if (level_ >= 1) k = k << 18 | c.subset[idx(Subset::BottomCorners)];
  if (level_ >= 2) k = k << 18 | c.subset[idx(Subset::SliceEdges)];
  if (level_ >= 3) k = (k << 12 | c.twist) << 11 | c.flip;
  if (level_ >= 4) k = (k << 18 | c.subset[idx(Subset::TopCorners)]) << 18 | c.subset[idx(Subset::TopEdges)];
  return k;
}

std::size_t GoalBall::slot(Key k) const {
  std::uint64_t h = static_cast<std::uint64_t>(k) ^ static_cast<std::uint64_t>(k >> 64) * 0x9E3779B97F4A7C15ull;
  h ^= h >> 31;
  h *= 0xBF58476D1CE4E5B9ull;
  h ^= h >> 29;
  return h & (keys_.size() - 1);
}

int GoalBall::distance(const CoordState &c) const {
  const Key k = key(c);
  for (std::size_t i = slot(k);; i = (i + 1) & (keys_.size() - 1)) {
    if (keys_[i] == k) return dist_[i];
    if (keys_[i] == kEmpty) return -1;
  }
}

bool GoalBall::insert(Key k, std::uint8_t d) {
  for (std::size_t i = slot(k);; i = (i + 1) & (keys_.size() - 1)) {
    if (keys_[i] == k) return false;
    if (keys_[i] == kEmpty) {
      keys_[i] = k;
      dist_[i] = d;
      return true;
    }
  }
}

GoalBall::GoalBall(StagePredicate goal) : level_(static_cast<int>(goal)) {
  const auto &mt = coords::MoveTables::instance();
  // Depth-5 balls hold at most ~620k points.
  keys_.assign(std::size_t{1} << 21, kEmpty);
  dist_.assign(keys_.size(), 0);

  CoordState start;
  for (int i = 0; i < coords::kSubsetCount; ++i) start.subset[i] = mt.subset_solved[i];
  std::vector<CoordState> frontier{start};
  insert(key(start), 0);
  for (int d = 1; d <= kBallDepth; ++d) {
    std::vector<CoordState> next;
    for (const auto &c : frontier)
      for (int m = 0; m < kFaceMoveCount; ++m) {
        const CoordState n = c.moved(m, mt);
        if (insert(key(n), static_cast<std::uint8_t>(d))) next.push_back(n);
      }
    frontier = std::move(next);
  }
}

const GoalBall &GoalBall::instance(StagePredicate goal) {
  static std::array<std::once_flag, kStageCount> once;
  static std::array<std::unique_ptr<GoalBall>, kStageCount> balls;
  const int g = static_cast<int>(goal);
  std::call_once(once[g], [&] { balls[g].reset(new GoalBall(goal)); });
  return *balls[g];
}

// ---------------------------------------------------------------------------
// IDA*: bounded DFS down to the ball's radius, exact ball distances below it.

namespace {

struct StageDfs {
  const coords::MoveTables &mt;
  const PruningTables &pt;
  const GoalBall &ball;
  StagePredicate goal;
  std::uint64_t node_limit;
  std::uint64_t nodes = 0;
  bool aborted = false;
  std::array<int, kMaxSearchDepth> path{};

  // Walks the ball downhill from c, writing moves from path[depth] on.
  void descend(CoordState c, int depth, int d) {
    for (; d > 0; --d, ++depth)
      for (int m = 0; m < kFaceMoveCount; ++m) {
        const CoordState n = c.moved(m, mt);
        if (ball.distance(n) == d - 1) {
          path[depth] = m;
          c = n;
          break;
        }
      }
  }

  bool run(const CoordState &c, int depth, int remaining, int last_face) {
    if (remaining <= GoalBall::kBallDepth) {
      if (ball.distance(c) != remaining) return false;
      descend(c, depth, remaining);
      return true;
    }
    if (++nodes > node_limit) {
      aborted = true;
      return false;
    }
    for (int m = 0; m < kFaceMoveCount; ++m) {
      const int face = m / 3;
      if (redundant(face, last_face)) continue;
      const CoordState next = c.moved(m, mt);
      if (stage_bound(next, goal, pt) > remaining - 1) continue;
      path[depth] = m;
      if (run(next, depth + 1, remaining - 1, face)) return true;
      if (aborted) return false;
    }
    return false;
  }
};

} // namespace

SearchResult search_stage(const CoordState &start, StagePredicate goal, int max_depth,
                          std::uint64_t node_limit) {
  const auto &mt = coords::MoveTables::instance();
  const auto &pt = PruningTables::instance();
  const auto &ball = GoalBall::instance(goal);
  SearchResult result;
  StageDfs dfs{mt, pt, ball, goal, node_limit};
  max_depth = std::min(max_depth, kMaxSearchDepth);
  const int near = ball.distance(start);
  const int lower = near >= 0 ? near : std::max(stage_bound(start, goal, pt), GoalBall::kBallDepth + 1);
  for (int depth = lower; depth <= max_depth; ++depth) {
    if (dfs.run(start, 0, depth, -1)) {
      Algorithm alg;
      for (int i = 0; i < depth; ++i) alg.push_back(Move::from_face_move_index(dfs.path[i]));
      result.moves = std::move(alg);
      break;
    }
    if (dfs.aborted) {
      result.aborted = true;
      break;
    }
  }
  result.nodes = dfs.nodes;
  return result;
}

// ---------------------------------------------------------------------------
// Search inside <U,D,R2,L2,F2,B2>

bool in_g1(const CubieState &s) {
  return coords::twist(s) == 0 && coords::flip(s) == 0 && coords::slice(s) / coords::kSlicePerm == 0;
}

namespace {

struct G1Dfs {
  const coords::MoveTables &mt;
  const PruningTables &pt;
  std::array<int, kMaxSearchDepth> path{};

  int bound(int cp, int ep, int sp) const {
    return std::max(pt.corner_slice_perm[cp * coords::kSlicePerm + sp],
                    pt.edge_slice_perm[ep * coords::kSlicePerm + sp]);
  }

  bool run(int cp, int ep, int sp, int depth, int remaining, int last_face) {
    if (remaining == 0) return cp == 0 && ep == 0 && sp == 0;
    for (int m : coords::kPhase2Moves) {
      const int face = m / 3;
      if (redundant(face, last_face)) continue;
      const int cp2 = mt.corner_perm[cp * kFaceMoveCount + m];
      const int ep2 = mt.ud_edge_perm[ep * kFaceMoveCount + m];
      const int sp2 = mt.slice[sp * kFaceMoveCount + m];
      if (bound(cp2, ep2, sp2) > remaining - 1) continue;
      path[depth] = m;
      if (run(cp2, ep2, sp2, depth + 1, remaining - 1, face)) return true;
    }
    return false;
  }
};

} // namespace

std::optional<Algorithm> search_g1(const CubieState &s, int max_depth) {
  G1Dfs dfs{coords::MoveTables::instance(), PruningTables::instance()};
  const int cp = coords::corner_perm(s), ep = coords::ud_edge_perm(s), sp = coords::slice(s);
  max_depth = std::min(max_depth, kMaxSearchDepth);
  for (int depth = dfs.bound(cp, ep, sp); depth <= max_depth; ++depth) {
    if (dfs.run(cp, ep, sp, 0, depth, -1)) {
      Algorithm alg;
      for (int i = 0; i < depth; ++i) alg.push_back(Move::from_face_move_index(dfs.path[i]));
      return alg;
    }
  }
  return std::nullopt;
}

} // namespace cubeagent::detail
