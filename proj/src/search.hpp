#pragma once

// IDA* over coordinate states.  Shared by the staged, optimal and two-phase
// solvers; not part of the public interface.

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <vector>
#include <optional>

#include "cubeagent/coords.hpp"
#include "cubeagent/notation.hpp"
#include "cubeagent/pruning.hpp"

namespace cubeagent::detail {

constexpr int kMaxSearchDepth = 32;

// Skip a move on the same face as the previous one, and order commuting
// opposite-face pairs so each pair is generated once.
inline bool redundant(int face, int last_face) {
  if (last_face < 0) return false;
  if (face == last_face) return true;
  return face == (last_face + 3) % 6 && face < last_face;
}

int stage_bound(const coords::CoordState &c, StagePredicate goal, const PruningTables &pt);
bool stage_reached(const coords::CoordState &c, StagePredicate goal, const coords::MoveTables &mt);

/// Exact distances to a stage goal for every state within kBallDepth moves,
/// keyed on the coordinates the goal constrains.  Lets the DFS stop
/// kBallDepth plies short of the goal.
class GoalBall {
public:
  static constexpr int kBallDepth = 5;
  static const GoalBall &instance(StagePredicate goal);

  int distance(const coords::CoordState &c) const; // -1 when farther than kBallDepth

private:
  using Key = unsigned __int128;
  static constexpr Key kEmpty = ~Key{0};

  explicit GoalBall(StagePredicate goal);
  Key key(const coords::CoordState &c) const;
  std::size_t slot(Key k) const;
  bool insert(Key k, std::uint8_t d);

  int level_;
  std::vector<Key> keys_;
  std::vector<std::uint8_t> dist_;
};

struct SearchResult {
  std::optional<Algorithm> moves;
  bool aborted = false;
  std::uint64_t nodes = 0;
};

// Shortest sequence reaching `goal` with at most max_depth moves.  Aborts
// (moves empty, aborted set) after node_limit expanded nodes.
SearchResult search_stage(const coords::CoordState &start, StagePredicate goal, int max_depth,
                          std::uint64_t node_limit = std::numeric_limits<std::uint64_t>::max());

/// True when the state lies in <U,D,R2,L2,F2,B2>: no twist, no flip, slice
/// edges inside the slice.
bool in_g1(const CubieState &s);

/// Shortest solution using only <U,D,R2,L2,F2,B2> moves; requires in_g1(s).
std::optional<Algorithm> search_g1(const CubieState &s, int max_depth);

} // namespace cubeagent::detail
