#pragma once

// Coordinate encodings of cube sub-states and their move tables.

#include <array>
#include <cstdint>
#include <vector>

#include "cubeagent/cube.hpp"

namespace cubeagent::coords {

constexpr int kTwist = 2187;        // 3^7
constexpr int kFlip = 2048;         // 2^11
constexpr int kSliceComb = 495;     // C(12,4): which slots hold FR,FL,BL,BR
constexpr int kSlicePerm = 24;      // 4!: their order
constexpr int kSlice = kSliceComb * kSlicePerm;
constexpr int kCornerPerm = 40320;  // 8!
constexpr int kUdEdgePerm = 40320;  // 8!, only meaningful inside <U,D,R2,L2,F2,B2>

int twist(const CubieState &s);
int flip(const CubieState &s);
int slice(const CubieState &s); // comb * 24 + perm; 0 when solved
int corner_perm(const CubieState &s);
int ud_edge_perm(const CubieState &s); // requires slice edges in the slice

void set_twist(CubieState &s, int v);
void set_flip(CubieState &s, int v);
void set_slice(CubieState &s, int v);
void set_corner_perm(CubieState &s, int v);
void set_ud_edge_perm(CubieState &s, int v);

/// A fixed set of corners or edges tracked by slot and orientation.
/// Index = ordered partial permutation of their slots * orientation digits.
class PieceSet {
public:
  PieceSet(bool corners, std::vector<std::uint8_t> pieces);

  int size() const { return size_; }
  int encode(const CubieState &s) const;
  // Places the tracked pieces; untracked slots get the remaining pieces in
  // ascending order with zero orientation.
  CubieState decode(int index) const;
  bool corners() const { return corners_; }
  const std::vector<std::uint8_t> &pieces() const { return pieces_; }

private:
  bool corners_;
  std::vector<std::uint8_t> pieces_;
  int slots_;
  int arity_; // orientation values per piece
  int perm_count_;
  int size_;
};

// Tracked subsets used by the staged solver and as extra bounds.
enum class Subset : std::uint8_t { CrossEdges, BottomCorners, SliceEdges, TopCorners, TopEdges };
constexpr int kSubsetCount = 5;
const PieceSet &piece_set(Subset s);

// Phase-2 move set: U, U2, U', D, D2, D', R2, L2, F2, B2 as face-move indices.
constexpr std::array<int, 10> kPhase2Moves = {0, 1, 2, 9, 10, 11, 4, 13, 7, 16};

/// Move tables for every coordinate, indexed [coordinate * 18 + move].
struct MoveTables {
  std::vector<std::uint16_t> twist;
  std::vector<std::uint16_t> flip;
  std::vector<std::uint16_t> slice;
  std::vector<std::uint16_t> corner_perm;
  std::vector<std::uint16_t> ud_edge_perm; // valid only for phase-2 moves
  std::array<std::vector<std::uint32_t>, kSubsetCount> subset;
  std::array<std::uint32_t, kSubsetCount> subset_solved{};

  static const MoveTables &instance();

private:
  MoveTables();
};

/// All coordinates the searches need, advanced together by table lookups.
struct CoordState {
  std::uint16_t twist = 0, flip = 0, slice = 0, corner_perm = 0;
  std::array<std::uint32_t, kSubsetCount> subset{};

  static CoordState from(const CubieState &s);
  CoordState moved(int m, const MoveTables &t) const {
    CoordState r;
    r.twist = t.twist[twist * kFaceMoveCount + m];
    r.flip = t.flip[flip * kFaceMoveCount + m];
    r.slice = t.slice[slice * kFaceMoveCount + m];
    r.corner_perm = t.corner_perm[corner_perm * kFaceMoveCount + m];
    for (int i = 0; i < kSubsetCount; ++i) r.subset[i] = t.subset[i][subset[i] * kFaceMoveCount + m];
    return r;
  }
};

} // namespace cubeagent::coords
