#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cubeagent {

// Face letters double as sticker colours: a sticker's colour is the face its
// centre belongs to on a solved cube.  X, Y, Z are whole-cube rotations about
// the R, U and F axes respectively.
enum class Face : std::uint8_t { U = 0, R = 1, F = 2, D = 3, L = 4, B = 5, X = 6, Y = 7, Z = 8 };

constexpr int kFaceCount = 6;
constexpr int kFaceletCount = 54;
constexpr int kFaceMoveCount = 18;

constexpr bool is_rotation(Face f) { return f >= Face::X; }
constexpr int face_index(Face f) { return static_cast<int>(f); }
constexpr Face opposite(Face f) { return static_cast<Face>((face_index(f) + 3) % 6); }

char face_char(Face f);

struct Move {
  Face face = Face::U;
  std::uint8_t turns = 1; // 1 clockwise, 2 half, 3 counterclockwise

  constexpr bool is_rotation() const { return cubeagent::is_rotation(face); }
  // Index into the 18 face moves (face * 3 + turns - 1). Only for face moves.
  constexpr int face_move_index() const { return face_index(face) * 3 + turns - 1; }
  static constexpr Move from_face_move_index(int m) {
    return Move{static_cast<Face>(m / 3), static_cast<std::uint8_t>(m % 3 + 1)};
  }
  friend constexpr bool operator==(const Move &, const Move &) = default;
};

std::string to_string(Move m);

class CubeError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class MalformedFacelets : public CubeError {
public:
  using CubeError::CubeError;
};

class UnsolvableState : public CubeError {
public:
  using CubeError::CubeError;
};

class UnknownPredicate : public CubeError {
public:
  using CubeError::CubeError;
};

enum Corner : std::uint8_t { URF, UFL, ULB, UBR, DFR, DLF, DBL, DRB };
enum Edge : std::uint8_t { UR, UF, UL, UB, DR, DF, DL, DB, FR, FL, BL, BR };

/// Whole-cube orientation: which colour sits on each spatial face.  The 24
/// proper rotations are numbered; 0 is the standard frame.
class Frame {
public:
  constexpr Frame() = default;
  static Frame from_index(int i);
  int index() const { return index_; }
  // Colour (= home face) of the centre currently on spatial face `spatial`.
  Face color_at(Face spatial) const;
  // Spatial face currently showing colour `color`.
  Face spatial_of(Face color) const;
  Frame rotated(Move rotation) const;
  // Sticker permutation taking the standard layout to this frame's layout:
  // sticker at standard index i appears at index sticker_map()[i].
  const std::array<std::uint8_t, kFaceletCount> &sticker_map() const;
  friend bool operator==(const Frame &, const Frame &) = default;

private:
  std::uint8_t index_ = 0;
};

/// Corner/edge permutation and orientation, stored relative to the centres
/// (rotation-normalised), together with the whole-cube frame.
///
/// Permutations use the "replaced by" convention: corner_perm[slot] is the
/// cubie currently sitting in `slot`.
struct CubieState {
  std::array<std::uint8_t, 8> corner_perm{0, 1, 2, 3, 4, 5, 6, 7};
  std::array<std::uint8_t, 8> corner_orient{};
  std::array<std::uint8_t, 12> edge_perm{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  std::array<std::uint8_t, 12> edge_orient{};
  Frame frame{};

  // Same cubies, standard frame.
  CubieState normalized() const {
    CubieState s = *this;
    s.frame = Frame{};
    return s;
  }
  bool same_cubies(const CubieState &o) const {
    return corner_perm == o.corner_perm && corner_orient == o.corner_orient &&
           edge_perm == o.edge_perm && edge_orient == o.edge_orient;
  }
  friend bool operator==(const CubieState &, const CubieState &) = default;
};

/// 54 stickers, faces in U,R,F,D,L,B order, each face row-major.
struct FaceletState {
  std::string stickers;
  friend bool operator==(const FaceletState &, const FaceletState &) = default;
};

enum class StagePredicate : std::uint8_t {
  Cross,
  FirstLayer,
  FirstTwoLayers,
  LastLayerOriented,
  Solved
};

constexpr int kStageCount = 5;

std::string_view to_string(StagePredicate p);
StagePredicate parse_stage(std::string_view token); // throws UnknownPredicate

CubieState identity();

// Cubie-level product: the state reached by applying b after a. Frames ignored.
CubieState multiply(const CubieState &a, const CubieState &b);

// The cubie action of one of the 18 face moves in the standard frame.
const CubieState &face_move_action(int face_move_index);

CubieState apply_move(const CubieState &state, Move m);

bool is_solved(const CubieState &state);
bool stage_satisfied(const CubieState &state, StagePredicate predicate);
bool stage_satisfied(const CubieState &state, std::string_view predicate);

int corner_parity(const CubieState &state);
int edge_parity(const CubieState &state);
// Throws UnsolvableState when the cubies cannot be reached by face moves.
void verify_reachable(const CubieState &state);

FaceletState to_facelets(const CubieState &state);
CubieState from_facelets(const FaceletState &f);
CubieState from_facelets(std::string_view stickers);

std::string render_net(const FaceletState &f);

} // namespace cubeagent
