#include "cubeagent/cube.hpp"

#include <algorithm>
#include <map>
#include <vector>

namespace cubeagent {

namespace {

constexpr std::array<char, 9> kFaceChars{'U', 'R', 'F', 'D', 'L', 'B', 'x', 'y', 'z'};

// Facelet indices, Kociemba numbering (U1 = 0 ... B9 = 53).
enum : std::uint8_t {
  U1, U2, U3, U4, U5, U6, U7, U8, U9,
  R1, R2, R3, R4, R5, R6, R7, R8, R9,
  F1, F2, F3, F4, F5, F6, F7, F8, F9,
  D1, D2, D3, D4, D5, D6, D7, D8, D9,
  L1, L2, L3, L4, L5, L6, L7, L8, L9,
  B1, B2, B3, B4, B5, B6, B7, B8, B9
};

constexpr std::uint8_t kCornerFacelet[8][3] = {
    {U9, R1, F3}, {U7, F1, L3}, {U1, L1, B3}, {U3, B1, R3},
    {D3, F9, R7}, {D1, L9, F7}, {D7, B9, L7}, {D9, R9, B7}};

constexpr std::uint8_t kEdgeFacelet[12][2] = {
    {U6, R2}, {U8, F2}, {U4, L2}, {U2, B2}, {D6, R8}, {D2, F8},
    {D4, L8}, {D8, B8}, {F6, R4}, {F4, L6}, {B6, L4}, {B4, R6}};

constexpr Face kCornerColor[8][3] = {
    {Face::U, Face::R, Face::F}, {Face::U, Face::F, Face::L}, {Face::U, Face::L, Face::B},
    {Face::U, Face::B, Face::R}, {Face::D, Face::F, Face::R}, {Face::D, Face::L, Face::F},
    {Face::D, Face::B, Face::L}, {Face::D, Face::R, Face::B}};

constexpr Face kEdgeColor[12][2] = {
    {Face::U, Face::R}, {Face::U, Face::F}, {Face::U, Face::L}, {Face::U, Face::B},
    {Face::D, Face::R}, {Face::D, Face::F}, {Face::D, Face::L}, {Face::D, Face::B},
    {Face::F, Face::R}, {Face::F, Face::L}, {Face::B, Face::L}, {Face::B, Face::R}};

CubieState make_basic(std::array<std::uint8_t, 8> cp, std::array<std::uint8_t, 8> co,
                      std::array<std::uint8_t, 12> ep, std::array<std::uint8_t, 12> eo) {
  CubieState s;
  s.corner_perm = cp;
  s.corner_orient = co;
  s.edge_perm = ep;
  s.edge_orient = eo;
  return s;
}

// Clockwise quarter turns of U, R, F, D, L, B.
const std::array<CubieState, 6> &basic_moves() {
  static const std::array<CubieState, 6> moves = {
      make_basic({UBR, URF, UFL, ULB, DFR, DLF, DBL, DRB}, {0, 0, 0, 0, 0, 0, 0, 0},
                 {UB, UR, UF, UL, DR, DF, DL, DB, FR, FL, BL, BR}, {}),
      make_basic({DFR, UFL, ULB, URF, DRB, DLF, DBL, UBR}, {2, 0, 0, 1, 1, 0, 0, 2},
                 {FR, UF, UL, UB, BR, DF, DL, DB, DR, FL, BL, UR}, {}),
      make_basic({UFL, DLF, ULB, UBR, URF, DFR, DBL, DRB}, {1, 2, 0, 0, 2, 1, 0, 0},
                 {UR, FL, UL, UB, DR, FR, DL, DB, UF, DF, BL, BR},
                 {0, 1, 0, 0, 0, 1, 0, 0, 1, 1, 0, 0}),
      make_basic({URF, UFL, ULB, UBR, DLF, DBL, DRB, DFR}, {0, 0, 0, 0, 0, 0, 0, 0},
                 {UR, UF, UL, UB, DF, DL, DB, DR, FR, FL, BL, BR}, {}),
      make_basic({URF, ULB, DBL, UBR, DFR, UFL, DLF, DRB}, {0, 1, 2, 0, 0, 2, 1, 0},
                 {UR, UF, BL, UB, DR, DF, FL, DB, FR, UL, DL, BR}, {}),
      make_basic({URF, UFL, UBR, DRB, DFR, DLF, ULB, DBL}, {0, 0, 1, 2, 0, 0, 2, 1},
                 {UR, UF, UL, BR, DR, DF, DL, BL, FR, FL, UB, DB},
                 {0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 1, 1}),
  };
  return moves;
}

const std::array<CubieState, kFaceMoveCount> &face_moves() {
  static const std::array<CubieState, kFaceMoveCount> table = [] {
    std::array<CubieState, kFaceMoveCount> t{};
    for (int f = 0; f < 6; ++f) {
      CubieState s = identity();
      for (int k = 0; k < 3; ++k) {
        s = multiply(s, basic_moves()[f]);
        t[f * 3 + k] = s;
      }
    }
    return t;
  }();
  return table;
}

// --- whole-cube rotations -------------------------------------------------

struct Vec3 {
  int x, y, z;
  friend bool operator==(const Vec3 &, const Vec3 &) = default;
  friend auto operator<=>(const Vec3 &, const Vec3 &) = default;
};

Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
Vec3 operator*(int k, Vec3 a) { return {k * a.x, k * a.y, k * a.z}; }

// Outward normal, column direction and row direction of each face as drawn.
constexpr Vec3 kNormal[6] = {{0, 1, 0}, {1, 0, 0}, {0, 0, 1}, {0, -1, 0}, {-1, 0, 0}, {0, 0, -1}};
constexpr Vec3 kColDir[6] = {{1, 0, 0}, {0, 0, -1}, {1, 0, 0}, {1, 0, 0}, {0, 0, 1}, {-1, 0, 0}};
constexpr Vec3 kRowDir[6] = {{0, 0, 1}, {0, -1, 0}, {0, -1, 0}, {0, 0, -1}, {0, -1, 0}, {0, -1, 0}};

struct Sticker {
  Vec3 pos;
  Vec3 normal;
  friend auto operator<=>(const Sticker &, const Sticker &) = default;
};

Sticker sticker_at(int index) {
  const int f = index / 9, row = (index % 9) / 3, col = index % 3;
  return {kNormal[f] + (col - 1) * kColDir[f] + (row - 1) * kRowDir[f], kNormal[f]};
}

// Quarter turn clockwise as seen from the tip of the axis.
Vec3 rotate_cw(Vec3 v, Vec3 axis) {
  const Vec3 cross{axis.y * v.z - axis.z * v.y, axis.z * v.x - axis.x * v.z,
                   axis.x * v.y - axis.y * v.x};
  const int dot = axis.x * v.x + axis.y * v.y + axis.z * v.z;
  return dot * axis + -1 * cross;
}

std::array<std::uint8_t, kFaceletCount> rotation_sticker_map(Vec3 axis) {
  std::map<Sticker, std::uint8_t> lookup;
  for (int i = 0; i < kFaceletCount; ++i) lookup[sticker_at(i)] = static_cast<std::uint8_t>(i);
  std::array<std::uint8_t, kFaceletCount> map{};
  for (int i = 0; i < kFaceletCount; ++i) {
    const Sticker s = sticker_at(i);
    map[i] = lookup.at({rotate_cw(s.pos, axis), rotate_cw(s.normal, axis)});
  }
  return map;
}

struct FrameTable {
  std::vector<std::array<Face, 6>> color_at;
  std::vector<std::array<std::uint8_t, kFaceletCount>> sticker_map;
  std::vector<std::array<std::uint8_t, 3>> next; // after x, y, z
};

const FrameTable &frames() {
  static const FrameTable table = [] {
    // src[r][s]: spatial face whose content moves onto s under rotation r.
    constexpr Face src[3][6] = {
        {Face::F, Face::R, Face::D, Face::B, Face::L, Face::U}, // x
        {Face::U, Face::B, Face::R, Face::D, Face::F, Face::L}, // y
        {Face::L, Face::U, Face::F, Face::R, Face::D, Face::B}, // z
    };
    const std::array<std::array<std::uint8_t, kFaceletCount>, 3> rot = {
        rotation_sticker_map(kNormal[1]), rotation_sticker_map(kNormal[0]),
        rotation_sticker_map(kNormal[2])};

    FrameTable t;
    std::array<std::uint8_t, kFaceletCount> id_map{};
    for (int i = 0; i < kFaceletCount; ++i) id_map[i] = static_cast<std::uint8_t>(i);
    t.color_at.push_back({Face::U, Face::R, Face::F, Face::D, Face::L, Face::B});
    t.sticker_map.push_back(id_map);
    for (std::size_t i = 0; i < t.color_at.size(); ++i) {
      std::array<std::uint8_t, 3> nexts{};
      for (int r = 0; r < 3; ++r) {
        std::array<Face, 6> c{};
        for (int s = 0; s < 6; ++s) c[s] = t.color_at[i][face_index(src[r][s])];
        auto it = std::find(t.color_at.begin(), t.color_at.end(), c);
        if (it == t.color_at.end()) {
          std::array<std::uint8_t, kFaceletCount> m{};
          for (int k = 0; k < kFaceletCount; ++k) m[k] = rot[r][t.sticker_map[i][k]];
          t.color_at.push_back(c);
          t.sticker_map.push_back(m);
          it = t.color_at.end() - 1;
        }
        nexts[r] = static_cast<std::uint8_t>(it - t.color_at.begin());
      }
      t.next.push_back(nexts);
    }
    return t;
  }();
  return table;
}

} // namespace

char face_char(Face f) { return kFaceChars[face_index(f)]; }

std::string to_string(Move m) {
  std::string s(1, face_char(m.face));
  if (m.turns == 2) s += '2';
  else if (m.turns == 3) s += '\'';
  return s;
}

Frame Frame::from_index(int i) {
  if (i < 0 || i >= static_cast<int>(frames().color_at.size()))
    throw std::out_of_range("frame index out of range");
  Frame f;
  f.index_ = static_cast<std::uint8_t>(i);
  return f;
}

Face Frame::color_at(Face spatial) const { return frames().color_at[index_][face_index(spatial)]; }

Face Frame::spatial_of(Face color) const {
  const auto &c = frames().color_at[index_];
  return static_cast<Face>(std::find(c.begin(), c.end(), color) - c.begin());
}

Frame Frame::rotated(Move rotation) const {
  const int axis = face_index(rotation.face) - face_index(Face::X);
  int i = index_;
  for (int k = 0; k < rotation.turns; ++k) i = frames().next[i][axis];
  return from_index(i);
}

const std::array<std::uint8_t, kFaceletCount> &Frame::sticker_map() const {
  return frames().sticker_map[index_];
}

std::string_view to_string(StagePredicate p) {
  switch (p) {
  case StagePredicate::Cross: return "cross";
  case StagePredicate::FirstLayer: return "first_layer";
  case StagePredicate::FirstTwoLayers: return "first_two_layers";
  case StagePredicate::LastLayerOriented: return "last_layer_oriented";
  case StagePredicate::Solved: return "solved";
  }
  return "?";
}

StagePredicate parse_stage(std::string_view token) {
  for (int i = 0; i < kStageCount; ++i) {
    const auto p = static_cast<StagePredicate>(i);
    if (to_string(p) == token) return p;
  }
  throw UnknownPredicate("unknown stage predicate '" + std::string(token) + "'");
}

CubieState identity() { return CubieState{}; }

CubieState multiply(const CubieState &a, const CubieState &b) {
  CubieState r;
  r.frame = a.frame;
  for (int i = 0; i < 8; ++i) {
    r.corner_perm[i] = a.corner_perm[b.corner_perm[i]];
    r.corner_orient[i] =
        static_cast<std::uint8_t>((a.corner_orient[b.corner_perm[i]] + b.corner_orient[i]) % 3);
  }
  for (int i = 0; i < 12; ++i) {
    r.edge_perm[i] = a.edge_perm[b.edge_perm[i]];
    r.edge_orient[i] =
        static_cast<std::uint8_t>((a.edge_orient[b.edge_perm[i]] + b.edge_orient[i]) & 1);
  }
  return r;
}

const CubieState &face_move_action(int face_move_index) { return face_moves()[face_move_index]; }

CubieState apply_move(const CubieState &state, Move m) {
  if (m.is_rotation()) {
    CubieState s = state;
    s.frame = state.frame.rotated(m);
    return s;
  }
  // A spatial face turn turns whichever layer currently carries that centre.
  const Face layer = state.frame.color_at(m.face);
  return multiply(state, face_moves()[Move{layer, m.turns}.face_move_index()]);
}

bool is_solved(const CubieState &state) { return state.same_cubies(identity()); }

bool stage_satisfied(const CubieState &s, StagePredicate predicate) {
  auto edges_home = [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i)
      if (s.edge_perm[i] != i || s.edge_orient[i] != 0) return false;
    return true;
  };
  auto corners_home = [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i)
      if (s.corner_perm[i] != i || s.corner_orient[i] != 0) return false;
    return true;
  };
  const int level = static_cast<int>(predicate);
  if (!edges_home(DR, DB + 1)) return false;
  if (level >= 1 && !corners_home(DFR, DRB + 1)) return false;
  if (level >= 2 && !edges_home(FR, BR + 1)) return false;
  if (level >= 3) {
    for (int i = 0; i < 4; ++i)
      if (s.corner_orient[i] != 0 || s.edge_orient[i] != 0) return false;
  }
  if (level >= 4) return corners_home(URF, UBR + 1) && edges_home(UR, UB + 1);
  return true;
}

bool stage_satisfied(const CubieState &state, std::string_view predicate) {
  return stage_satisfied(state, parse_stage(predicate));
}

namespace {
template <std::size_t N> int permutation_parity(const std::array<std::uint8_t, N> &p) {
  int inversions = 0;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = i + 1; j < N; ++j)
      if (p[i] > p[j]) ++inversions;
  return inversions & 1;
}

template <std::size_t N> bool is_permutation(const std::array<std::uint8_t, N> &p) {
  std::array<bool, N> seen{};
  for (auto v : p) {
    if (v >= N || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}
} // namespace

int corner_parity(const CubieState &s) { return permutation_parity(s.corner_perm); }
int edge_parity(const CubieState &s) { return permutation_parity(s.edge_perm); }

void verify_reachable(const CubieState &s) {
  if (!is_permutation(s.corner_perm)) throw UnsolvableState("corner permutation is not a bijection");
  if (!is_permutation(s.edge_perm)) throw UnsolvableState("edge permutation is not a bijection");
  int twist = 0, flip = 0;
  for (auto o : s.corner_orient) {
    if (o > 2) throw UnsolvableState("corner orientation out of range");
    twist += o;
  }
  for (auto o : s.edge_orient) {
    if (o > 1) throw UnsolvableState("edge orientation out of range");
    flip += o;
  }
  if (twist % 3 != 0)
    throw UnsolvableState("corner twist sum is " + std::to_string(twist % 3) + " mod 3");
  if (flip % 2 != 0) throw UnsolvableState("edge flip sum is odd");
  if (corner_parity(s) != edge_parity(s))
    throw UnsolvableState("corner and edge permutation parities differ");
}

FaceletState to_facelets(const CubieState &state) {
  std::string standard(kFaceletCount, '?');
  for (int f = 0; f < 6; ++f) standard[f * 9 + 4] = kFaceChars[f];
  for (int i = 0; i < 8; ++i) {
    const int cubie = state.corner_perm[i], ori = state.corner_orient[i];
    for (int n = 0; n < 3; ++n)
      standard[kCornerFacelet[i][(n + ori) % 3]] = face_char(kCornerColor[cubie][n]);
  }
  for (int i = 0; i < 12; ++i) {
    const int cubie = state.edge_perm[i], ori = state.edge_orient[i];
    for (int n = 0; n < 2; ++n)
      standard[kEdgeFacelet[i][(n + ori) % 2]] = face_char(kEdgeColor[cubie][n]);
  }
  const auto &map = state.frame.sticker_map();
  FaceletState out{std::string(kFaceletCount, '?')};
  for (int i = 0; i < kFaceletCount; ++i) out.stickers[map[i]] = standard[i];
  return out;
}

CubieState from_facelets(std::string_view stickers) {
  if (stickers.size() != kFaceletCount)
    throw MalformedFacelets("expected 54 stickers, got " + std::to_string(stickers.size()));
  std::array<int, 6> count{};
  std::array<Face, kFaceletCount> colour{};
  for (std::size_t i = 0; i < stickers.size(); ++i) {
    const auto pos = std::string_view("URFDLB").find(stickers[i]);
    if (pos == std::string_view::npos)
      throw MalformedFacelets("invalid sticker '" + std::string(1, stickers[i]) + "' at " +
                              std::to_string(i));
    colour[i] = static_cast<Face>(pos);
    ++count[pos];
  }
  for (int c = 0; c < 6; ++c)
    if (count[c] != 9)
      throw MalformedFacelets(std::string("colour ") + kFaceChars[c] + " appears " +
                              std::to_string(count[c]) + " times");

  std::array<Face, 6> centres{};
  for (int f = 0; f < 6; ++f) centres[f] = colour[f * 9 + 4];
  {
    auto sorted = centres;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw MalformedFacelets("face centres are not pairwise distinct");
  }
  const auto &table = frames();
  const auto it = std::find(table.color_at.begin(), table.color_at.end(), centres);
  if (it == table.color_at.end()) throw UnsolvableState("centres form a mirror image");

  CubieState s;
  s.frame = Frame::from_index(static_cast<int>(it - table.color_at.begin()));
  const auto &map = s.frame.sticker_map();
  std::array<Face, kFaceletCount> standard{};
  for (int i = 0; i < kFaceletCount; ++i) standard[i] = colour[map[i]];

  for (int i = 0; i < 8; ++i) {
    int ori = 0;
    while (ori < 3 && standard[kCornerFacelet[i][ori]] != Face::U &&
           standard[kCornerFacelet[i][ori]] != Face::D)
      ++ori;
    if (ori == 3) throw UnsolvableState("corner without U/D sticker at slot " + std::to_string(i));
    const Face c1 = standard[kCornerFacelet[i][(ori + 1) % 3]];
    const Face c2 = standard[kCornerFacelet[i][(ori + 2) % 3]];
    int cubie = 0;
    while (cubie < 8 && (kCornerColor[cubie][1] != c1 || kCornerColor[cubie][2] != c2 ||
                         kCornerColor[cubie][0] != standard[kCornerFacelet[i][ori]]))
      ++cubie;
    if (cubie == 8) throw UnsolvableState("impossible corner colours at slot " + std::to_string(i));
    s.corner_perm[i] = static_cast<std::uint8_t>(cubie);
    s.corner_orient[i] = static_cast<std::uint8_t>(ori);
  }
  for (int i = 0; i < 12; ++i) {
    const Face a = standard[kEdgeFacelet[i][0]], b = standard[kEdgeFacelet[i][1]];
    int cubie = 0, ori = 0;
    for (; cubie < 12; ++cubie) {
      if (kEdgeColor[cubie][0] == a && kEdgeColor[cubie][1] == b) { ori = 0; break; }
      if (kEdgeColor[cubie][0] == b && kEdgeColor[cubie][1] == a) { ori = 1; break; }
    }
    if (cubie == 12) throw UnsolvableState("impossible edge colours at slot " + std::to_string(i));
    s.edge_perm[i] = static_cast<std::uint8_t>(cubie);
    s.edge_orient[i] = static_cast<std::uint8_t>(ori);
  }
  verify_reachable(s);
  return s;
}

CubieState from_facelets(const FaceletState &f) { return from_facelets(f.stickers); }

std::string render_net(const FaceletState &f) {
  // Layout:      U
  //          L F R B
  //              D
  auto row = [&](int face, int r) {
    std::string out;
    for (int c = 0; c < 3; ++c) {
      if (c) out += ' ';
      out += f.stickers.at(face * 9 + r * 3 + c);
    }
    return out;
  };
  const std::string pad(8, ' ');
  std::string net;
  for (int r = 0; r < 3; ++r) net += pad + row(0, r) + '\n';
  for (int r = 0; r < 3; ++r)
    net += row(4, r) + "   " + row(2, r) + "   " + row(1, r) + "   " + row(5, r) + '\n';
  for (int r = 0; r < 3; ++r) net += pad + row(3, r) + '\n';
  return net;
}

} // namespace cubeagent
