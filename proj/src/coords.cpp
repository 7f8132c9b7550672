#include "cubeagent/coords.hpp"

#include <algorithm>
#include <numeric>

namespace cubeagent::coords {

namespace {

constexpr int choose(int n, int k) {
  if (k < 0 || k > n) return 0;
  int r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

constexpr int factorial(int n) { return n <= 1 ? 1 : n * factorial(n - 1); }

template <class It> int lehmer_encode(It first, int n) {
  int idx = 0;
  for (int i = 0; i < n; ++i) {
    int smaller = 0;
    for (int j = i + 1; j < n; ++j)
      if (first[j] < first[i]) ++smaller;
    idx = idx * (n - i) + smaller;
  }
  return idx;
}

// Writes the permutation of {0..n-1} with the given Lehmer index.
template <class It> void lehmer_decode(int idx, It out, int n) {
  std::vector<int> digits(n);
  for (int i = n - 1; i >= 0; --i) {
    digits[i] = idx % (n - i);
    idx /= (n - i);
  }
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < n; ++i) {
    out[i] = static_cast<std::uint8_t>(pool[digits[i]]);
    pool.erase(pool.begin() + digits[i]);
  }
}

} // namespace

int twist(const CubieState &s) {
  int v = 0;
  for (int i = 0; i < 7; ++i) v = 3 * v + s.corner_orient[i];
  return v;
}

void set_twist(CubieState &s, int v) {
  int sum = 0;
  for (int i = 6; i >= 0; --i) {
    s.corner_orient[i] = static_cast<std::uint8_t>(v % 3);
    sum += v % 3;
    v /= 3;
  }
  s.corner_orient[7] = static_cast<std::uint8_t>((3 - sum % 3) % 3);
}

int flip(const CubieState &s) {
  int v = 0;
  for (int i = 0; i < 11; ++i) v = 2 * v + s.edge_orient[i];
  return v;
}

void set_flip(CubieState &s, int v) {
  int sum = 0;
  for (int i = 10; i >= 0; --i) {
    s.edge_orient[i] = static_cast<std::uint8_t>(v & 1);
    sum += v & 1;
    v >>= 1;
  }
  s.edge_orient[11] = static_cast<std::uint8_t>(sum & 1);
}

int slice(const CubieState &s) {
  int comb = 0, found = 0;
  for (int j = 11; j >= 0; --j)
    if (s.edge_perm[j] >= FR) comb += choose(11 - j, ++found);
  std::array<std::uint8_t, 4> order{};
  int k = 0;
  for (int j = 0; j < 12; ++j)
    if (s.edge_perm[j] >= FR) order[k++] = static_cast<std::uint8_t>(s.edge_perm[j] - FR);
  return comb * kSlicePerm + lehmer_encode(order.begin(), 4);
}

void set_slice(CubieState &s, int v) {
  int comb = v / kSlicePerm;
  std::array<std::uint8_t, 4> order{};
  lehmer_decode(v % kSlicePerm, order.begin(), 4);
  std::array<bool, 12> occupied{};
  int x = 4;
  for (int j = 0; j < 12 && x > 0; ++j) {
    const int c = choose(11 - j, x);
    if (comb >= c) {
      occupied[j] = true;
      comb -= c;
      --x;
    }
  }
  int k = 0, other = 0;
  for (int j = 0; j < 12; ++j) {
    if (occupied[j]) s.edge_perm[j] = static_cast<std::uint8_t>(FR + order[k++]);
    else s.edge_perm[j] = static_cast<std::uint8_t>(other++);
  }
}

int corner_perm(const CubieState &s) { return lehmer_encode(s.corner_perm.begin(), 8); }
void set_corner_perm(CubieState &s, int v) { lehmer_decode(v, s.corner_perm.begin(), 8); }

int ud_edge_perm(const CubieState &s) { return lehmer_encode(s.edge_perm.begin(), 8); }
void set_ud_edge_perm(CubieState &s, int v) {
  lehmer_decode(v, s.edge_perm.begin(), 8);
  for (int j = 8; j < 12; ++j) s.edge_perm[j] = static_cast<std::uint8_t>(j);
}

PieceSet::PieceSet(bool corners, std::vector<std::uint8_t> pieces)
    : corners_(corners), pieces_(std::move(pieces)), slots_(corners ? 8 : 12),
      arity_(corners ? 3 : 2) {
  const int k = static_cast<int>(pieces_.size());
  perm_count_ = factorial(slots_) / factorial(slots_ - k);
  int ori = 1;
  for (int i = 0; i < k; ++i) ori *= arity_;
  size_ = perm_count_ * ori;
}

int PieceSet::encode(const CubieState &s) const {
  const auto *perm = corners_ ? s.corner_perm.data() : s.edge_perm.data();
  const auto *orient = corners_ ? s.corner_orient.data() : s.edge_orient.data();
  const int k = static_cast<int>(pieces_.size());
  std::array<int, 12> slot_of{};
  for (int j = 0; j < slots_; ++j) slot_of[perm[j]] = j;
  int idx = 0, ori = 0;
  for (int i = 0; i < k; ++i) {
    const int slot = slot_of[pieces_[i]];
    int rank = slot;
    for (int j = 0; j < i; ++j)
      if (slot_of[pieces_[j]] < slot) --rank;
    idx = idx * (slots_ - i) + rank;
    ori = ori * arity_ + orient[slot];
  }
  return idx * (size_ / perm_count_) + ori;
}

CubieState PieceSet::decode(int index) const {
  const int k = static_cast<int>(pieces_.size());
  const int ori_count = size_ / perm_count_;
  int ori = index % ori_count;
  int idx = index / ori_count;
  std::vector<int> ranks(k), oris(k);
  for (int i = k - 1; i >= 0; --i) {
    oris[i] = ori % arity_;
    ori /= arity_;
    ranks[i] = idx % (slots_ - i);
    idx /= (slots_ - i);
  }
  CubieState s;
  auto *perm = corners_ ? s.corner_perm.data() : s.edge_perm.data();
  auto *orient = corners_ ? s.corner_orient.data() : s.edge_orient.data();
  std::array<bool, 12> used_slot{}, used_piece{};
  for (int i = 0; i < k; ++i) {
    int slot = 0, r = ranks[i];
    for (;; ++slot) {
      if (used_slot[slot]) continue;
      if (r-- == 0) break;
    }
    used_slot[slot] = true;
    used_piece[pieces_[i]] = true;
    perm[slot] = pieces_[i];
    orient[slot] = static_cast<std::uint8_t>(oris[i]);
  }
  int next = 0;
  for (int slot = 0; slot < slots_; ++slot) {
    if (used_slot[slot]) continue;
    while (used_piece[next]) ++next;
    perm[slot] = static_cast<std::uint8_t>(next++);
    orient[slot] = 0;
  }
  return s;
}

const PieceSet &piece_set(Subset s) {
  static const std::array<PieceSet, kSubsetCount> sets = {
      PieceSet(false, {DR, DF, DL, DB}), PieceSet(true, {DFR, DLF, DBL, DRB}),
      PieceSet(false, {FR, FL, BL, BR}), PieceSet(true, {URF, UFL, ULB, UBR}),
      PieceSet(false, {UR, UF, UL, UB})};
  return sets[static_cast<int>(s)];
}

namespace {

template <class T, class Decode, class Encode>
std::vector<T> build_table(int size, Decode decode, Encode encode, bool phase2_only = false) {
  std::vector<T> table(static_cast<std::size_t>(size) * kFaceMoveCount, 0);
#pragma omp parallel for schedule(static)
  for (int v = 0; v < size; ++v) {
    const CubieState s = decode(v);
    for (int m = 0; m < kFaceMoveCount; ++m) {
      if (phase2_only &&
          std::find(kPhase2Moves.begin(), kPhase2Moves.end(), m) == kPhase2Moves.end())
        continue;
      table[static_cast<std::size_t>(v) * kFaceMoveCount + m] =
          static_cast<T>(encode(multiply(s, face_move_action(m))));
    }
  }
  return table;
}

template <void (*Set)(CubieState &, int)> CubieState decoded(int v) {
  CubieState s;
  Set(s, v);
  return s;
}

} // namespace

MoveTables::MoveTables() {
  twist = build_table<std::uint16_t>(kTwist, decoded<set_twist>, coords::twist);
  flip = build_table<std::uint16_t>(kFlip, decoded<set_flip>, coords::flip);
  slice = build_table<std::uint16_t>(kSlice, decoded<set_slice>, coords::slice);
  corner_perm =
      build_table<std::uint16_t>(kCornerPerm, decoded<set_corner_perm>, coords::corner_perm);
  ud_edge_perm = build_table<std::uint16_t>(kUdEdgePerm, decoded<set_ud_edge_perm>,
                                            coords::ud_edge_perm, true);
  for (int i = 0; i < kSubsetCount; ++i) {
    const PieceSet &ps = piece_set(static_cast<Subset>(i));
    subset[i] = build_table<std::uint32_t>(
        ps.size(), [&](int v) { return ps.decode(v); },
        [&](const CubieState &s) { return ps.encode(s); });
    subset_solved[i] = static_cast<std::uint32_t>(ps.encode(identity()));
  }
}

const MoveTables &MoveTables::instance() {
  static const MoveTables tables;
  return tables;
}

CoordState CoordState::from(const CubieState &s) {
  CoordState c;
  c.twist = static_cast<std::uint16_t>(coords::twist(s));
  c.flip = static_cast<std::uint16_t>(coords::flip(s));
  c.slice = static_cast<std::uint16_t>(coords::slice(s));
  c.corner_perm = static_cast<std::uint16_t>(coords::corner_perm(s));
  for (int i = 0; i < kSubsetCount; ++i)
    c.subset[i] = static_cast<std::uint32_t>(piece_set(static_cast<Subset>(i)).encode(s));
  return c;
}

} // namespace cubeagent::coords
