#include "cubeagent/pruning.hpp"

#include <cstdlib>
#include <fstream>
#include <numeric>

#include "cubeagent/kernels.hpp"

namespace cubeagent {

namespace {



const std::vector<int> &all_moves() {
  static const std::vector<int> m = [] {
    std::vector<int> v(kFaceMoveCount);
    std::iota(v.begin(), v.end(), 0);
    return v;
  }();
  return m;
}

const std::vector<int> &phase2_moves() {
  static const std::vector<int> m(coords::kPhase2Moves.begin(), coords::kPhase2Moves.end());
  return m;
}

template <class Succ>
std::vector<std::uint8_t> fill(std::size_t size, std::uint32_t goal, const std::vector<int> &moves,
                               Succ succ, PruningTables::Build mode) {
  std::vector<std::uint8_t> t(size);
  const std::uint32_t goals[] = {goal};
  if (mode == PruningTables::Build::Serial) kernels::bfs_fill_serial(t, goals, moves, succ);
  else kernels::bfs_fill_parallel(t, goals, moves, succ);
  return t;
}

std::vector<std::vector<std::uint8_t> *> members(PruningTables &t) {
  std::vector<std::vector<std::uint8_t> *> v = {&t.twist,       &t.flip,
                                                 &t.corner_perm, &t.twist_flip, &t.bottom_slice, &t.twist_slice,
                                                 &t.flip_slice,  &t.corner_slice_perm,
                                                 &t.edge_slice_perm};
  for (auto &s : t.subset) v.push_back(&s);
  return v;
}

std::uint64_t fnv1a(const std::vector<std::vector<std::uint8_t> *> &tables) {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto *t : tables)
    for (std::uint8_t b : *t) {
      h ^= b;
      h *= 1099511628211ull;
    }
  return h;
}

constexpr char kMagic[8] = {'C', 'U', 'B', 'E', 'P', 'R', 'U', 'N'};

} // namespace

PruningTables PruningTables::build(Build mode) {
  const auto &mt = coords::MoveTables::instance();
  constexpr int N = kFaceMoveCount;
  constexpr std::uint32_t C = coords::kSliceComb, P = coords::kSlicePerm;
  PruningTables t;
  t.twist = fill(coords::kTwist, 0, all_moves(),
                 [&](std::uint32_t i, int m) { return mt.twist[i * N + m]; }, mode);
  t.flip = fill(coords::kFlip, 0, all_moves(),
                [&](std::uint32_t i, int m) { return mt.flip[i * N + m]; }, mode);
  t.corner_perm = fill(coords::kCornerPerm, 0, all_moves(),
                       [&](std::uint32_t i, int m) { return mt.corner_perm[i * N + m]; }, mode);
  t.twist_flip = fill(
      std::size_t{coords::kTwist} * coords::kFlip, 0, all_moves(),
      [&](std::uint32_t i, int m) {
        return std::uint32_t{mt.twist[(i / coords::kFlip) * N + m]} * coords::kFlip +
               mt.flip[(i % coords::kFlip) * N + m];
      },
      mode);
  const auto &bottom = mt.subset[static_cast<int>(coords::Subset::BottomCorners)];
  t.bottom_slice = fill(
      std::size_t(coords::piece_set(coords::Subset::BottomCorners).size()) * C,
      mt.subset_solved[static_cast<int>(coords::Subset::BottomCorners)] * C, all_moves(),
      [&](std::uint32_t i, int m) {
        return bottom[(i / C) * N + m] * C + mt.slice[(i % C) * P * N + m] / P;
      },
      mode);
  t.twist_slice = fill(
      std::size_t{coords::kTwist} * C, 0, all_moves(),
      [&](std::uint32_t i, int m) {
        const std::uint32_t comb = mt.slice[(i % C) * P * N + m] / P;
        return std::uint32_t{mt.twist[(i / C) * N + m]} * C + comb;
      },
      mode);
  t.flip_slice = fill(
      std::size_t{coords::kFlip} * C, 0, all_moves(),
      [&](std::uint32_t i, int m) {
        const std::uint32_t comb = mt.slice[(i % C) * P * N + m] / P;
        return std::uint32_t{mt.flip[(i / C) * N + m]} * C + comb;
      },
      mode);
  t.corner_slice_perm = fill(
      std::size_t{coords::kCornerPerm} * P, 0, phase2_moves(),
      [&](std::uint32_t i, int m) {
        return std::uint32_t{mt.corner_perm[(i / P) * N + m]} * P + mt.slice[(i % P) * N + m];
      },
      mode);
  t.edge_slice_perm = fill(
      std::size_t{coords::kUdEdgePerm} * P, 0, phase2_moves(),
      [&](std::uint32_t i, int m) {
        return std::uint32_t{mt.ud_edge_perm[(i / P) * N + m]} * P + mt.slice[(i % P) * N + m];
      },
      mode);
  for (int k = 0; k < coords::kSubsetCount; ++k) {
    const auto &moves = mt.subset[k];
    t.subset[k] = fill(coords::piece_set(static_cast<coords::Subset>(k)).size(),
                       mt.subset_solved[k], all_moves(),
                       [&](std::uint32_t i, int m) { return moves[i * N + m]; }, mode);
  }
  return t;
}

std::optional<PruningTables> PruningTables::load(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  std::uint32_t version = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char *>(&version), sizeof version);
  if (!in || std::string_view(magic, 8) != std::string_view(kMagic, 8) || version != kVersion)
    return std::nullopt;

  // Expected sizes come from a fresh layout so a stale file cannot smuggle
  // in a differently-shaped table.
  const std::array<std::size_t, 9 + coords::kSubsetCount> sizes = {
      coords::kTwist,
      coords::kFlip,
      coords::kCornerPerm,
      std::size_t{coords::kTwist} * coords::kFlip,
      std::size_t(coords::piece_set(coords::Subset::BottomCorners).size()) * coords::kSliceComb,
      std::size_t{coords::kTwist} * coords::kSliceComb,
      std::size_t{coords::kFlip} * coords::kSliceComb,
      std::size_t{coords::kCornerPerm} * coords::kSlicePerm,
      std::size_t{coords::kUdEdgePerm} * coords::kSlicePerm,
      static_cast<std::size_t>(coords::piece_set(coords::Subset::CrossEdges).size()),
      static_cast<std::size_t>(coords::piece_set(coords::Subset::BottomCorners).size()),
      static_cast<std::size_t>(coords::piece_set(coords::Subset::SliceEdges).size()),
      static_cast<std::size_t>(coords::piece_set(coords::Subset::TopCorners).size()),
      static_cast<std::size_t>(coords::piece_set(coords::Subset::TopEdges).size())};

  PruningTables t;
  auto tables = members(t);
  for (std::size_t k = 0; k < tables.size(); ++k) {
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char *>(&n), sizeof n);
    if (!in || n != sizes[k]) return std::nullopt;
    tables[k]->resize(n);
    in.read(reinterpret_cast<char *>(tables[k]->data()), static_cast<std::streamsize>(n));
  }
  std::uint64_t checksum = 0;
  in.read(reinterpret_cast<char *>(&checksum), sizeof checksum);
  if (!in || checksum != fnv1a(tables)) return std::nullopt;
  return t;
}

void PruningTables::save(const std::filesystem::path &path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write pruning table cache " + tmp);
    out.write(kMagic, sizeof kMagic);
    out.write(reinterpret_cast<const char *>(&kVersion), sizeof kVersion);
    auto tables = members(const_cast<PruningTables &>(*this));
    for (const auto *t : tables) {
      const std::uint64_t n = t->size();
      out.write(reinterpret_cast<const char *>(&n), sizeof n);
      out.write(reinterpret_cast<const char *>(t->data()), static_cast<std::streamsize>(n));
    }
    const std::uint64_t checksum = fnv1a(tables);
    out.write(reinterpret_cast<const char *>(&checksum), sizeof checksum);
    if (!out) throw std::runtime_error("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::optional<std::filesystem::path> PruningTables::default_cache_path() {
  if (const char *env = std::getenv("CUBEAGENT_TABLE_CACHE")) {
    if (*env == '\0') return std::nullopt;
    return std::filesystem::path(env);
  }
  const char *home = std::getenv("HOME");
  if (!home || *home == '\0') return std::nullopt;
  return std::filesystem::path(home) / ".cache" / "cubeagent" /
         ("pruning-v" + std::to_string(kVersion) + ".bin");
}

const PruningTables &PruningTables::instance() {
  static const PruningTables tables = [] {
    const auto path = default_cache_path();
    if (path) {
      if (auto cached = load(*path)) return std::move(*cached);
    }
    PruningTables built = build();
    if (path) {
      try {
        built.save(*path);
      } catch (const std::exception &) {
        // A read-only cache location only costs a rebuild next time.
      }
    }
    return built;
  }();
  return tables;
}

} // namespace cubeagent
