#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cubeagent/coords.hpp"

namespace cubeagent {

/// Admissible distance tables.  Each entry is the exact number of face moves
/// needed to solve the projected coordinate, hence a lower bound on the
/// distance of every full state with that projection.
struct PruningTables {
  static constexpr std::uint32_t kVersion = 3;

  // Distance to solved of each single coordinate.
  std::vector<std::uint8_t> twist;       // 3^7
  std::vector<std::uint8_t> flip;        // 2^11
  std::vector<std::uint8_t> corner_perm; // 8!
  std::vector<std::uint8_t> twist_flip;  // twist * 2048 + flip
  // Bottom-corner subset * slice comb; the second-layer stage bound.
  std::vector<std::uint8_t> bottom_slice;
  // Two-phase search: distance to <U,D,R2,L2,F2,B2> and then to solved.
  std::vector<std::uint8_t> twist_slice;       // twist * 495 + slice comb
  std::vector<std::uint8_t> flip_slice;        // flip * 495 + slice comb
  std::vector<std::uint8_t> corner_slice_perm; // corner perm * 24 + slice perm, phase-2 moves
  std::vector<std::uint8_t> edge_slice_perm;   // ud edge perm * 24 + slice perm, phase-2 moves
  // Piece subsets, indexed by coords::Subset.
  std::array<std::vector<std::uint8_t>, coords::kSubsetCount> subset;

  enum class Build { Serial, Parallel };
  static PruningTables build(Build mode = Build::Parallel);

  // Returns nullopt when the file is absent, truncated, or from another version.
  static std::optional<PruningTables> load(const std::filesystem::path &path);
  void save(const std::filesystem::path &path) const;

  // Process-wide tables: loaded from the cache file when valid, otherwise
  // built and written back.  Cache path: $CUBEAGENT_TABLE_CACHE, else
  // $HOME/.cache/cubeagent/pruning-v<kVersion>.bin; an empty variable
  // disables the cache.
  static const PruningTables &instance();
  static std::optional<std::filesystem::path> default_cache_path();

  friend bool operator==(const PruningTables &, const PruningTables &) = default;
};

} // namespace cubeagent
