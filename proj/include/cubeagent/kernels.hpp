#pragma once

// Breadth-first distance fills over dense index spaces.  The serial version
// is the reference; the OpenMP version must produce byte-identical tables.

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

namespace cubeagent::kernels {

constexpr std::uint8_t kUnvisited = 0xFF;

// Fills `table` with the move distance from the nearest goal index.
// `succ(i, m)` returns the index reached from i by move m.  Returns the
// largest distance found.
template <class Succ>
int bfs_fill_serial(std::vector<std::uint8_t> &table, std::span<const std::uint32_t> goals,
                    std::span<const int> moves, Succ succ) {
  std::fill(table.begin(), table.end(), kUnvisited);
  for (auto g : goals) table[g] = 0;
  const std::size_t n = table.size();
  int depth = 0;
  for (;; ++depth) {
    std::size_t filled = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (table[i] != depth) continue;
      for (int m : moves) {
        const auto j = succ(static_cast<std::uint32_t>(i), m);
        if (table[j] == kUnvisited) {
          table[j] = static_cast<std::uint8_t>(depth + 1);
          ++filled;
        }
      }
    }
    if (filled == 0) return depth;
  }
}

template <class Succ>
int bfs_fill_parallel(std::vector<std::uint8_t> &table, std::span<const std::uint32_t> goals,
                      std::span<const int> moves, Succ succ) {
  std::fill(table.begin(), table.end(), kUnvisited);
  for (auto g : goals) table[g] = 0;
  const auto n = static_cast<std::int64_t>(table.size());
  int depth = 0;
  for (;; ++depth) {
    std::size_t filled = 0;
#pragma omp parallel for schedule(dynamic, 8192) reduction(+ : filled)
    for (std::int64_t i = 0; i < n; ++i) {
      if (std::atomic_ref<std::uint8_t>(table[i]).load(std::memory_order_relaxed) != depth)
        continue;
      for (int m : moves) {
        const auto j = succ(static_cast<std::uint32_t>(i), m);
        std::atomic_ref<std::uint8_t> cell(table[j]);
        std::uint8_t expected = kUnvisited;
        if (cell.load(std::memory_order_relaxed) == kUnvisited &&
            cell.compare_exchange_strong(expected, static_cast<std::uint8_t>(depth + 1),
                                         std::memory_order_relaxed))
          ++filled;
      }
    }
    if (filled == 0) return depth;
  }
}

} // namespace cubeagent::kernels
