#pragma once

// Experience log with retrieval scored on recency, importance and relevance.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cubeagent {

constexpr int kEmbeddingDim = 256;
using Embedding = std::array<double, kEmbeddingDim>;
using Tick = std::int64_t;

/// Lowercased word tokens hashed into kEmbeddingDim buckets, L2-normalised.
/// Text without tokens maps to the uniform unit vector.
Embedding embed(std::string_view text);
double cosine(const Embedding &a, const Embedding &b);

enum class MemoryKind : std::uint8_t { Observation, Reflection, Plan };
std::string_view to_string(MemoryKind kind);
MemoryKind parse_memory_kind(std::string_view s);

/// Built-in importance rules (see docs/memory-importance.md).
int builtin_importance(MemoryKind kind, std::string_view description);

struct MemoryObject {
  std::uint64_t id = 0;
  std::string description;
  MemoryKind kind = MemoryKind::Observation;
  Tick created_at = 0;
  Tick last_accessed_at = 0;
  int importance = 1;
  Embedding embedding{};

  friend bool operator==(const MemoryObject &, const MemoryObject &) = default;
};

class EmptyStream : public std::runtime_error {
public:
  EmptyStream() : std::runtime_error("retrieve on an empty memory stream") {}
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class CorruptRecord : public std::runtime_error {
public:
  CorruptRecord(std::size_t line, const std::string &why)
      : std::runtime_error("corrupt memory record on line " + std::to_string(line) + ": " + why),
        line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

struct ScoredMemory {
  std::uint64_t id;
  double recency, importance, relevance; // normalised components
  double score;
};

/// Single-owner and not thread-safe; retrieval updates access ticks.
class MemoryStream {
public:
  using Embedder = std::function<Embedding(std::string_view)>;

  MemoryStream() = default;
  explicit MemoryStream(Embedder embedder) : embedder_(std::move(embedder)) {}

  /// Appends at the current tick, then advances the clock.  Without an
  /// explicit importance the built-in rules apply.
  std::uint64_t record(std::string description, MemoryKind kind,
                       std::optional<int> importance = std::nullopt);

  /// Appends a fully specified object (loading, fixtures).  Checks the
  /// stream invariants and moves the clock past every tick it carries.
  void insert(MemoryObject object);

  const MemoryObject *find(std::uint64_t id) const;
  const std::vector<MemoryObject> &objects() const { return objects_; }
  bool empty() const { return objects_.empty(); }
  std::size_t size() const { return objects_.size(); }
  Tick clock() const { return clock_; }
  void advance(Tick ticks = 1) { clock_ += ticks; }

  /// Scores every memory against the query at tick `now` (default: the
  /// clock), best first, without touching access ticks.
  std::vector<ScoredMemory> score(std::string_view query, std::optional<Tick> now = std::nullopt) const;

  /// Top-k of score(); the returned objects get last_accessed_at = now.
  std::vector<MemoryObject> retrieve(std::string_view query, int k,
                                     std::optional<Tick> now = std::nullopt);

  /// One JSON object per line.  The clock is not stored; a loaded stream
  /// resumes one tick after the latest tick it contains.
  void persist(const std::filesystem::path &path) const;
  static MemoryStream load(const std::filesystem::path &path);

  friend bool operator==(const MemoryStream &a, const MemoryStream &b) {
    return a.objects_ == b.objects_;
  }

private:
  Embedding embed_text(std::string_view text) const { return embedder_ ? embedder_(text) : embed(text); }

  std::vector<MemoryObject> objects_;
  Tick clock_ = 0;
  std::uint64_t next_id_ = 1;
  Embedder embedder_;
};

std::string to_json_line(const MemoryObject &m);
MemoryObject memory_from_json(std::string_view line); // throws std::invalid_argument

} // namespace cubeagent
