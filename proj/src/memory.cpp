#include "cubeagent/memory.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

namespace cubeagent {

namespace {

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c == '\'') {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

bool mentions_any(const std::vector<std::string> &ws, std::initializer_list<std::string_view> keys) {
  return std::any_of(ws.begin(), ws.end(), [&](const std::string &w) {
    return std::find(keys.begin(), keys.end(), w) != keys.end();
  });
}

} // namespace

Embedding embed(std::string_view text) {
  Embedding v{};
  for (const auto &w : words(text)) v[fnv1a(w) % kEmbeddingDim] += 1.0;
  const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
  if (norm == 0.0) {
    v.fill(1.0 / std::sqrt(static_cast<double>(kEmbeddingDim)));
    return v;
  }
  for (double &x : v) x /= norm;
  return v;
}

double cosine(const Embedding &a, const Embedding &b) {
  const double ab = std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
  const double aa = std::inner_product(a.begin(), a.end(), a.begin(), 0.0);
  const double bb = std::inner_product(b.begin(), b.end(), b.begin(), 0.0);
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

std::string_view to_string(MemoryKind kind) {
  switch (kind) {
  case MemoryKind::Observation: return "observation";
  case MemoryKind::Reflection: return "reflection";
  case MemoryKind::Plan: return "plan";
  }
  return "?";
}

MemoryKind parse_memory_kind(std::string_view s) {
  if (s == "observation") return MemoryKind::Observation;
  if (s == "reflection") return MemoryKind::Reflection;
  if (s == "plan") return MemoryKind::Plan;
  throw std::invalid_argument("unknown memory kind '" + std::string(s) + "'");
}

int builtin_importance(MemoryKind kind, std::string_view description) {
  switch (kind) {
  case MemoryKind::Reflection: return 8;
  case MemoryKind::Plan: return 5;
  case MemoryKind::Observation:
    // A stage milestone beats a routine move observation.
    return mentions_any(words(description), {"solved", "complete", "completed", "reached"}) ? 6 : 3;
  }
  return 3;
}

std::uint64_t MemoryStream::record(std::string description, MemoryKind kind,
                                   std::optional<int> importance) {
  const int imp = importance.value_or(builtin_importance(kind, description));
  if (imp < 1 || imp > 10) throw std::invalid_argument("importance must be within [1, 10]");
  MemoryObject m;
  m.id = next_id_++;
  m.kind = kind;
  m.created_at = m.last_accessed_at = clock_;
  m.importance = imp;
  m.embedding = embed_text(description);
  m.description = std::move(description);
  objects_.push_back(std::move(m));
  ++clock_;
  return objects_.back().id;
}

void MemoryStream::insert(MemoryObject object) {
  if (object.importance < 1 || object.importance > 10)
    throw std::invalid_argument("importance must be within [1, 10]");
  if (object.last_accessed_at < object.created_at)
    throw std::invalid_argument("last_accessed_at precedes created_at");
  if (!objects_.empty() && object.created_at < objects_.back().created_at)
    throw std::invalid_argument("created_at must be non-decreasing");
  if (find(object.id)) throw std::invalid_argument("duplicate memory id " + std::to_string(object.id));
  const double norm =
      std::sqrt(std::inner_product(object.embedding.begin(), object.embedding.end(),
                                   object.embedding.begin(), 0.0));
  if (std::abs(norm - 1.0) > 1e-6) throw std::invalid_argument("embedding is not unit-norm");
  clock_ = std::max(clock_, object.last_accessed_at + 1);
  next_id_ = std::max(next_id_, object.id + 1);
  objects_.push_back(std::move(object));
}

const MemoryObject *MemoryStream::find(std::uint64_t id) const {
  for (const auto &m : objects_)
    if (m.id == id) return &m;
  return nullptr;
}

std::vector<ScoredMemory> MemoryStream::score(std::string_view query, std::optional<Tick> now) const {
  if (objects_.empty()) throw EmptyStream();
  const Tick t = now.value_or(clock_);
  const Embedding q = embed_text(query);

  const std::size_t n = objects_.size();
  std::vector<double> rec(n), imp(n), rel(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto &m = objects_[i];
    if (m.last_accessed_at > t) throw std::invalid_argument("retrieval tick precedes a memory access");
    rec[i] = std::pow(0.995, static_cast<double>(t - m.last_accessed_at));
    imp[i] = m.importance;
    rel[i] = cosine(q, m.embedding);
  }
  auto normalise = [](std::vector<double> &v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double a = *lo, b = *hi;
    for (double &x : v) x = b > a ? (x - a) / (b - a) : 1.0;
  };
  normalise(rec);
  normalise(imp);
  normalise(rel);

  std::vector<ScoredMemory> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = {objects_[i].id, rec[i], imp[i], rel[i], rec[i] + imp[i] + rel[i]};
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (out[a].score != out[b].score) return out[a].score > out[b].score;
    if (objects_[a].created_at != objects_[b].created_at)
      return objects_[a].created_at > objects_[b].created_at;
    return objects_[a].id < objects_[b].id;
  });
  std::vector<ScoredMemory> sorted;
  sorted.reserve(n);
  for (auto i : order) sorted.push_back(out[i]);
  return sorted;
}

std::vector<MemoryObject> MemoryStream::retrieve(std::string_view query, int k, std::optional<Tick> now) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  const Tick t = now.value_or(clock_);
  const auto scored = score(query, t);
  std::vector<MemoryObject> out;
  for (std::size_t i = 0; i < scored.size() && static_cast<int>(i) < k; ++i) {
    for (auto &m : objects_)
      if (m.id == scored[i].id) {
        m.last_accessed_at = t;
        out.push_back(m);
      }
  }
  clock_ = std::max(clock_, t + 1);
  return out;
}

std::string to_json_line(const MemoryObject &m) {
  nlohmann::ordered_json j;
  j["id"] = m.id;
  j["description"] = m.description;
  j["kind"] = to_string(m.kind);
  j["created_at"] = m.created_at;
  j["last_accessed_at"] = m.last_accessed_at;
  j["importance"] = m.importance;
  j["embedding"] = m.embedding;
  return j.dump();
}

MemoryObject memory_from_json(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    MemoryObject m;
    m.id = j.at("id").get<std::uint64_t>();
    m.description = j.at("description").get<std::string>();
    m.kind = parse_memory_kind(j.at("kind").get<std::string>());
    m.created_at = j.at("created_at").get<Tick>();
    m.last_accessed_at = j.at("last_accessed_at").get<Tick>();
    m.importance = j.at("importance").get<int>();
    const auto &e = j.at("embedding");
    if (!e.is_array() || e.size() != kEmbeddingDim)
      throw std::invalid_argument("embedding must hold " + std::to_string(kEmbeddingDim) + " numbers");
    for (int i = 0; i < kEmbeddingDim; ++i) m.embedding[i] = e[i].get<double>();
    return m;
  } catch (const nlohmann::json::exception &e) {
    throw std::invalid_argument(e.what());
  }
}

void MemoryStream::persist(const std::filesystem::path &path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto &m : objects_) out << to_json_line(m) << '\n';
  if (!out) throw IoError("short write to " + path.string());
}

MemoryStream MemoryStream::load(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  MemoryStream s;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      s.insert(memory_from_json(line));
    } catch (const std::invalid_argument &e) {
      throw CorruptRecord(line_no, e.what());
    }
  }
  if (in.bad()) throw IoError("read error on " + path.string());
  return s;
}

} // namespace cubeagent
