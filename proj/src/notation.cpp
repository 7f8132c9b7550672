#include "cubeagent/notation.hpp"

#include <algorithm>
#include <cctype>

namespace cubeagent {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

Move parse_token(std::string_view tok, std::size_t offset) {
  static constexpr std::string_view kLetters = "URFDLBxyz";
  if (tok.empty() || tok.size() > 2) throw ParseError(offset, std::string(tok));
  const auto face = kLetters.find(tok[0]);
  if (face == std::string_view::npos) throw ParseError(offset, std::string(tok));
  Move m{static_cast<Face>(face), 1};
  if (tok.size() == 2) {
    if (tok[1] == '\'') m.turns = 3;
    else if (tok[1] == '2') m.turns = 2;
    else throw ParseError(offset, std::string(tok));
  }
  return m;
}

// One merge pass; returns true if anything changed.
bool merge_pass(std::vector<Move> &moves) {
  bool changed = false;
  std::vector<Move> out;
  out.reserve(moves.size());
  for (const Move &m : moves) {
    if (!out.empty() && out.back().face == m.face) {
      const int t = (out.back().turns + m.turns) % 4;
      if (t == 0) out.pop_back();
      else out.back().turns = static_cast<std::uint8_t>(t);
      changed = true;
    } else if (out.size() >= 2 && out.back().face == opposite(m.face) &&
               out[out.size() - 2].face == m.face) {
      Move &prev = out[out.size() - 2];
      const int t = (prev.turns + m.turns) % 4;
      if (t == 0) out.erase(out.end() - 2);
      else prev.turns = static_cast<std::uint8_t>(t);
      changed = true;
    } else {
      out.push_back(m);
    }
  }
  moves = std::move(out);
  return changed;
}

} // namespace

Algorithm parse_algorithm(std::string_view text) {
  Algorithm alg;
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    alg.push_back(parse_token(text.substr(i, j - i), i));
    i = j;
  }
  return alg;
}

std::string format_algorithm(const Algorithm &alg) {
  std::string out;
  for (const Move &m : alg) {
    if (!out.empty()) out += ' ';
    out += to_string(m);
  }
  return out;
}

Algorithm invert(const Algorithm &alg) {
  Algorithm inv(alg.rbegin(), alg.rend());
  for (Move &m : inv) m.turns = static_cast<std::uint8_t>(4 - m.turns);
  return inv;
}

Algorithm canonicalize(const Algorithm &alg) {
  Frame frame;
  Algorithm faces;
  faces.reserve(alg.size());
  for (const Move &m : alg) {
    if (m.is_rotation()) frame = frame.rotated(m);
    else faces.push_back(Move{frame.color_at(m.face), m.turns});
  }
  while (merge_pass(faces)) {
  }
  return faces;
}

int htm_length(const Algorithm &alg) {
  return static_cast<int>(
      std::count_if(alg.begin(), alg.end(), [](const Move &m) { return !m.is_rotation(); }));
}

int qtm_length(const Algorithm &alg) {
  int n = 0;
  for (const Move &m : alg)
    if (!m.is_rotation()) n += m.turns == 2 ? 2 : 1;
  return n;
}

CubieState apply_algorithm(CubieState state, const Algorithm &alg) {
  for (const Move &m : alg) state = apply_move(state, m);
  return state;
}

CubieState apply_algorithm(const CubieState &state, std::string_view text) {
  return apply_algorithm(state, parse_algorithm(text));
}

} // namespace cubeagent
