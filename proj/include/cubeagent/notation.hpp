#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "cubeagent/cube.hpp"

namespace cubeagent {

using Algorithm = std::vector<Move>;

class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t offset, std::string token)
      : std::runtime_error("unexpected token '" + token + "' at byte " + std::to_string(offset)),
        offset_(offset), token_(std::move(token)) {}
  std::size_t offset() const { return offset_; }
  const std::string &token() const { return token_; }

private:
  std::size_t offset_;
  std::string token_;
};

/// Whitespace-separated tokens over {U,R,F,D,L,B,x,y,z} with optional ' or 2.
Algorithm parse_algorithm(std::string_view text);
std::string format_algorithm(const Algorithm &alg);

Algorithm invert(const Algorithm &alg);

/// Removes whole-cube rotations by relabelling the faces that follow them,
/// then merges same-face runs (including across a commuting opposite-face
/// move) until nothing changes.  The trailing rotation is dropped, so the
/// result acts identically on the rotation-normalised cubies.
Algorithm canonicalize(const Algorithm &alg);

/// Half-turn metric: face turns count 1, rotations count 0.
int htm_length(const Algorithm &alg);
/// Quarter-turn metric: half turns count 2, rotations count 0.
int qtm_length(const Algorithm &alg);

CubieState apply_algorithm(CubieState state, const Algorithm &alg);
CubieState apply_algorithm(const CubieState &state, std::string_view text);

} // namespace cubeagent
