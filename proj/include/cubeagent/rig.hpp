#pragma once

// Simulated robot rig: primitive scripts, their execution, and camera
// observations of the cube.

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "cubeagent/cube.hpp"
#include "cubeagent/notation.hpp"

namespace cubeagent {

enum class PrimitiveOp : std::uint8_t { Grip, Rotate, Release, Reorient };

struct Primitive {
  PrimitiveOp op = PrimitiveOp::Grip;
  Face face = Face::U; // a face for Grip/Rotate/Release, X/Y/Z for Reorient
  int quarter_turns = 0; // 1..3 for Rotate and Reorient, 0 otherwise

  friend bool operator==(const Primitive &, const Primitive &) = default;
};

struct RobotScript {
  std::vector<Primitive> primitives;
  friend bool operator==(const RobotScript &, const RobotScript &) = default;
};

class ScriptError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Face turns become GRIP/ROTATE/RELEASE triples; rotations become REORIENT.
RobotScript compile_script(const Algorithm &alg);

/// Executes the primitives.  Throws ScriptError on a ROTATE outside a
/// GRIP…RELEASE of the same face, a dangling GRIP, or a REORIENT while
/// gripping.
CubieState simulate(const RobotScript &script, CubieState state);

/// One primitive per line: {"op":"ROTATE","face":"U","q":1}.
std::string script_to_jsonl(const RobotScript &script);
RobotScript script_from_jsonl(std::string_view text); // throws ScriptError

// ---------------------------------------------------------------------------
// Observations

enum class ObservationMode : std::uint8_t { Full, Partial };

/// Eight viewpoints, one per cube corner; each sees the three faces meeting
/// there.
using Viewpoint = Corner;
std::array<Face, 3> visible_faces(Viewpoint v);
std::string_view to_string(Viewpoint v);

struct Observation {
  ObservationMode mode = ObservationMode::Full;
  std::optional<Viewpoint> viewpoint;
  std::string visible; // 54 chars in facelet order; kUnseen where not visible

  static constexpr char kUnseen = '?';
  int seen_count() const;
};

Observation observe(const CubieState &state, ObservationMode mode, Viewpoint viewpoint = URF);

class ConflictError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Incomplete {
  int missing;
  friend bool operator==(const Incomplete &, const Incomplete &) = default;
};

/// Merges observations of one unchanged state.  Throws ConflictError when two
/// observations disagree on a sticker.
std::variant<FaceletState, Incomplete> reconstruct(std::span<const Observation> observations);

} // namespace cubeagent
