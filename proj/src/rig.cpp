#include "cubeagent/rig.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"

namespace cubeagent {

RobotScript compile_script(const Algorithm &alg) {
  RobotScript script;
  for (const Move &m : alg) {
    if (m.is_rotation()) {
      script.primitives.push_back({PrimitiveOp::Reorient, m.face, m.turns});
      continue;
    }
    script.primitives.push_back({PrimitiveOp::Grip, m.face, 0});
    script.primitives.push_back({PrimitiveOp::Rotate, m.face, m.turns});
    script.primitives.push_back({PrimitiveOp::Release, m.face, 0});
  }
  return script;
}

CubieState simulate(const RobotScript &script, CubieState state) {
  int held = -1; // face index while gripping
  for (std::size_t i = 0; i < script.primitives.size(); ++i) {
    const Primitive &p = script.primitives[i];
    const std::string at = " at primitive " + std::to_string(i);
    const bool turns_ok = p.quarter_turns >= 1 && p.quarter_turns <= 3;
    switch (p.op) {
    case PrimitiveOp::Grip:
      if (is_rotation(p.face)) throw ScriptError("GRIP needs a face" + at);
      if (held >= 0) throw ScriptError("GRIP while already holding a face" + at);
      held = face_index(p.face);
      break;
    case PrimitiveOp::Rotate:
      if (held != face_index(p.face)) throw ScriptError("ROTATE without GRIP of the same face" + at);
      if (!turns_ok) throw ScriptError("quarter turns must be 1..3" + at);
      state = apply_move(state, Move{p.face, static_cast<std::uint8_t>(p.quarter_turns)});
      break;
    case PrimitiveOp::Release:
      if (held != face_index(p.face)) throw ScriptError("RELEASE of a face not gripped" + at);
      held = -1;
      break;
    case PrimitiveOp::Reorient:
      if (!is_rotation(p.face)) throw ScriptError("REORIENT needs an axis" + at);
      if (held >= 0) throw ScriptError("REORIENT while gripping" + at);
      if (!turns_ok) throw ScriptError("quarter turns must be 1..3" + at);
      state = apply_move(state, Move{p.face, static_cast<std::uint8_t>(p.quarter_turns)});
      break;
    }
  }
  if (held >= 0) throw ScriptError("script ends while gripping");
  return state;
}

namespace {

std::string_view op_name(PrimitiveOp op) {
  switch (op) {
  case PrimitiveOp::Grip: return "GRIP";
  case PrimitiveOp::Rotate: return "ROTATE";
  case PrimitiveOp::Release: return "RELEASE";
  case PrimitiveOp::Reorient: return "REORIENT";
  }
  return "?";
}

Face face_from(const std::string &s, bool axis) {
  static const std::string faces = "URFDLB", axes = "xyz";
  if (s.size() == 1) {
    if (!axis && faces.find(s[0]) != std::string::npos) return static_cast<Face>(faces.find(s[0]));
    if (axis && axes.find(s[0]) != std::string::npos) return static_cast<Face>(6 + axes.find(s[0]));
  }
  throw ScriptError(std::string(axis ? "bad axis '" : "bad face '") + s + "'");
}

} // namespace

std::string script_to_jsonl(const RobotScript &script) {
  std::string out;
  for (const auto &p : script.primitives) {
    nlohmann::ordered_json j;
    j["op"] = op_name(p.op);
    if (p.op == PrimitiveOp::Reorient) j["axis"] = std::string(1, face_char(p.face));
    else j["face"] = std::string(1, face_char(p.face));
    if (p.op == PrimitiveOp::Rotate || p.op == PrimitiveOp::Reorient) j["q"] = p.quarter_turns;
    out += j.dump();
    out += '\n';
  }
  return out;
}

RobotScript script_from_jsonl(std::string_view text) {
  RobotScript script;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto op = j.at("op").get<std::string>();
      Primitive p;
      if (op == "GRIP") p.op = PrimitiveOp::Grip;
      else if (op == "ROTATE") p.op = PrimitiveOp::Rotate;
      else if (op == "RELEASE") p.op = PrimitiveOp::Release;
      else if (op == "REORIENT") p.op = PrimitiveOp::Reorient;
      else throw ScriptError("unknown op '" + op + "'");
      const bool axis = p.op == PrimitiveOp::Reorient;
      p.face = face_from(j.at(axis ? "axis" : "face").get<std::string>(), axis);
      if (p.op == PrimitiveOp::Rotate || axis) p.quarter_turns = j.at("q").get<int>();
      script.primitives.push_back(p);
    } catch (const std::exception &e) {
      throw ScriptError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return script;
}

std::array<Face, 3> visible_faces(Viewpoint v) {
  switch (v) {
  case URF: return {Face::U, Face::R, Face::F};
  case UFL: return {Face::U, Face::F, Face::L};
  case ULB: return {Face::U, Face::L, Face::B};
  case UBR: return {Face::U, Face::B, Face::R};
  case DFR: return {Face::D, Face::F, Face::R};
  case DLF: return {Face::D, Face::L, Face::F};
  case DBL: return {Face::D, Face::B, Face::L};
  case DRB: return {Face::D, Face::R, Face::B};
  }
  return {Face::U, Face::R, Face::F};
}

std::string_view to_string(Viewpoint v) {
  static constexpr std::string_view names[] = {"URF", "UFL", "ULB", "UBR", "DFR", "DLF", "DBL", "DRB"};
  return names[v];
}

int Observation::seen_count() const {
  return static_cast<int>(std::count_if(visible.begin(), visible.end(), [](char c) { return c != kUnseen; }));
}

Observation observe(const CubieState &state, ObservationMode mode, Viewpoint viewpoint) {
  Observation o;
  o.mode = mode;
  o.visible = to_facelets(state).stickers;
  if (mode == ObservationMode::Full) return o;
  o.viewpoint = viewpoint;
  const auto faces = visible_faces(viewpoint);
  for (int i = 0; i < kFaceletCount; ++i) {
    const Face f = static_cast<Face>(i / 9);
    if (std::find(faces.begin(), faces.end(), f) == faces.end()) o.visible[i] = Observation::kUnseen;
  }
  return o;
}

std::variant<FaceletState, Incomplete> reconstruct(std::span<const Observation> observations) {
  std::string merged(kFaceletCount, Observation::kUnseen);
  for (const auto &o : observations) {
    if (o.visible.size() != static_cast<std::size_t>(kFaceletCount))
      throw ConflictError("observation does not cover 54 sticker slots");
    for (int i = 0; i < kFaceletCount; ++i) {
      const char c = o.visible[i];
      if (c == Observation::kUnseen) continue;
      if (merged[i] != Observation::kUnseen && merged[i] != c)
        throw ConflictError("observations disagree on sticker " + std::to_string(i));
      merged[i] = c;
    }
  }
  const int missing = static_cast<int>(std::count(merged.begin(), merged.end(), Observation::kUnseen));
  if (missing > 0) return Incomplete{missing};
  return FaceletState{merged};
}

} // namespace cubeagent
