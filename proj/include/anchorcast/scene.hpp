#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "anchorcast/geometry.hpp"
#include "anchorcast/trajectory.hpp"

namespace anchorcast {

enum class ZoneKind { TrafficLight, StopSign, Yield };
enum class SignalState { Red, Green, NotApplicable };
enum class AgentClass { Vehicle, Pedestrian };
enum class DrivingSide { Right, Left };

struct StopZone {
  Polygon polygon;
  ZoneKind kind = ZoneKind::TrafficLight;
  SignalState signal = SignalState::NotApplicable;
};

struct Crossing {
  Polygon polygon;
  bool active = false;
};

struct Agent {
  int id = 0;
  Trajectory history;  // Global, kHistoryPoints
  Trajectory future;   // Global, kFuturePoints
  AgentClass cls = AgentClass::Vehicle;
};

struct Scene {
  std::vector<Polygon> drivable;
  std::vector<StopZone> stop_zones;
  std::vector<Crossing> crossings;
  std::vector<Agent> agents;
  int ego_id = 0;
  std::string region;
  DrivingSide driving_side = DrivingSide::Right;
  Pose2 ego_pose;  // maps ego-local coordinates to global

  const Agent& ego() const {
    for (const Agent& a : agents) {
      if (a.id == ego_id) return a;
    }
    throw std::logic_error("scene has no ego agent");
  }
};

// Synthetic region knobs; the build ships two profiles that act as the
// distribution-shift axis.
struct RegionProfile {
  std::string name;
  DrivingSide driving_side = DrivingSide::Right;
  double curvature_mix = 0.0;     // fraction of curved (vs grid) layouts, [0,1]
  double stop_density = 0.0;      // expected stop zones per scene
  double crossing_density = 0.0;  // expected pedestrian crossings per scene
  double compliance_rate = 0.9;   // target fraction of rule-compliant GT futures
};

inline RegionProfile grid_right_profile() {
  return {"grid-right", DrivingSide::Right, 0.15, 0.9, 0.7, 0.9};
}

inline RegionProfile curve_left_profile() {
  return {"curve-left", DrivingSide::Left, 0.85, 0.7, 0.9, 0.9};
}

inline RegionProfile builtin_profile(const std::string& name) {
  if (name == "grid-right") return grid_right_profile();
  if (name == "curve-left") return curve_left_profile();
  throw std::invalid_argument("unknown region profile: " + name);
}

// --- JSON encoding -----------------------------------------------------

namespace jsonio {

using nlohmann::json;

inline json encode(const Vec2& v) { return json::array({v.x, v.y}); }
inline Vec2 decode_vec2(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

inline json encode(const std::vector<Vec2>& pts) {
  json arr = json::array();
  for (const Vec2& p : pts) arr.push_back(encode(p));
  return arr;
}

inline std::vector<Vec2> decode_points(const json& j) {
  std::vector<Vec2> pts;
  pts.reserve(j.size());
  for (const auto& e : j) pts.push_back(decode_vec2(e));
  return pts;
}

inline json encode(const Trajectory& t) {
  return json{{"frame", t.frame == Frame::EgoLocal ? "ego" : "global"},
              {"points", encode(t.points)}};
}

inline Trajectory decode_trajectory(const json& j) {
  Trajectory t;
  t.frame = j.at("frame").get<std::string>() == "ego" ? Frame::EgoLocal : Frame::Global;
  t.points = decode_points(j.at("points"));
  return t;
}

inline const char* to_string(ZoneKind k) {
  switch (k) {
    case ZoneKind::TrafficLight: return "traffic_light";
    case ZoneKind::StopSign: return "stop_sign";
    case ZoneKind::Yield: return "yield";
  }
  return "traffic_light";
}

inline ZoneKind zone_kind_from_string(const std::string& s) {
  if (s == "traffic_light") return ZoneKind::TrafficLight;
  if (s == "stop_sign") return ZoneKind::StopSign;
  if (s == "yield") return ZoneKind::Yield;
  throw std::invalid_argument("unknown zone kind: " + s);
}

inline const char* to_string(SignalState s) {
  switch (s) {
    case SignalState::Red: return "red";
    case SignalState::Green: return "green";
    case SignalState::NotApplicable: return "na";
  }
  return "na";
}

inline SignalState signal_from_string(const std::string& s) {
  if (s == "red") return SignalState::Red;
  if (s == "green") return SignalState::Green;
  if (s == "na") return SignalState::NotApplicable;
  throw std::invalid_argument("unknown signal state: " + s);
}

inline json encode(const Scene& s) {
  json drv = json::array();
  for (const Polygon& p : s.drivable) drv.push_back(encode(p));
  json zones = json::array();
  for (const StopZone& z : s.stop_zones) {
    zones.push_back(json{{"polygon", encode(z.polygon)},
                         {"kind", to_string(z.kind)},
                         {"signal", to_string(z.signal)}});
  }
  json crossings = json::array();
  for (const Crossing& c : s.crossings) {
    crossings.push_back(json{{"polygon", encode(c.polygon)}, {"active", c.active}});
  }
  json agents = json::array();
  for (const Agent& a : s.agents) {
    agents.push_back(json{{"id", a.id},
                          {"history", encode(a.history)},
                          {"future", encode(a.future)},
                          {"class", a.cls == AgentClass::Vehicle ? "vehicle" : "pedestrian"}});
  }
  return json{{"drivable", drv},
              {"stop_zones", zones},
              {"crossings", crossings},
              {"agents", agents},
              {"ego_id", s.ego_id},
              {"region", s.region},
              {"driving_side", s.driving_side == DrivingSide::Right ? "right" : "left"},
              {"ego_pose", json{{"t", encode(s.ego_pose.translation)}, {"rot", s.ego_pose.rotation}}}};
}

inline Scene decode_scene(const json& j) {
  Scene s;
  for (const auto& p : j.at("drivable")) s.drivable.push_back(decode_points(p));
  for (const auto& z : j.at("stop_zones")) {
    StopZone zone;
    zone.polygon = decode_points(z.at("polygon"));
    zone.kind = zone_kind_from_string(z.at("kind").get<std::string>());
    zone.signal = signal_from_string(z.at("signal").get<std::string>());
    s.stop_zones.push_back(std::move(zone));
  }
  for (const auto& c : j.at("crossings")) {
    Crossing cr;
    cr.polygon = decode_points(c.at("polygon"));
    cr.active = c.at("active").get<bool>();
    s.crossings.push_back(std::move(cr));
  }
  for (const auto& a : j.at("agents")) {
    Agent agent;
    agent.id = a.at("id").get<int>();
    agent.history = decode_trajectory(a.at("history"));
    agent.future = decode_trajectory(a.at("future"));
    agent.cls = a.at("class").get<std::string>() == "vehicle" ? AgentClass::Vehicle
                                                              : AgentClass::Pedestrian;
    s.agents.push_back(std::move(agent));
  }
  s.ego_id = j.at("ego_id").get<int>();
  s.region = j.at("region").get<std::string>();
  s.driving_side = j.at("driving_side").get<std::string>() == "right" ? DrivingSide::Right
                                                                      : DrivingSide::Left;
  s.ego_pose.translation = decode_vec2(j.at("ego_pose").at("t"));
  s.ego_pose.rotation = j.at("ego_pose").at("rot").get<double>();
  return s;
}

}  // namespace jsonio

}  // namespace anchorcast
