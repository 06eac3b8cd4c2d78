#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "anchorcast/dataset.hpp"
#include "anchorcast/rng.hpp"
#include "anchorcast/rules.hpp"
#include "anchorcast/scene.hpp"

namespace anchorcast {

struct EncoderInputConfig {
  int num_rays = 8;
  double ray_clamp = 50.0;
  int max_agents = 4;
  double stop_clamp = 50.0;
  double crossing_clamp = 50.0;
};

// kinematics (3) + agents (4 each) + rays + stop distance/one-hot signal (4)
// + crossing distance (1) + driving side (1)
inline int feature_dim(const EncoderInputConfig& cfg) {
  return 3 + 4 * cfg.max_agents + cfg.num_rays + 4 + 1 + 1;
}

// --- Feature encoding -------------------------------------------------

// Fixed-layout feature vector, computed entirely in the ego frame so a rigid
// transform of the whole scene leaves it unchanged.
inline Eigen::VectorXd encode_features(const Sample& sample, const Scene& scene,
                                       const EncoderInputConfig& cfg) {
  if (sample.ego_history.points.size() < static_cast<std::size_t>(kHistoryPoints)) {
    throw std::invalid_argument("ego history must have 3 points");
  }
  Eigen::VectorXd f = Eigen::VectorXd::Zero(feature_dim(cfg));
  int at = 0;

  // ego kinematics from the ego-local history (last point at the origin)
  const auto& h = sample.ego_history.points;
  const Vec2 v1 = (h[1] - h[0]) * (1.0 / kDt);
  const Vec2 v2 = (h[2] - h[1]) * (1.0 / kDt);
  const double speed1 = v1.norm(), speed2 = v2.norm();
  f[at++] = speed2;
  f[at++] = (speed2 - speed1) / kDt;
  double yaw_rate = 0.0;
  if (speed1 > 1e-9 && speed2 > 1e-9) {
    double dyaw = std::atan2(v2.y, v2.x) - std::atan2(v1.y, v1.x);
    while (dyaw > std::numbers::pi) dyaw -= 2.0 * std::numbers::pi;
    while (dyaw < -std::numbers::pi) dyaw += 2.0 * std::numbers::pi;
    yaw_rate = dyaw / kDt;
  }
  f[at++] = yaw_rate;

  const Pose2& pose = scene.ego_pose;
  auto to_ego = [&](const Vec2& p) { return (p - pose.translation).rotated(-pose.rotation); };
  auto dir_to_ego = [&](const Vec2& d) { return d.rotated(-pose.rotation); };

  // up to max_agents nearest non-ego agents, nearest first, zero padded
  struct Neighbor {
    double dist;
    int id;
    Vec2 rel_pos, rel_vel;
  };
  std::vector<Neighbor> neighbors;
  for (const Agent& a : scene.agents) {
    if (a.id == scene.ego_id) continue;
    const auto& ah = a.history.points;
    const Vec2 cur = to_ego(ah.back());
    const Vec2 vel = dir_to_ego((ah.back() - ah[ah.size() - 2]) * (1.0 / kDt));
    neighbors.push_back({cur.norm(), a.id, cur, vel});
  }
  std::sort(neighbors.begin(), neighbors.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.dist != b.dist ? a.dist < b.dist : a.id < b.id;
  });
  for (int i = 0; i < cfg.max_agents; ++i) {
    if (i < static_cast<int>(neighbors.size())) {
      const Neighbor& nb = neighbors[static_cast<std::size_t>(i)];
      f[at++] = nb.rel_pos.x;
      f[at++] = nb.rel_pos.y;
      f[at++] = nb.rel_vel.x;
      f[at++] = nb.rel_vel.y;
    } else {
      at += 4;
    }
  }

  // ray-cast distances to drivable polygon edges at fixed ego-frame bearings
  for (int r = 0; r < cfg.num_rays; ++r) {
    const double bearing = 2.0 * std::numbers::pi * r / cfg.num_rays;
    const Vec2 dir_global = Vec2(std::cos(bearing), std::sin(bearing)).rotated(pose.rotation);
    double dist = cfg.ray_clamp;
    for (const Polygon& poly : scene.drivable) {
      dist = std::min(dist, ray_polygon_distance(pose.translation, dir_global, poly));
    }
    f[at++] = std::min(dist, cfg.ray_clamp);
  }

  // distance along heading to the nearest stop zone, plus its signal one-hot
  const Vec2 heading_global = Vec2(1.0, 0.0).rotated(pose.rotation);
  double stop_dist = cfg.stop_clamp;
  const StopZone* nearest_zone = nullptr;
  for (const StopZone& z : scene.stop_zones) {
    const double d = ray_polygon_distance(pose.translation, heading_global, z.polygon);
    if (d < stop_dist) {
      stop_dist = d;
      nearest_zone = &z;
    }
  }
  f[at++] = stop_dist;
  if (nearest_zone != nullptr) {
    f[at + 0] = nearest_zone->signal == SignalState::Red ? 1.0 : 0.0;
    f[at + 1] = nearest_zone->signal == SignalState::Green ? 1.0 : 0.0;
    f[at + 2] = nearest_zone->signal == SignalState::NotApplicable ? 1.0 : 0.0;
  }
  at += 3;

  // distance along heading to the nearest active crossing
  double crossing_dist = cfg.crossing_clamp;
  for (const Crossing& c : scene.crossings) {
    if (!c.active) continue;
    crossing_dist = std::min(crossing_dist,
                             ray_polygon_distance(pose.translation, heading_global, c.polygon));
  }
  f[at++] = std::min(crossing_dist, cfg.crossing_clamp);

  f[at++] = scene.driving_side == DrivingSide::Right ? 1.0 : -1.0;
  return f;
}

// --- Scene generation --------------------------------------------------

namespace scenegen {

inline constexpr double kRoadWidth = 7.0;
inline constexpr double kRoadLength = 160.0;
inline constexpr double kZoneDepth = 3.5;
inline constexpr double kCrossingDepth = 2.5;
inline constexpr double kBboxMargin = 60.0;

// Centerline of the road plus the signed lane offset the ego travels on.
struct LanePath {
  bool curved = false;
  // straight
  Vec2 p0;
  double phi = 0.0;
  // curved
  Vec2 center;
  double road_radius = 0.0;
  double a0 = 0.0;
  double turn_sign = 1.0;  // +1 ccw, -1 cw

  double lane_offset = 0.0;  // along the right normal of travel
  double length = 0.0;       // usable arc length of the road centerline

  Vec2 road_point(double s, double lateral_right) const {
    if (!curved) {
      const Vec2 dir{std::cos(phi), std::sin(phi)};
      const Vec2 right{dir.y, -dir.x};
      return p0 + dir * s + right * lateral_right;
    }
    const double alpha = a0 + turn_sign * s / road_radius;
    // right of travel is radially outward for ccw, inward for cw
    const double radius = road_radius + turn_sign * lateral_right;
    return center + Vec2(std::cos(alpha), std::sin(alpha)) * radius;
  }

  Vec2 lane_point(double s, double extra_lateral = 0.0) const {
    return road_point(s, lane_offset + extra_lateral);
  }

  double heading(double s) const {
    if (!curved) return phi;
    const double alpha = a0 + turn_sign * s / road_radius;
    return alpha + turn_sign * std::numbers::pi / 2.0;
  }

  Polygon band(double s_lo, double s_hi, double half_width) const {
    Polygon poly;
    if (!curved) {
      poly = {road_point(s_lo, half_width), road_point(s_hi, half_width),
              road_point(s_hi, -half_width), road_point(s_lo, -half_width)};
      return poly;
    }
    const double step = 4.0 * std::numbers::pi / 180.0 * road_radius;  // ~4 degree chords
    const int segs = std::max(2, static_cast<int>(std::ceil((s_hi - s_lo) / step)));
    for (int i = 0; i <= segs; ++i) {
      poly.push_back(road_point(s_lo + (s_hi - s_lo) * i / segs, half_width));
    }
    for (int i = segs; i >= 0; --i) {
      poly.push_back(road_point(s_lo + (s_hi - s_lo) * i / segs, -half_width));
    }
    return poly;
  }
};

struct ZoneMeta {
  double s = 0.0;  // entry arc length on the main road
  bool blocking_red = false;
  bool yield_kind = false;
  std::size_t index = 0;
};

inline Trajectory constant_speed_track(const Vec2& start, const Vec2& velocity, int points,
                                       double t0) {
  Trajectory t;
  t.frame = Frame::Global;
  for (int i = 0; i < points; ++i) {
    const double time = t0 + i * kDt;
    t.points.push_back(start + velocity * time);
  }
  return t;
}

}  // namespace scenegen

// Deterministic synthetic scene: one road corridor (straight, optionally with
// a cross street, or an arc), stop zones, crossings, background agents, and a
// ground-truth ego future that complies with the built-in rules with
// probability approximately the profile's compliance rate.
inline Scene generate_scene(const RegionProfile& profile, std::uint64_t seed) {
  using namespace scenegen;
  Rng rng(substream(seed, 0xA11C0DE5ULL));
  Scene scene;
  scene.region = profile.name;
  scene.driving_side = profile.driving_side;

  LanePath lane;
  lane.curved = rng.bernoulli(profile.curvature_mix);
  lane.lane_offset = (profile.driving_side == DrivingSide::Right ? 1.0 : -1.0) * kRoadWidth / 4.0;
  if (lane.curved) {
    lane.road_radius = rng.uniform(45.0, 95.0);
    lane.turn_sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
    lane.a0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    lane.center = {rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0)};
    lane.length = std::min(kRoadLength, 2.6 * lane.road_radius);
  } else {
    lane.phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    lane.p0 = {rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0)};
    lane.length = kRoadLength;
  }
  scene.drivable.push_back(lane.band(0.0, lane.length, kRoadWidth / 2.0));

  // optional cross street for grid layouts
  bool has_cross = false;
  Vec2 cross_center, cross_dir;
  if (!lane.curved && rng.bernoulli(0.55)) {
    has_cross = true;
    const double s_x = rng.uniform(60.0, 110.0);
    cross_center = lane.road_point(s_x, 0.0);
    const Vec2 dir{std::cos(lane.phi), std::sin(lane.phi)};
    cross_dir = {dir.y, -dir.x};
    Polygon cross_poly = {cross_center + cross_dir * 45.0 + dir * (kRoadWidth / 2.0),
                          cross_center + cross_dir * 45.0 - dir * (kRoadWidth / 2.0),
                          cross_center - cross_dir * 45.0 - dir * (kRoadWidth / 2.0),
                          cross_center - cross_dir * 45.0 + dir * (kRoadWidth / 2.0)};
    scene.drivable.push_back(std::move(cross_poly));
  }

  // ego start and history along the lane
  const double s0 = rng.uniform(25.0, 45.0);
  const double v0 = rng.uniform(3.0, 11.0);
  scene.ego_pose.translation = lane.lane_point(s0);
  scene.ego_pose.rotation = lane.heading(s0);

  Agent ego;
  ego.id = 0;
  ego.cls = AgentClass::Vehicle;
  ego.history.frame = Frame::Global;
  for (int i = kHistoryPoints - 1; i >= 0; --i) {
    ego.history.points.push_back(lane.lane_point(s0 - v0 * kDt * i));
  }
  scene.ego_id = 0;

  // stop zones and crossings ahead of the ego, non-overlapping
  std::vector<ZoneMeta> zone_meta;
  std::vector<double> taken_s;
  const double place_lo = s0 + 15.0;
  const double place_hi = std::min(s0 + 75.0, lane.length - 12.0);
  auto try_place = [&](double min_gap) -> std::optional<double> {
    if (place_hi - place_lo < 10.0) return std::nullopt;
    for (int attempt = 0; attempt < 10; ++attempt) {
      const double s = rng.uniform(place_lo, place_hi);
      bool ok = true;
      for (double other : taken_s) ok = ok && std::abs(other - s) >= min_gap;
      if (ok) {
        taken_s.push_back(s);
        return s;
      }
    }
    return std::nullopt;
  };

  const int want_zones = std::min(rng.poisson(profile.stop_density), 2);
  for (int z = 0; z < want_zones; ++z) {
    const auto s = try_place(12.0);
    if (!s) break;
    StopZone zone;
    const double kind_draw = rng.u01();
    zone.kind = kind_draw < 0.55 ? ZoneKind::TrafficLight
                : kind_draw < 0.80 ? ZoneKind::StopSign
                                   : ZoneKind::Yield;
    zone.signal = zone.kind == ZoneKind::TrafficLight
                      ? (rng.bernoulli(0.5) ? SignalState::Red : SignalState::Green)
                      : SignalState::NotApplicable;
    zone.polygon = lane.band(*s, *s + kZoneDepth, kRoadWidth / 2.0 + 0.5);
    ZoneMeta meta;
    meta.s = *s;
    meta.blocking_red = zone.kind == ZoneKind::TrafficLight && zone.signal == SignalState::Red;
    meta.yield_kind = zone.kind != ZoneKind::TrafficLight;
    meta.index = scene.stop_zones.size();
    zone_meta.push_back(meta);
    scene.stop_zones.push_back(std::move(zone));
  }

  std::vector<double> crossing_s;
  const int want_crossings = std::min(rng.poisson(profile.crossing_density), 2);
  for (int c = 0; c < want_crossings; ++c) {
    const auto s = try_place(9.0);
    if (!s) break;
    Crossing crossing;
    crossing.active = rng.bernoulli(0.55);
    crossing.polygon = lane.band(*s, *s + kCrossingDepth, kRoadWidth / 2.0 + 1.5);
    if (crossing.active) crossing_s.push_back(*s);
    scene.crossings.push_back(std::move(crossing));
  }

  // background agents
  int next_id = 1;
  if (rng.bernoulli(0.65)) {  // oncoming vehicle on the other lane
    Agent a;
    a.id = next_id++;
    a.cls = AgentClass::Vehicle;
    const double s_on = rng.uniform(s0 + 20.0, std::min(s0 + 90.0, lane.length - 5.0));
    const double speed = rng.uniform(3.0, 10.0);
    const Vec2 pos = lane.road_point(s_on, -lane.lane_offset);
    const double back_heading = lane.heading(s_on) + std::numbers::pi;
    const Vec2 vel = Vec2(std::cos(back_heading), std::sin(back_heading)) * speed;
    a.history = scenegen::constant_speed_track(pos, vel, kHistoryPoints, -(kHistoryPoints - 1) * kDt);
    a.future = scenegen::constant_speed_track(pos + vel * kDt, vel, kFuturePoints, 0.0);
    scene.agents.push_back(std::move(a));
  }
  if (rng.bernoulli(0.45)) {  // lead vehicle in the ego lane
    Agent a;
    a.id = next_id++;
    a.cls = AgentClass::Vehicle;
    const double s_lead = std::min(s0 + rng.uniform(18.0, 40.0), lane.length - 5.0);
    const double speed = rng.uniform(2.0, 9.0);
    const Vec2 pos = lane.lane_point(s_lead);
    const double ahead = lane.heading(s_lead);
    const Vec2 vel = Vec2(std::cos(ahead), std::sin(ahead)) * speed;
    a.history = scenegen::constant_speed_track(pos, vel, kHistoryPoints, -(kHistoryPoints - 1) * kDt);
    a.future = scenegen::constant_speed_track(pos + vel * kDt, vel, kFuturePoints, 0.0);
    scene.agents.push_back(std::move(a));
  }
  // queued vehicle near a stop/yield zone so right-of-way conflicts occur
  for (const ZoneMeta& meta : zone_meta) {
    if (!meta.yield_kind || !rng.bernoulli(0.6)) continue;
    Agent a;
    a.id = next_id++;
    a.cls = AgentClass::Vehicle;
    const double s_q = meta.s - rng.uniform(0.0, 6.0);
    const double speed = rng.uniform(0.3, 1.5);
    const Vec2 pos = lane.road_point(s_q, -lane.lane_offset);
    const double back_heading = lane.heading(s_q) + std::numbers::pi;
    const Vec2 vel = Vec2(std::cos(back_heading), std::sin(back_heading)) * speed;
    a.history = scenegen::constant_speed_track(pos, vel, kHistoryPoints, -(kHistoryPoints - 1) * kDt);
    a.future = scenegen::constant_speed_track(pos + vel * kDt, vel, kFuturePoints, 0.0);
    scene.agents.push_back(std::move(a));
  }
  if (has_cross && rng.bernoulli(0.5)) {  // vehicle approaching on the cross street
    Agent a;
    a.id = next_id++;
    a.cls = AgentClass::Vehicle;
    const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
    const double offset = rng.uniform(12.0, 30.0);
    const double speed = rng.uniform(2.0, 5.0);
    const Vec2 pos = cross_center + cross_dir * (side * offset);
    const Vec2 vel = cross_dir * (-side * speed);
    a.history = scenegen::constant_speed_track(pos, vel, kHistoryPoints, -(kHistoryPoints - 1) * kDt);
    a.future = scenegen::constant_speed_track(pos + vel * kDt, vel, kFuturePoints, 0.0);
    scene.agents.push_back(std::move(a));
  }
  for (std::size_t c = 0; c < scene.crossings.size(); ++c) {  // pedestrians at active crossings
    if (!scene.crossings[c].active || !rng.bernoulli(0.8)) continue;
    Agent a;
    a.id = next_id++;
    a.cls = AgentClass::Pedestrian;
    const double s_c = crossing_s.empty() ? place_lo : crossing_s[std::min(c, crossing_s.size() - 1)];
    const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
    const Vec2 pos = lane.road_point(s_c + kCrossingDepth / 2.0, side * (kRoadWidth / 2.0 + 0.8));
    const double h = lane.heading(s_c);
    const Vec2 right{std::sin(h), -std::cos(h)};
    const Vec2 vel = right * (-side * 1.2);
    a.history = scenegen::constant_speed_track(pos, vel, kHistoryPoints, -(kHistoryPoints - 1) * kDt);
    a.future = scenegen::constant_speed_track(pos + vel * kDt, vel, kFuturePoints, 0.0);
    scene.agents.push_back(std::move(a));
  }

  // ground-truth ego future: aim for the target compliance label and verify
  // against the actual rule semantics
  const bool want_compliant = rng.bernoulli(profile.compliance_rate);
  const auto rules = default_rules();
  auto complies = [&](const Trajectory& t) {
    for (const NamedRule& r : rules) {
      if (!evaluate(r.expr, scene, t)) return false;
    }
    return true;
  };

  // nearest rule blocker ahead of the ego along the lane
  double s_block = std::numeric_limits<double>::infinity();
  for (const ZoneMeta& meta : zone_meta) {
    const bool conflict =
        meta.yield_kind &&
        ruledsl::agent_within(scene, scene.stop_zones[meta.index].polygon, kDefaultConflictRadius);
    if (meta.blocking_red || conflict) s_block = std::min(s_block, meta.s);
  }
  for (double s_c : crossing_s) s_block = std::min(s_block, s_c);

  Trajectory chosen;
  for (int attempt = 0; attempt < 12; ++attempt) {
    Rng sub(substream(seed, 0xF007, static_cast<std::uint64_t>(attempt)));
    double v1 = std::clamp(v0 * sub.uniform(0.85, 1.15), 1.0, 13.0);
    const double wobble_amp = sub.uniform(0.0, 0.45);
    const double wobble_phase = sub.uniform(0.0, 2.0 * std::numbers::pi);
    Trajectory cand;
    cand.frame = Frame::Global;

    const bool try_violate = !want_compliant;
    const bool blocker_reachable = std::isfinite(s_block) && s_block - s0 < 6.0 * 12.5;
    if (!try_violate) {
      const double s_cap = lane.length - 5.0;
      v1 = std::min(v1, std::max((s_cap - s0) / 6.0, 0.5));
      const bool must_stop = std::isfinite(s_block) && s_block - 2.5 < s0 + 6.0 * v1;
      for (int i = 1; i <= kFuturePoints; ++i) {
        const double t = i * kDt;
        double s;
        if (must_stop) {
          const double travel = std::max(s_block - 2.5 - s0, 0.5);
          const double frac = 1.0 - (1.0 - t / 6.0) * (1.0 - t / 6.0);
          s = s0 + travel * frac;
        } else {
          s = s0 + v1 * t;
        }
        const double wobble = wobble_amp * std::sin(2.0 * std::numbers::pi * t / 6.0 + wobble_phase);
        cand.points.push_back(lane.lane_point(s, wobble));
      }
    } else if (blocker_reachable && attempt % 2 == 0) {
      // run straight through the blocking zone
      const double v_run = std::clamp((s_block + 8.0 - s0) / 6.0, 1.5, 13.0);
      for (int i = 1; i <= kFuturePoints; ++i) {
        cand.points.push_back(lane.lane_point(s0 + v_run * i * kDt));
      }
    } else {
      // veer off the drivable corridor
      const double dir_sign = sub.bernoulli(0.5) ? 1.0 : -1.0;
      const double accel = sub.uniform(0.5, 0.9);
      for (int i = 1; i <= kFuturePoints; ++i) {
        const double t = i * kDt;
        cand.points.push_back(lane.lane_point(s0 + v1 * t, dir_sign * 0.5 * accel * t * t));
      }
    }

    chosen = cand;
    if (complies(cand) == want_compliant) break;
  }

  ego.future = chosen;
  scene.agents.insert(scene.agents.begin(), std::move(ego));
  return scene;
}

inline Sample make_sample(const Scene& scene, const EncoderInputConfig& cfg) {
  const Agent& ego = scene.ego();
  Sample s;
  s.scene = scene;
  s.ego_history = to_local(ego.history, scene.ego_pose);
  s.gt_future = to_local(ego.future, scene.ego_pose);
  s.features = encode_features(s, scene, cfg);
  return s;
}

inline Dataset generate_dataset(const RegionProfile& profile, int n, std::uint64_t seed,
                                const EncoderInputConfig& cfg = {}) {
  Dataset ds;
  ds.feature_dim = feature_dim(cfg);
  ds.num_rays = cfg.num_rays;
  ds.ray_clamp = cfg.ray_clamp;
  ds.samples.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Scene scene = generate_scene(profile, substream(seed, static_cast<std::uint64_t>(i)));
    ds.samples.push_back(make_sample(scene, cfg));
  }
  return ds;
}

}  // namespace anchorcast
