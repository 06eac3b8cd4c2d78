#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "anchorcast/geometry.hpp"

namespace anchorcast {

// Sampling protocol: 2 Hz, 1 s observation window, 6 s prediction horizon.
inline constexpr double kDt = 0.5;
inline constexpr int kHistoryPoints = 3;
inline constexpr int kFuturePoints = 12;

enum class Frame { EgoLocal, Global };

// Fixed-rate 2-D polyline in a declared frame.
struct Trajectory {
  std::vector<Vec2> points;
  Frame frame = Frame::EgoLocal;

  bool operator==(const Trajectory&) const = default;
};

struct Pose2 {
  Vec2 translation;
  double rotation = 0.0;  // radians
};

// Rotate by pose.rotation, then translate.
inline Trajectory to_global(const Trajectory& traj, const Pose2& pose) {
  if (traj.frame != Frame::EgoLocal) {
    throw std::invalid_argument("to_global expects an ego-local trajectory");
  }
  Trajectory out;
  out.frame = Frame::Global;
  out.points.reserve(traj.points.size());
  for (const Vec2& p : traj.points) {
    out.points.push_back(p.rotated(pose.rotation) + pose.translation);
  }
  return out;
}

inline Trajectory to_local(const Trajectory& traj, const Pose2& pose) {
  if (traj.frame != Frame::Global) {
    throw std::invalid_argument("to_local expects a global trajectory");
  }
  Trajectory out;
  out.frame = Frame::EgoLocal;
  out.points.reserve(traj.points.size());
  for (const Vec2& p : traj.points) {
    out.points.push_back((p - pose.translation).rotated(-pose.rotation));
  }
  return out;
}

// Max over timesteps of the pointwise L2 distance (the coverage metric).
inline double max_pointwise_distance(const Trajectory& a, const Trajectory& b) {
  if (a.points.size() != b.points.size()) {
    throw std::invalid_argument("trajectory length mismatch");
  }
  double best = 0.0;
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    best = std::max(best, (a.points[i] - b.points[i]).norm());
  }
  return best;
}

// Sum over timesteps of the pointwise L2 distance (the labeling metric).
inline double summed_pointwise_distance(const Trajectory& a, const Trajectory& b) {
  if (a.points.size() != b.points.size()) {
    throw std::invalid_argument("trajectory length mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    total += (a.points[i] - b.points[i]).norm();
  }
  return total;
}

inline bool all_finite(const Trajectory& t) {
  for (const Vec2& p : t.points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
  }
  return true;
}

}  // namespace anchorcast
