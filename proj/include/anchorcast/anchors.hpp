#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "anchorcast/hash.hpp"
#include "anchorcast/scene.hpp"
#include "anchorcast/trajectory.hpp"

namespace anchorcast {

struct AnchorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fixed set of candidate futures; classes of the output space.
struct AnchorSet {
  std::vector<Trajectory> anchors;  // EgoLocal, kFuturePoints each
  double epsilon = 0.0;             // coverage radius, max-pointwise metric
  std::string hash;                 // content digest

  int k() const { return static_cast<int>(anchors.size()); }
};

inline std::string anchor_set_hash(const std::vector<Trajectory>& anchors, double epsilon) {
  Fnv1a h;
  h.update_double(epsilon);
  h.update_u64(anchors.size());
  for (const Trajectory& t : anchors) {
    for (const Vec2& p : t.points) {
      h.update_double(p.x);
      h.update_double(p.y);
    }
  }
  return h.hex();
}

// Greedy max-coverage: repeatedly select the candidate covering the most
// still-uncovered futures (cover = max pointwise distance <= epsilon), ties
// to the lowest candidate index, until everything is covered.
inline AnchorSet build_cover_set(const std::vector<Trajectory>& futures, double epsilon) {
  if (futures.empty()) throw AnchorError("cannot build an anchor set from zero futures");
  if (epsilon <= 0.0) throw AnchorError("coverage radius must be positive");
  const std::size_t n = futures.size();
  for (const Trajectory& t : futures) {
    if (t.frame != Frame::EgoLocal || t.points.size() != kFuturePoints) {
      throw AnchorError("anchor candidates must be ego-local with the full horizon");
    }
  }

  const std::size_t words = (n + 63) / 64;
  std::vector<std::uint64_t> cover(n * words, 0);
  auto set_bit = [&](std::size_t i, std::size_t j) {
    cover[i * words + j / 64] |= (std::uint64_t{1} << (j % 64));
  };
  // symmetric pairwise coverage with early exit on the point loop
  for (std::size_t i = 0; i < n; ++i) {
    set_bit(i, i);
    const auto& a = futures[i].points;
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& b = futures[j].points;
      bool covered = true;
      for (int p = 0; p < kFuturePoints; ++p) {
        if ((a[static_cast<std::size_t>(p)] - b[static_cast<std::size_t>(p)]).squared_norm() >
            epsilon * epsilon) {
          covered = false;
          break;
        }
      }
      if (covered) {
        set_bit(i, j);
        set_bit(j, i);
      }
    }
  }

  std::vector<std::uint64_t> uncovered(words, ~std::uint64_t{0});
  if (n % 64 != 0) uncovered[words - 1] = (std::uint64_t{1} << (n % 64)) - 1;
  auto uncovered_count = [&] {
    std::size_t c = 0;
    for (auto w : uncovered) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  };

  AnchorSet set;
  set.epsilon = epsilon;
  std::size_t remaining = uncovered_count();
  while (remaining > 0) {
    std::size_t best = 0, best_gain = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t gain = 0;
      const std::uint64_t* row = &cover[i * words];
      for (std::size_t w = 0; w < words; ++w) {
        gain += static_cast<std::size_t>(std::popcount(row[w] & uncovered[w]));
      }
      if (gain > best_gain) {
        best_gain = gain;
        best = i;
      }
    }
    set.anchors.push_back(futures[best]);
    const std::uint64_t* row = &cover[best * words];
    for (std::size_t w = 0; w < words; ++w) uncovered[w] &= ~row[w];
    remaining -= best_gain;
  }
  set.hash = anchor_set_hash(set.anchors, epsilon);
  return set;
}

// Argmin of summed pointwise L2 distance; ties to the lowest index.
inline int nearest_anchor(const Trajectory& future, const AnchorSet& set) {
  if (set.anchors.empty()) throw AnchorError("empty anchor set");
  int best = 0;
  double best_dist = summed_pointwise_distance(future, set.anchors[0]);
  for (int i = 1; i < set.k(); ++i) {
    const double d = summed_pointwise_distance(future, set.anchors[static_cast<std::size_t>(i)]);
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return best;
}

inline void save_anchors(const AnchorSet& set, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw AnchorError("cannot open for write: " + path);
  nlohmann::json header{{"version", 1}, {"epsilon", set.epsilon}, {"k", set.k()}, {"hash", set.hash}};
  os << header.dump() << '\n';
  for (const Trajectory& t : set.anchors) {
    os << jsonio::encode(t.points).dump() << '\n';
  }
  if (!os) throw AnchorError("write failed: " + path);
}

inline AnchorSet load_anchors(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw AnchorError("cannot open for read: " + path);
  std::string line;
  if (!std::getline(is, line)) throw AnchorError("empty anchor file: " + path);
  const auto header = nlohmann::json::parse(line);
  if (header.value("version", -1) != 1) throw AnchorError("anchor file version mismatch");
  AnchorSet set;
  set.epsilon = header.at("epsilon").get<double>();
  set.hash = header.at("hash").get<std::string>();
  const int k = header.at("k").get<int>();
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    Trajectory t;
    t.frame = Frame::EgoLocal;
    t.points = jsonio::decode_points(nlohmann::json::parse(line));
    set.anchors.push_back(std::move(t));
  }
  if (set.k() != k) throw AnchorError("anchor count mismatch in " + path);
  if (anchor_set_hash(set.anchors, set.epsilon) != set.hash) {
    throw AnchorError("anchor hash mismatch in " + path);
  }
  return set;
}

}  // namespace anchorcast
