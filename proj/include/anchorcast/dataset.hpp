#pragma once

#include <Eigen/Dense>
#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "anchorcast/hash.hpp"
#include "anchorcast/rng.hpp"
#include "anchorcast/scene.hpp"

namespace anchorcast {

struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct VersionMismatchError : DatasetError {
  using DatasetError::DatasetError;
};
struct ChecksumMismatchError : DatasetError {
  using DatasetError::DatasetError;
};

// One prediction sample; the scene is embedded so records are self-contained.
struct Sample {
  Scene scene;
  Trajectory ego_history;  // EgoLocal, kHistoryPoints
  Trajectory gt_future;    // EgoLocal, kFuturePoints
  Eigen::VectorXd features;
};

struct Dataset {
  double dt = kDt;
  int feature_dim = 0;
  std::string anchor_hash = "0";  // "0" until bound to an anchor set
  int num_rays = 8;
  double ray_clamp = 50.0;
  std::vector<Sample> samples;
};

namespace detail {

// Shortest round-trip decimal form, locale-independent.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string sample_to_line(const Sample& s) {
  nlohmann::json j{{"scene", jsonio::encode(s.scene)},
                   {"history", jsonio::encode(s.ego_history)},
                   {"future", jsonio::encode(s.gt_future)}};
  nlohmann::json feats = nlohmann::json::array();
  for (Eigen::Index i = 0; i < s.features.size(); ++i) feats.push_back(s.features[i]);
  j["features"] = feats;
  return j.dump();
}

inline Sample sample_from_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  Sample s;
  s.scene = jsonio::decode_scene(j.at("scene"));
  s.ego_history = jsonio::decode_trajectory(j.at("history"));
  s.gt_future = jsonio::decode_trajectory(j.at("future"));
  const auto& feats = j.at("features");
  s.features.resize(static_cast<Eigen::Index>(feats.size()));
  for (std::size_t i = 0; i < feats.size(); ++i) {
    s.features[static_cast<Eigen::Index>(i)] = feats[i].get<double>();
  }
  return s;
}

}  // namespace detail

// Line-delimited UTF-8: header record first, then one self-contained sample
// record per line. The checksum covers the sample lines.
inline void save_dataset(const Dataset& ds, const std::string& path) {
  std::vector<std::string> lines;
  lines.reserve(ds.samples.size());
  Fnv1a checksum;
  for (const Sample& s : ds.samples) {
    lines.push_back(detail::sample_to_line(s));
    checksum.update_str(lines.back());
    checksum.update("\n", 1);
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DatasetError("cannot open for write: " + path);
  os << "{\"version\":1,\"dt\":" << detail::format_double(ds.dt)
     << ",\"d\":" << ds.feature_dim << ",\"anchor_hash\":\"" << ds.anchor_hash
     << "\",\"rays\":" << ds.num_rays << ",\"clamp\":" << detail::format_double(ds.ray_clamp)
     << ",\"count\":" << ds.samples.size() << ",\"checksum\":\"" << checksum.hex() << "\"}\n";
  for (const std::string& line : lines) os << line << '\n';
  if (!os) throw DatasetError("write failed: " + path);
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DatasetError("cannot open for read: " + path);
  std::string header_line;
  if (!std::getline(is, header_line)) throw DatasetError("empty dataset file: " + path);
  const auto header = nlohmann::json::parse(header_line);
  if (header.value("version", -1) != 1) {
    throw VersionMismatchError("dataset version mismatch in " + path);
  }
  Dataset ds;
  ds.dt = header.at("dt").get<double>();
  ds.feature_dim = header.at("d").get<int>();
  ds.anchor_hash = header.at("anchor_hash").get<std::string>();
  ds.num_rays = header.value("rays", 8);
  ds.ray_clamp = header.value("clamp", 50.0);
  const auto count = header.at("count").get<std::size_t>();
  const auto expected_checksum = header.at("checksum").get<std::string>();

  Fnv1a checksum;
  std::string line;
  ds.samples.reserve(count);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    checksum.update_str(line);
    checksum.update("\n", 1);
    ds.samples.push_back(detail::sample_from_line(line));
  }
  if (ds.samples.size() != count) {
    throw DatasetError("dataset record count mismatch in " + path);
  }
  if (checksum.hex() != expected_checksum) {
    throw ChecksumMismatchError("dataset checksum mismatch in " + path);
  }
  return ds;
}

struct SplitFractions {
  double train = 0.0;
  double val = 0.0;
  double test = 0.0;
};

// Disjoint, seed-deterministic, stratified by region. Counts are floored per
// region; a strictly positive fraction that ends up empty is an error.
inline std::array<Dataset, 3> split_dataset(const Dataset& ds, const SplitFractions& f,
                                            std::uint64_t seed) {
  if (f.train < 0 || f.val < 0 || f.test < 0 || f.train + f.val + f.test > 1.0 + 1e-12) {
    throw DatasetError("split fractions must be nonnegative and sum to at most 1");
  }
  std::map<std::string, std::vector<std::size_t>> by_region;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    by_region[ds.samples[i].scene.region].push_back(i);
  }
  std::array<std::vector<std::size_t>, 3> picks;
  for (auto& [region, idx] : by_region) {
    Fnv1a region_key;
    region_key.update_str(region);
    Rng rng(substream(seed, region_key.value()));
    rng.shuffle(idx);
    const double fracs[3] = {f.train, f.val, f.test};
    std::size_t cursor = 0;
    for (int s = 0; s < 3; ++s) {
      const auto take = static_cast<std::size_t>(
          std::floor(fracs[s] * static_cast<double>(idx.size()) + 1e-9));
      for (std::size_t t = 0; t < take && cursor < idx.size(); ++t, ++cursor) {
        picks[static_cast<std::size_t>(s)].push_back(idx[cursor]);
      }
    }
  }
  const double fracs[3] = {f.train, f.val, f.test};
  std::array<Dataset, 3> out;
  for (int s = 0; s < 3; ++s) {
    auto& part = out[static_cast<std::size_t>(s)];
    part.dt = ds.dt;
    part.feature_dim = ds.feature_dim;
    part.anchor_hash = ds.anchor_hash;
    part.num_rays = ds.num_rays;
    part.ray_clamp = ds.ray_clamp;
    auto& idx = picks[static_cast<std::size_t>(s)];
    std::sort(idx.begin(), idx.end());  // stable output ordering by sample index
    for (std::size_t i : idx) part.samples.push_back(ds.samples[i]);
    if (fracs[s] > 0.0 && part.samples.empty()) {
      throw DatasetError("split fraction produced an empty subset");
    }
  }
  return out;
}

}  // namespace anchorcast
