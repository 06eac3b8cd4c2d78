#include <catch2/catch_amalgamated.hpp>

#include "anchorcast/geometry.hpp"
#include "anchorcast/rng.hpp"
#include "anchorcast/trajectory.hpp"

using namespace anchorcast;

namespace {

Polygon unit_square() { return {{0, 0}, {1, 0}, {1, 1}, {0, 1}}; }

// Dense-sampling oracle: walk the polyline at 1 cm resolution and test each
// sample for containment. Independent of the segment-intersection path.
bool dense_sampling_intersects(const std::vector<Vec2>& pts, const Polygon& poly) {
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec2 a = pts[i], b = pts[i + 1];
    const double len = (b - a).norm();
    const int steps = std::max(1, static_cast<int>(std::ceil(len / 0.01)));
    for (int s = 0; s <= steps; ++s) {
      const Vec2 p = a + (b - a) * (static_cast<double>(s) / steps);
      if (point_in_polygon(p, poly)) return true;
    }
  }
  return false;
}

double segment_segment_distance(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  if (segments_intersect(p1, p2, q1, q2)) return 0.0;
  return std::min(std::min(point_segment_distance(p1, q1, q2), point_segment_distance(p2, q1, q2)),
                  std::min(point_segment_distance(q1, p1, p2), point_segment_distance(q2, p1, p2)));
}

// Distance to the nearest decision boundary of the configuration. Pairs below
// the threshold are ambiguous for a sampling oracle and get filtered.
double configuration_margin(const std::vector<Vec2>& pts, const Polygon& poly) {
  const std::size_t n = poly.size();
  if (!dense_sampling_intersects(pts, poly)) {
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        margin = std::min(margin, segment_segment_distance(pts[i], pts[i + 1], poly[j],
                                                           poly[(j + 1) % n]));
      }
    }
    return margin;
  }
  // intersecting: margin = deepest incursion of any dense sample
  double depth = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec2 a = pts[i], b = pts[i + 1];
    const double len = (b - a).norm();
    const int steps = std::max(1, static_cast<int>(std::ceil(len / 0.01)));
    for (int s = 0; s <= steps; ++s) {
      const Vec2 p = a + (b - a) * (static_cast<double>(s) / steps);
      if (point_in_polygon(p, poly)) {
        depth = std::max(depth, point_polygon_boundary_distance(p, poly));
      }
    }
  }
  return depth;
}

Polygon random_convex_polygon(Rng& rng) {
  const Vec2 center{rng.uniform(-5, 5), rng.uniform(-5, 5)};
  const double rx = rng.uniform(0.8, 4.0), ry = rng.uniform(0.8, 4.0);
  const int sides = 3 + rng.uniform_int(6);
  std::vector<double> angles;
  for (int i = 0; i < sides; ++i) angles.push_back(rng.uniform(0, 2 * std::numbers::pi));
  std::sort(angles.begin(), angles.end());
  Polygon poly;
  for (double a : angles) poly.push_back(center + Vec2{rx * std::cos(a), ry * std::sin(a)});
  return poly;
}

bool polygon_angles_distinct(const Polygon& poly) {
  for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
    if ((poly[i] - poly[i + 1]).norm() < 1e-3) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("point in polygon basics") {
  const auto sq = unit_square();
  CHECK(point_in_polygon({0.5, 0.5}, sq));
  CHECK(point_in_polygon({0.0, 0.5}, sq));  // boundary-inclusive
  CHECK(point_in_polygon({1.0, 1.0}, sq));  // corner
  CHECK_FALSE(point_in_polygon({1.2, 0.5}, sq));
  CHECK_FALSE(point_in_polygon({-1e-6, 0.5}, sq));
}

TEST_CASE("degenerate polygon is rejected") {
  Polygon line = {{0, 0}, {1, 0}, {2, 0}};
  CHECK_THROWS_AS(point_in_polygon({0.5, 0.1}, line), std::invalid_argument);
  CHECK_THROWS_AS(polyline_intersects_polygon({{0, 0}, {1, 1}}, line), std::invalid_argument);
}

TEST_CASE("segment crossing the unit square") {
  CHECK(polyline_intersects_polygon({{-1.0, 0.5}, {2.0, 0.5}}, unit_square()));
}

TEST_CASE("polyline entirely outside does not intersect") {
  CHECK_FALSE(polyline_intersects_polygon({{-1.0, -0.5}, {2.0, -0.5}, {2.0, -2.0}}, unit_square()));
}

TEST_CASE("polyline fully inside intersects") {
  CHECK(polyline_intersects_polygon({{0.2, 0.2}, {0.8, 0.8}}, unit_square()));
}

TEST_CASE("ray polygon distance") {
  const auto sq = unit_square();
  CHECK(ray_polygon_distance({-2.0, 0.5}, {1.0, 0.0}, sq) == Catch::Approx(2.0));
  CHECK(std::isinf(ray_polygon_distance({-2.0, 0.5}, {-1.0, 0.0}, sq)));
  // from inside, distance to the first edge hit
  CHECK(ray_polygon_distance({0.5, 0.5}, {1.0, 0.0}, sq) == Catch::Approx(0.5));
}

TEST_CASE("point polygon distance") {
  const auto sq = unit_square();
  CHECK(point_polygon_distance({0.5, 0.5}, sq) == 0.0);
  CHECK(point_polygon_distance({3.0, 0.5}, sq) == Catch::Approx(2.0));
}

TEST_CASE("polygon simplicity check") {
  CHECK(polygon_is_simple(unit_square()));
  Polygon bowtie = {{0, 0}, {1, 1}, {1, 0}, {0, 1}};
  CHECK_FALSE(polygon_is_simple(bowtie));
}

TEST_CASE("intersection agrees with dense-sampling oracle on clear margins") {
  Rng rng(20240811);
  int kept = 0;
  int tried = 0;
  while (kept < 200 && tried < 5000) {
    ++tried;
    const Polygon poly = random_convex_polygon(rng);
    if (std::abs(polygon_signed_area(poly)) < 0.5 || !polygon_angles_distinct(poly)) continue;
    std::vector<Vec2> pts;
    Vec2 cur{rng.uniform(-10, 10), rng.uniform(-10, 10)};
    pts.push_back(cur);
    const int segs = 2 + rng.uniform_int(4);
    for (int s = 0; s < segs; ++s) {
      cur = cur + Vec2{rng.uniform(-4, 4), rng.uniform(-4, 4)};
      pts.push_back(cur);
    }
    if (configuration_margin(pts, poly) <= 0.05) continue;
    ++kept;
    CHECK(polyline_intersects_polygon(pts, poly) == dense_sampling_intersects(pts, poly));
  }
  REQUIRE(kept == 200);
}

TEST_CASE("trajectory frame transforms") {
  Trajectory t;
  t.frame = Frame::EgoLocal;
  t.points = {{1.0, 0.0}, {2.0, 1.0}};

  SECTION("identity pose") {
    const Pose2 id{};
    const auto g = to_global(t, id);
    CHECK(g.frame == Frame::Global);
    CHECK(g.points == t.points);
  }

  SECTION("quarter turn about the origin") {
    const Pose2 pose{{0.0, 0.0}, std::numbers::pi / 2.0};
    const auto g = to_global(t, pose);
    CHECK(g.points[0].x == Catch::Approx(0.0).margin(1e-12));
    CHECK(g.points[0].y == Catch::Approx(1.0));
  }

  SECTION("random pose round-trip") {
    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
      const Pose2 pose{{rng.uniform(-100, 100), rng.uniform(-100, 100)}, rng.uniform(-6.3, 6.3)};
      Trajectory src;
      src.frame = Frame::EgoLocal;
      for (int p = 0; p < 12; ++p) src.points.push_back({rng.uniform(-50, 50), rng.uniform(-50, 50)});
      const auto back = to_local(to_global(src, pose), pose);
      double err = 0.0;
      for (int p = 0; p < 12; ++p) {
        err = std::max(err, (back.points[static_cast<std::size_t>(p)] -
                             src.points[static_cast<std::size_t>(p)]).norm());
      }
      CHECK(err < 1e-9);
    }
  }
}
