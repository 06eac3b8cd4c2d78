#include <catch2/catch_amalgamated.hpp>

#include "anchorcast/rng.hpp"
#include "anchorcast/rules.hpp"
#include "anchorcast/scene_gen.hpp"

using namespace anchorcast;

namespace {

// axis-aligned corridor scene for hand-built cases
Scene corridor_scene() {
  Scene s;
  s.drivable.push_back({{0, -3.5}, {100, -3.5}, {100, 3.5}, {0, 3.5}});
  s.ego_id = 0;
  Agent ego;
  ego.id = 0;
  ego.history.frame = Frame::Global;
  ego.history.points = {{8, 0}, {9, 0}, {10, 0}};
  ego.future.frame = Frame::Global;
  for (int i = 1; i <= 12; ++i) ego.future.points.push_back({10.0 + i, 0.0});
  s.agents.push_back(ego);
  s.ego_pose = {{10, 0}, 0.0};
  s.region = "hand";
  return s;
}

Trajectory straight_global(double x0, double y, double step) {
  Trajectory t;
  t.frame = Frame::Global;
  for (int i = 1; i <= 12; ++i) t.points.push_back({x0 + step * i, y});
  return t;
}

RuleExpr random_rule(Rng& rng, int depth) {
  RuleExpr e;
  const int pick = depth <= 0 ? rng.uniform_int(4) : rng.uniform_int(7);
  switch (pick) {
    case 0: e.node = RuleNode::WithinDrivable; break;
    case 1: e.node = RuleNode::PedPriority; break;
    case 2: {
      e.node = RuleNode::NoCross;
      e.target = static_cast<CrossTarget>(rng.uniform_int(4));
      e.cond = static_cast<ZoneCond>(rng.uniform_int(4));
      break;
    }
    case 3: {
      e.node = RuleNode::YieldAt;
      const int nk = 1 + rng.uniform_int(3);
      for (int i = 0; i < nk; ++i) e.kinds.push_back(static_cast<ZoneKind>(rng.uniform_int(3)));
      e.radius = 0.5 + 30.0 * rng.u01();
      break;
    }
    case 4:
      e.node = RuleNode::Not;
      e.children.push_back(random_rule(rng, depth - 1));
      break;
    default:
      e.node = pick == 5 ? RuleNode::And : RuleNode::Or;
      e.children.push_back(random_rule(rng, depth - 1));
      e.children.push_back(random_rule(rng, depth - 1));
      break;
  }
  return e;
}

}  // namespace

TEST_CASE("parse simple atoms") {
  const auto e = parse_rule("no_cross(traffic_light, signal_red)");
  REQUIRE(e.node == RuleNode::NoCross);
  CHECK(e.target == CrossTarget::TrafficLight);
  CHECK(e.cond == ZoneCond::SignalRed);

  CHECK(parse_rule("within_drivable").node == RuleNode::WithinDrivable);
  CHECK(parse_rule("ped_priority").node == RuleNode::PedPriority);

  const auto y = parse_rule("yield_at(stop_sign|yield, 15)");
  REQUIRE(y.node == RuleNode::YieldAt);
  CHECK(y.kinds == std::vector<ZoneKind>{ZoneKind::StopSign, ZoneKind::Yield});
  CHECK(y.radius == 15.0);
}

TEST_CASE("parser reports 1-based byte offsets") {
  try {
    parse_rule("within_drivable and");
    FAIL("expected parse error");
  } catch (const RuleParseError& e) {
    CHECK(e.offset == 20);
  }
}

TEST_CASE("parser rejects bad input") {
  CHECK_THROWS_AS(parse_rule("fly_safely"), RuleParseError);
  CHECK_THROWS_AS(parse_rule("no_cross(runway, always)"), RuleParseError);
  CHECK_THROWS_AS(parse_rule("yield_at(yield, -3)"), RuleParseError);
  CHECK_THROWS_AS(parse_rule("yield_at(yield, 0)"), RuleParseError);
  CHECK_THROWS_AS(parse_rule("within_drivable)"), RuleParseError);
  CHECK_THROWS_AS(parse_rule(""), RuleParseError);
}

TEST_CASE("whitespace-insensitive, case-sensitive") {
  CHECK(parse_rule("  no_cross ( traffic_light ,  signal_red )  ") ==
        parse_rule("no_cross(traffic_light,signal_red)"));
  CHECK_THROWS_AS(parse_rule("Within_Drivable"), RuleParseError);
}

TEST_CASE("left-associative connectives without precedence") {
  const auto e = parse_rule("within_drivable and ped_priority or within_drivable");
  REQUIRE(e.node == RuleNode::Or);
  CHECK(e.children[0].node == RuleNode::And);
  CHECK(e.children[1].node == RuleNode::WithinDrivable);

  const auto f = parse_rule("within_drivable or ped_priority and within_drivable");
  REQUIRE(f.node == RuleNode::And);
  CHECK(f.children[0].node == RuleNode::Or);
}

TEST_CASE("pretty-print round-trips random rules") {
  Rng rng(42);
  for (int i = 0; i < 200; ++i) {
    const RuleExpr e = random_rule(rng, 3);
    const std::string text = pretty_print(e);
    INFO(text);
    CHECK(parse_rule(text) == e);
  }
}

TEST_CASE("within_drivable semantics") {
  Scene s = corridor_scene();
  CHECK(evaluate(parse_rule("within_drivable"), s, straight_global(10, 0, 1)));
  CHECK_FALSE(evaluate(parse_rule("within_drivable"), s, straight_global(10, 10, 1)));
  // boundary point counts as inside
  CHECK(evaluate(parse_rule("within_drivable"), s, straight_global(10, 3.5, 1)));
}

TEST_CASE("no_cross stop-at-red semantics") {
  Scene s = corridor_scene();
  StopZone z;
  z.polygon = {{20, -4}, {23, -4}, {23, 4}, {20, 4}};
  z.kind = ZoneKind::TrafficLight;
  z.signal = SignalState::Red;
  s.stop_zones.push_back(z);

  const auto rule = parse_rule("no_cross(traffic_light, signal_red)");
  CHECK_FALSE(evaluate(rule, s, straight_global(10, 0, 1.5)));  // reaches x=28
  CHECK(evaluate(rule, s, straight_global(10, 0, 0.5)));        // stops at x=16

  s.stop_zones[0].signal = SignalState::Green;
  CHECK(evaluate(rule, s, straight_global(10, 0, 1.5)));
  // `always` prohibits entry regardless of the signal
  CHECK_FALSE(evaluate(parse_rule("no_cross(traffic_light, always)"), s, straight_global(10, 0, 1.5)));
}

TEST_CASE("yield_at semantics") {
  Scene s = corridor_scene();
  StopZone z;
  z.polygon = {{20, -4}, {23, -4}, {23, 4}, {20, 4}};
  z.kind = ZoneKind::Yield;
  z.signal = SignalState::NotApplicable;
  s.stop_zones.push_back(z);

  const auto rule = parse_rule("yield_at(stop_sign|yield, 15)");
  // no conflicting agent: entering is fine
  CHECK(evaluate(rule, s, straight_global(10, 0, 1.5)));

  Agent other;
  other.id = 1;
  other.history.frame = Frame::Global;
  other.history.points = {{30, 2}, {29, 2}, {28, 2}};  // 5 m from the zone
  other.future = straight_global(28, 2, -1);
  s.agents.push_back(other);
  CHECK_FALSE(evaluate(rule, s, straight_global(10, 0, 1.5)));
  // not entering the zone is compliant even with the conflict
  CHECK(evaluate(rule, s, straight_global(10, 0, 0.5)));
  // radius short enough to exclude the agent
  CHECK(evaluate(parse_rule("yield_at(yield, 2)"), s, straight_global(10, 0, 1.5)));
}

TEST_CASE("ped_priority equals no_cross(crossing, crossing_active)") {
  Scene s = corridor_scene();
  Crossing c;
  c.polygon = {{18, -5}, {20, -5}, {20, 5}, {18, 5}};
  c.active = true;
  s.crossings.push_back(c);

  CHECK_FALSE(evaluate(parse_rule("ped_priority"), s, straight_global(10, 0, 1)));
  CHECK_FALSE(evaluate(parse_rule("no_cross(crossing, crossing_active)"), s, straight_global(10, 0, 1)));
  s.crossings[0].active = false;
  CHECK(evaluate(parse_rule("ped_priority"), s, straight_global(10, 0, 1)));
  CHECK(evaluate(parse_rule("no_cross(crossing, crossing_active)"), s, straight_global(10, 0, 1)));
}

TEST_CASE("composite rules follow boolean semantics") {
  Scene s = corridor_scene();
  Crossing c;
  c.polygon = {{18, -5}, {20, -5}, {20, 5}, {18, 5}};
  c.active = true;
  s.crossings.push_back(c);

  const auto composite = parse_rule("within_drivable and ped_priority");
  for (double step : {0.4, 0.8, 1.2}) {
    const auto traj = straight_global(10, 0, step);
    const bool a = evaluate(parse_rule("within_drivable"), s, traj);
    const bool b = evaluate(parse_rule("ped_priority"), s, traj);
    CHECK(evaluate(composite, s, traj) == (a && b));
  }
  CHECK(evaluate(parse_rule("not ped_priority"), s, straight_global(10, 0, 1)));
}

TEST_CASE("rigid-motion equivariance of compliance bits") {
  const RegionProfile profile = grid_right_profile();
  const auto rules = default_rules();
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    Scene scene = generate_scene(profile, 1000 + static_cast<std::uint64_t>(trial));
    const Pose2 motion{{rng.uniform(-200, 200), rng.uniform(-200, 200)}, rng.uniform(-3, 3)};
    auto move_pts = [&](std::vector<Vec2>& pts) {
      for (Vec2& p : pts) p = p.rotated(motion.rotation) + motion.translation;
    };
    Scene moved = scene;
    for (Polygon& poly : moved.drivable) move_pts(poly);
    for (StopZone& z : moved.stop_zones) move_pts(z.polygon);
    for (Crossing& c : moved.crossings) move_pts(c.polygon);
    for (Agent& a : moved.agents) {
      move_pts(a.history.points);
      move_pts(a.future.points);
    }
    moved.ego_pose.translation =
        moved.ego_pose.translation.rotated(motion.rotation) + motion.translation;
    moved.ego_pose.rotation += motion.rotation;

    const Trajectory ego_future = scene.ego().future;
    Trajectory moved_future = ego_future;
    move_pts(moved_future.points);
    for (const NamedRule& r : rules) {
      CHECK(evaluate(r.expr, scene, ego_future) == evaluate(r.expr, moved, moved_future));
    }
  }
}

TEST_CASE("rule file parsing") {
  std::istringstream src(
      "# comment line\n"
      "drivable: within_drivable\n"
      "\n"
      "stop_red: no_cross(traffic_light, signal_red)  # trailing comment\n");
  const auto rules = parse_rule_lines(src);
  REQUIRE(rules.size() == 2);
  CHECK(rules[0].name == "drivable");
  CHECK(rules[1].name == "stop_red");
  CHECK(rules[1].expr.node == RuleNode::NoCross);
}

TEST_CASE("label_dataset matches per-cell evaluation and unified is the AND") {
  const EncoderInputConfig cfg;
  Dataset ds = generate_dataset(grid_right_profile(), 20, 555, cfg);

  // small anchor set from the dataset's own futures
  std::vector<Trajectory> futures;
  for (const Sample& s : ds.samples) futures.push_back(s.gt_future);
  const AnchorSet anchors = build_cover_set(futures, 8.0);
  REQUIRE(anchors.k() >= 2);

  const auto rules = default_rules();
  const auto per_rule = label_dataset(rules, ds, anchors, LabelMode::PerRule);
  const auto unified = label_dataset(rules, ds, anchors, LabelMode::Unified);
  REQUIRE(per_rule.size() == rules.size());
  REQUIRE(unified.size() == 1);

  for (int i = 0; i < static_cast<int>(ds.samples.size()); ++i) {
    const Sample& s = ds.samples[static_cast<std::size_t>(i)];
    for (int k = 0; k < anchors.k(); ++k) {
      const auto global = to_global(anchors.anchors[static_cast<std::size_t>(k)], s.scene.ego_pose);
      bool all = true;
      for (std::size_t r = 0; r < rules.size(); ++r) {
        const bool direct = evaluate(rules[r].expr, s.scene, global);
        CHECK(per_rule[r].get(i, k) == direct);
        all = all && direct;
      }
      CHECK(unified[0].get(i, k) == all);
      // monotone AND: unified implies each per-rule entry
      if (unified[0].get(i, k)) {
        for (std::size_t r = 0; r < rules.size(); ++r) CHECK(per_rule[r].get(i, k));
      }
    }
  }

  SECTION("single rule: per-rule equals unified") {
    const std::vector<NamedRule> one{rules[0]};
    const auto a = label_dataset(one, ds, anchors, LabelMode::PerRule);
    const auto b = label_dataset(one, ds, anchors, LabelMode::Unified);
    CHECK(a[0].bits == b[0].bits);
  }

  SECTION("vacuous compliance without stop zones or crossings") {
    Dataset bare = ds;
    for (Sample& s : bare.samples) {
      s.scene.stop_zones.clear();
      s.scene.crossings.clear();
    }
    const std::vector<NamedRule> stops{rules[1], rules[2], rules[3]};
    for (const auto& m : label_dataset(stops, bare, anchors, LabelMode::PerRule)) {
      for (int i = 0; i < m.n; ++i) {
        for (int k = 0; k < m.k; ++k) CHECK(m.get(i, k));
      }
    }
  }

  SECTION("compliance matrix round-trip") {
    save_compliance(per_rule[0], "/tmp/anchorcast_test_matrix.bin");
    const auto loaded = load_compliance("/tmp/anchorcast_test_matrix.bin");
    CHECK(loaded == per_rule[0]);
  }

  SECTION("anchor hash mismatch is rejected") {
    Dataset bound = ds;
    bound.anchor_hash = "deadbeefdeadbeef";
    CHECK_THROWS(label_dataset(rules, bound, anchors, LabelMode::Unified));
  }
}
