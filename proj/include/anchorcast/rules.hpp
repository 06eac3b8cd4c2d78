#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "anchorcast/anchors.hpp"
#include "anchorcast/dataset.hpp"
#include "anchorcast/geometry.hpp"
#include "anchorcast/scene.hpp"
#include "anchorcast/trajectory.hpp"

namespace anchorcast {

// Radius of the conflict test used by the `conflict_present` condition (the
// yield_at atom carries its own explicit radius).
inline constexpr double kDefaultConflictRadius = 15.0;

enum class RuleNode { WithinDrivable, NoCross, YieldAt, PedPriority, And, Or, Not };

// Zone selector for no_cross; crossings are addressable alongside stop zones.
enum class CrossTarget { TrafficLight, StopSign, Yield, Crossing };

enum class ZoneCond { Always, SignalRed, CrossingActive, ConflictPresent };

struct RuleExpr {
  RuleNode node = RuleNode::WithinDrivable;
  CrossTarget target = CrossTarget::TrafficLight;  // NoCross only
  ZoneCond cond = ZoneCond::Always;                // NoCross only
  std::vector<ZoneKind> kinds;                     // YieldAt only
  double radius = 0.0;                             // YieldAt only
  std::vector<RuleExpr> children;                  // And/Or: 2, Not: 1

  bool operator==(const RuleExpr&) const = default;
};

struct NamedRule {
  std::string name;
  RuleExpr expr;
};

// Parse errors carry 1-based byte offsets into the source string.
struct RuleParseError : std::runtime_error {
  RuleParseError(const std::string& msg, std::size_t offset_)
      : std::runtime_error(msg + " at offset " + std::to_string(offset_)), offset(offset_) {}
  std::size_t offset;
};

namespace ruledsl {

// expr  := term (('and'|'or') term)*          -- left-associative, no precedence
// term  := 'not'? (atom | '(' expr ')')
// atom  := 'within_drivable' | 'ped_priority'
//        | 'no_cross' '(' kind ',' cond ')'
//        | 'yield_at' '(' zkind ('|' zkind)* ',' radius ')'
// kind  := 'traffic_light' | 'stop_sign' | 'yield' | 'crossing'
// zkind := 'traffic_light' | 'stop_sign' | 'yield'
// cond  := 'always' | 'signal_red' | 'crossing_active' | 'conflict_present'
class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  RuleExpr parse() {
    RuleExpr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw RuleParseError(msg, pos_ + 1); }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' ||
                                   text_[pos_] == '\n' || text_[pos_] == '\r')) {
      ++pos_;
    }
  }

  static bool ident_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
  }

  std::string_view peek_ident() {
    skip_ws();
    std::size_t end = pos_;
    while (end < text_.size() && ident_char(text_[end])) ++end;
    return text_.substr(pos_, end - pos_);
  }

  bool accept_ident(std::string_view kw) {
    if (peek_ident() == kw) {
      pos_ += kw.size();
      return true;
    }
    return false;
  }

  void expect_char(char c, const char* what) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected ") + what);
    ++pos_;
  }

  RuleExpr parse_expr() {
    RuleExpr left = parse_term();
    for (;;) {
      const bool is_and = peek_ident() == "and";
      const bool is_or = !is_and && peek_ident() == "or";
      if (!is_and && !is_or) break;
      pos_ += is_and ? 3 : 2;
      RuleExpr right = parse_term();
      RuleExpr combined;
      combined.node = is_and ? RuleNode::And : RuleNode::Or;
      combined.children.push_back(std::move(left));
      combined.children.push_back(std::move(right));
      left = std::move(combined);
    }
    return left;
  }

  RuleExpr parse_term() {
    if (accept_ident("not")) {
      RuleExpr e;
      e.node = RuleNode::Not;
      e.children.push_back(parse_primary());
      return e;
    }
    return parse_primary();
  }

  RuleExpr parse_primary() {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      RuleExpr e = parse_expr();
      expect_char(')', "')'");
      return e;
    }
    return parse_atom();
  }

  RuleExpr parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("expected expression");
    RuleExpr e;
    if (accept_ident("within_drivable")) {
      e.node = RuleNode::WithinDrivable;
      return e;
    }
    if (accept_ident("ped_priority")) {
      e.node = RuleNode::PedPriority;
      return e;
    }
    if (accept_ident("no_cross")) {
      e.node = RuleNode::NoCross;
      expect_char('(', "'('");
      e.target = parse_cross_target();
      expect_char(',', "','");
      e.cond = parse_cond();
      expect_char(')', "')'");
      return e;
    }
    if (accept_ident("yield_at")) {
      e.node = RuleNode::YieldAt;
      expect_char('(', "'('");
      e.kinds.push_back(parse_zone_kind());
      skip_ws();
      while (pos_ < text_.size() && text_[pos_] == '|') {
        ++pos_;
        e.kinds.push_back(parse_zone_kind());
        skip_ws();
      }
      expect_char(',', "','");
      e.radius = parse_radius();
      expect_char(')', "')'");
      return e;
    }
    const auto ident = peek_ident();
    if (!ident.empty()) fail("unknown atom '" + std::string(ident) + "'");
    fail("expected expression");
  }

  CrossTarget parse_cross_target() {
    if (accept_ident("traffic_light")) return CrossTarget::TrafficLight;
    if (accept_ident("stop_sign")) return CrossTarget::StopSign;
    if (accept_ident("yield")) return CrossTarget::Yield;
    if (accept_ident("crossing")) return CrossTarget::Crossing;
    skip_ws();
    fail("unknown zone kind");
  }

  ZoneKind parse_zone_kind() {
    if (accept_ident("traffic_light")) return ZoneKind::TrafficLight;
    if (accept_ident("stop_sign")) return ZoneKind::StopSign;
    if (accept_ident("yield")) return ZoneKind::Yield;
    skip_ws();
    fail("unknown zone kind");
  }

  ZoneCond parse_cond() {
    if (accept_ident("always")) return ZoneCond::Always;
    if (accept_ident("signal_red")) return ZoneCond::SignalRed;
    if (accept_ident("crossing_active")) return ZoneCond::CrossingActive;
    if (accept_ident("conflict_present")) return ZoneCond::ConflictPresent;
    skip_ws();
    fail("unknown condition");
  }

  double parse_radius() {
    skip_ws();
    const std::size_t start = pos_;
    double value = 0.0;
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc{} || res.ptr == begin) fail("expected radius");
    pos_ = start + static_cast<std::size_t>(res.ptr - begin);
    if (!(value > 0.0)) {
      pos_ = start;
      fail("radius must be positive");
    }
    return value;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace ruledsl

inline RuleExpr parse_rule(std::string_view text) { return ruledsl::Parser(text).parse(); }

namespace ruledsl {

inline std::string format_radius(double r) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), r);
  return std::string(buf, res.ptr);
}

inline const char* target_name(CrossTarget t) {
  switch (t) {
    case CrossTarget::TrafficLight: return "traffic_light";
    case CrossTarget::StopSign: return "stop_sign";
    case CrossTarget::Yield: return "yield";
    case CrossTarget::Crossing: return "crossing";
  }
  return "traffic_light";
}

inline const char* cond_name(ZoneCond c) {
  switch (c) {
    case ZoneCond::Always: return "always";
    case ZoneCond::SignalRed: return "signal_red";
    case ZoneCond::CrossingActive: return "crossing_active";
    case ZoneCond::ConflictPresent: return "conflict_present";
  }
  return "always";
}

inline const char* kind_name(ZoneKind k) {
  switch (k) {
    case ZoneKind::TrafficLight: return "traffic_light";
    case ZoneKind::StopSign: return "stop_sign";
    case ZoneKind::Yield: return "yield";
  }
  return "traffic_light";
}

inline bool is_connective(const RuleExpr& e) {
  return e.node == RuleNode::And || e.node == RuleNode::Or || e.node == RuleNode::Not;
}

inline std::string print(const RuleExpr& e) {
  switch (e.node) {
    case RuleNode::WithinDrivable:
      return "within_drivable";
    case RuleNode::PedPriority:
      return "ped_priority";
    case RuleNode::NoCross:
      return std::string("no_cross(") + target_name(e.target) + ", " + cond_name(e.cond) + ")";
    case RuleNode::YieldAt: {
      std::string s = "yield_at(";
      for (std::size_t i = 0; i < e.kinds.size(); ++i) {
        if (i > 0) s += "|";
        s += kind_name(e.kinds[i]);
      }
      s += ", " + format_radius(e.radius) + ")";
      return s;
    }
    case RuleNode::Not: {
      const RuleExpr& c = e.children.at(0);
      return is_connective(c) ? "not (" + print(c) + ")" : "not " + print(c);
    }
    case RuleNode::And:
    case RuleNode::Or: {
      // left-associative grammar: the left child prints flat, the right child
      // needs parentheses whenever it is itself a connective chain
      const RuleExpr& l = e.children.at(0);
      const RuleExpr& r = e.children.at(1);
      const std::string op = e.node == RuleNode::And ? " and " : " or ";
      // left child prints flat (left-fold reconstructs the chain); a
      // connective right child needs parentheses
      const std::string rs = (r.node == RuleNode::And || r.node == RuleNode::Or)
                                 ? "(" + print(r) + ")"
                                 : print(r);
      return print(l) + op + rs;
    }
  }
  return {};
}

}  // namespace ruledsl

inline std::string pretty_print(const RuleExpr& e) { return ruledsl::print(e); }

// --- Evaluation ---------------------------------------------------------

inline bool trajectory_intersects_polygon(const Trajectory& traj, const Polygon& poly) {
  if (traj.frame != Frame::Global) {
    throw std::invalid_argument("intersection test expects a global-frame trajectory");
  }
  return polyline_intersects_polygon(traj.points, poly);
}

namespace ruledsl {

inline bool agent_within(const Scene& scene, const Polygon& zone, double radius) {
  for (const Agent& a : scene.agents) {
    if (a.id == scene.ego_id) continue;
    const Vec2 current = a.history.points.back();
    if (point_polygon_distance(current, zone) <= radius) return true;
  }
  return false;
}

inline bool zone_condition_holds(const Scene& scene, const Polygon& poly, SignalState signal,
                                 ZoneCond cond) {
  switch (cond) {
    case ZoneCond::Always: return true;
    case ZoneCond::SignalRed: return signal == SignalState::Red;
    case ZoneCond::CrossingActive: return false;  // stop zones have no active flag
    case ZoneCond::ConflictPresent: return agent_within(scene, poly, kDefaultConflictRadius);
  }
  return false;
}

inline bool eval_no_cross(const RuleExpr& e, const Scene& scene, const Trajectory& traj) {
  if (e.target == CrossTarget::Crossing) {
    for (const Crossing& c : scene.crossings) {
      bool holds = false;
      switch (e.cond) {
        case ZoneCond::Always: holds = true; break;
        case ZoneCond::CrossingActive: holds = c.active; break;
        case ZoneCond::SignalRed: holds = false; break;
        case ZoneCond::ConflictPresent:
          holds = agent_within(scene, c.polygon, kDefaultConflictRadius);
          break;
      }
      if (holds && trajectory_intersects_polygon(traj, c.polygon)) return false;
    }
    return true;
  }
  const ZoneKind want = e.target == CrossTarget::TrafficLight ? ZoneKind::TrafficLight
                        : e.target == CrossTarget::StopSign   ? ZoneKind::StopSign
                                                              : ZoneKind::Yield;
  for (const StopZone& z : scene.stop_zones) {
    if (z.kind != want) continue;
    if (zone_condition_holds(scene, z.polygon, z.signal, e.cond) &&
        trajectory_intersects_polygon(traj, z.polygon)) {
      return false;
    }
  }
  return true;
}

inline bool eval_yield_at(const RuleExpr& e, const Scene& scene, const Trajectory& traj) {
  for (const StopZone& z : scene.stop_zones) {
    bool wanted = false;
    for (ZoneKind k : e.kinds) wanted = wanted || (z.kind == k);
    if (!wanted) continue;
    if (trajectory_intersects_polygon(traj, z.polygon) &&
        agent_within(scene, z.polygon, e.radius)) {
      return false;
    }
  }
  return true;
}

}  // namespace ruledsl

// True iff the trajectory complies with the rule in the given scene. The
// trajectory must already be in the global frame.
inline bool evaluate(const RuleExpr& rule, const Scene& scene, const Trajectory& anchor_global) {
  switch (rule.node) {
    case RuleNode::WithinDrivable: {
      for (const Vec2& p : anchor_global.points) {
        bool inside = false;
        for (const Polygon& poly : scene.drivable) {
          if (point_in_polygon(p, poly)) {
            inside = true;
            break;
          }
        }
        if (!inside) return false;
      }
      return true;
    }
    case RuleNode::NoCross:
      return ruledsl::eval_no_cross(rule, scene, anchor_global);
    case RuleNode::YieldAt:
      return ruledsl::eval_yield_at(rule, scene, anchor_global);
    case RuleNode::PedPriority: {
      RuleExpr equiv;
      equiv.node = RuleNode::NoCross;
      equiv.target = CrossTarget::Crossing;
      equiv.cond = ZoneCond::CrossingActive;
      return ruledsl::eval_no_cross(equiv, scene, anchor_global);
    }
    case RuleNode::And:
      return evaluate(rule.children.at(0), scene, anchor_global) &&
             evaluate(rule.children.at(1), scene, anchor_global);
    case RuleNode::Or:
      return evaluate(rule.children.at(0), scene, anchor_global) ||
             evaluate(rule.children.at(1), scene, anchor_global);
    case RuleNode::Not:
      return !evaluate(rule.children.at(0), scene, anchor_global);
  }
  return false;
}

// --- Rule files -----------------------------------------------------------

// One rule per line, `name: <expr>`; '#' starts a comment.
inline std::vector<NamedRule> parse_rule_lines(std::istream& is) {
  std::vector<NamedRule> rules;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.resize(hash_pos);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      throw std::invalid_argument("rule line missing 'name:' prefix: " + line);
    }
    NamedRule r;
    r.name = line.substr(first, colon - first);
    while (!r.name.empty() && (r.name.back() == ' ' || r.name.back() == '\t')) r.name.pop_back();
    r.expr = parse_rule(std::string_view(line).substr(colon + 1));
    rules.push_back(std::move(r));
  }
  return rules;
}

inline std::vector<NamedRule> load_rules(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open rule file: " + path);
  return parse_rule_lines(is);
}

// The built-in rule set: one drivability rule plus the stop-related set.
inline std::vector<NamedRule> default_rules() {
  std::istringstream src(
      "drivable: within_drivable\n"
      "stop_red: no_cross(traffic_light, signal_red)\n"
      "right_of_way: yield_at(stop_sign|yield, 15)\n"
      "ped_priority: ped_priority\n");
  return parse_rule_lines(src);
}

// --- Compliance matrices ---------------------------------------------------

struct ComplianceMatrix {
  std::string rule_id;
  int n = 0;
  int k = 0;
  std::string anchor_hash;
  std::vector<std::uint64_t> bits;  // row-major, ceil(k/64) words per row

  std::size_t words_per_row() const { return (static_cast<std::size_t>(k) + 63) / 64; }

  void resize(int n_, int k_) {
    n = n_;
    k = k_;
    bits.assign(static_cast<std::size_t>(n) * words_per_row(), 0);
  }

  bool get(int i, int j) const {
    const std::size_t w = static_cast<std::size_t>(i) * words_per_row() +
                          static_cast<std::size_t>(j) / 64;
    return (bits[w] >> (static_cast<std::size_t>(j) % 64)) & 1;
  }

  void set(int i, int j, bool v) {
    const std::size_t w = static_cast<std::size_t>(i) * words_per_row() +
                          static_cast<std::size_t>(j) / 64;
    const std::uint64_t mask = std::uint64_t{1} << (static_cast<std::size_t>(j) % 64);
    if (v) {
      bits[w] |= mask;
    } else {
      bits[w] &= ~mask;
    }
  }

  bool operator==(const ComplianceMatrix&) const = default;
};

enum class LabelMode { PerRule, Unified };

// Entry (i, k) = evaluate(rule, scene_i, anchor_k transformed by ego_pose_i).
// PerRule yields one matrix per rule, Unified a single AND over all rules.
inline std::vector<ComplianceMatrix> label_dataset(const std::vector<NamedRule>& rules,
                                                   const Dataset& dataset,
                                                   const AnchorSet& anchors, LabelMode mode) {
  if (rules.empty()) throw std::invalid_argument("no rules to label with");
  if (dataset.anchor_hash != "0" && dataset.anchor_hash != anchors.hash) {
    throw std::invalid_argument("dataset was bound to a different anchor set");
  }
  const int n = static_cast<int>(dataset.samples.size());
  const int k = anchors.k();

  std::vector<ComplianceMatrix> out;
  const std::size_t count = mode == LabelMode::PerRule ? rules.size() : 1;
  out.resize(count);
  for (std::size_t r = 0; r < count; ++r) {
    out[r].rule_id = mode == LabelMode::PerRule ? rules[r].name : "unified";
    out[r].anchor_hash = anchors.hash;
    out[r].resize(n, k);
  }

  std::vector<Trajectory> global(static_cast<std::size_t>(k));
  for (int i = 0; i < n; ++i) {
    const Sample& s = dataset.samples[static_cast<std::size_t>(i)];
    for (int j = 0; j < k; ++j) {
      global[static_cast<std::size_t>(j)] =
          to_global(anchors.anchors[static_cast<std::size_t>(j)], s.scene.ego_pose);
    }
    if (mode == LabelMode::PerRule) {
      for (std::size_t r = 0; r < rules.size(); ++r) {
        for (int j = 0; j < k; ++j) {
          out[r].set(i, j, evaluate(rules[r].expr, s.scene, global[static_cast<std::size_t>(j)]));
        }
      }
    } else {
      for (int j = 0; j < k; ++j) {
        bool all = true;
        for (const NamedRule& rule : rules) {
          if (!evaluate(rule.expr, s.scene, global[static_cast<std::size_t>(j)])) {
            all = false;
            break;
          }
        }
        out[0].set(i, j, all);
      }
    }
  }
  return out;
}

inline void save_compliance(const ComplianceMatrix& m, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  nlohmann::json header{{"version", 1},
                        {"rule_id", m.rule_id},
                        {"n", m.n},
                        {"k", m.k},
                        {"anchor_hash", m.anchor_hash}};
  os << header.dump() << '\n';
  const std::size_t bytes_per_row = (static_cast<std::size_t>(m.k) + 7) / 8;
  static const char* digits = "0123456789abcdef";
  for (int i = 0; i < m.n; ++i) {
    std::string row(bytes_per_row * 2, '0');
    for (std::size_t b = 0; b < bytes_per_row; ++b) {
      unsigned byte = 0;
      for (std::size_t bit = 0; bit < 8; ++bit) {
        const std::size_t j = b * 8 + bit;
        if (j < static_cast<std::size_t>(m.k) && m.get(i, static_cast<int>(j))) {
          byte |= 1u << bit;
        }
      }
      row[2 * b] = digits[byte >> 4];
      row[2 * b + 1] = digits[byte & 0xf];
    }
    os << row << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline ComplianceMatrix load_compliance(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for read: " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty compliance file: " + path);
  const auto header = nlohmann::json::parse(line);
  if (header.value("version", -1) != 1) throw std::runtime_error("compliance version mismatch");
  ComplianceMatrix m;
  m.rule_id = header.at("rule_id").get<std::string>();
  m.anchor_hash = header.at("anchor_hash").get<std::string>();
  m.resize(header.at("n").get<int>(), header.at("k").get<int>());
  auto nibble = [](char c) -> unsigned {
    if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
    throw std::runtime_error("bad hex digit in compliance row");
  };
  int i = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (i >= m.n) throw std::runtime_error("too many rows in " + path);
    for (int j = 0; j < m.k; ++j) {
      const std::size_t byte_idx = static_cast<std::size_t>(j) / 8;
      const unsigned byte = (nibble(line.at(2 * byte_idx)) << 4) | nibble(line.at(2 * byte_idx + 1));
      m.set(i, j, (byte >> (static_cast<unsigned>(j) % 8)) & 1);
    }
    ++i;
  }
  if (i != m.n) throw std::runtime_error("row count mismatch in " + path);
  return m;
}

}  // namespace anchorcast
