#pragma once

#include <algorithm>
#include <charconv>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "digest.hpp"
#include "error.hpp"

namespace distb {

using SwitchId = std::uint32_t;
using PortId = std::uint32_t;
using Addr = std::uint32_t;

inline std::string addr_to_string(Addr a) {
  return std::to_string(a >> 24) + "." + std::to_string((a >> 16) & 0xff) + "." +
         std::to_string((a >> 8) & 0xff) + "." + std::to_string(a & 0xff);
}

inline std::optional<Addr> parse_addr(std::string_view s) {
  Addr out = 0;
  for (int octet = 0; octet < 4; ++octet) {
    unsigned v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || v > 255 || p == s.data()) return std::nullopt;
    out = (out << 8) | v;
    s.remove_prefix(static_cast<std::size_t>(p - s.data()));
    if (octet < 3) {
      if (s.empty() || s.front() != '.') return std::nullopt;
      s.remove_prefix(1);
    }
  }
  if (!s.empty()) return std::nullopt;
  return out;
}

// Header fields a rule can match on.
struct PacketHeader {
  PortId in_port = 0;
  Addr src = 0;
  Addr dst = 0;
  std::uint8_t proto = 17;
};

struct Match {
  std::optional<PortId> in_port;
  std::optional<Addr> src_addr;
  std::optional<Addr> dst_addr;
  std::optional<std::uint8_t> proto;

  bool matches(const PacketHeader& h) const {
    return (!in_port || *in_port == h.in_port) && (!src_addr || *src_addr == h.src) &&
           (!dst_addr || *dst_addr == h.dst) && (!proto || *proto == h.proto);
  }
  auto operator<=>(const Match&) const = default;
};

struct Action {
  enum class Kind : std::uint8_t { Forward, Drop, Flood, ToController };
  Kind kind = Kind::Drop;
  PortId port = 0;  // meaningful for Forward only

  static Action forward(PortId p) { return {Kind::Forward, p}; }
  static Action drop() { return {Kind::Drop, 0}; }
  static Action flood() { return {Kind::Flood, 0}; }
  static Action to_controller() { return {Kind::ToController, 0}; }

  bool operator==(const Action&) const = default;
};

inline std::string to_string(const Action& a) {
  switch (a.kind) {
    case Action::Kind::Forward: return "OUTPUT:" + std::to_string(a.port);
    case Action::Kind::Drop: return "DROP";
    case Action::Kind::Flood: return "OUTPUT:FLOOD";
    case Action::Kind::ToController: return "OUTPUT:CONTROLLER";
  }
  return "?";
}

struct FlowRule {
  SwitchId dpid = 0;
  std::uint16_t priority = 0;
  Match match;
  Action action;
  std::uint64_t version = 0;

  bool operator==(const FlowRule&) const = default;
};

// Canonical JSON. Object keys are emitted in lexicographic order by
// nlohmann::json, and dump() with no indent has no whitespace.
inline nlohmann::json match_to_json(const Match& m) {
  nlohmann::json j = nlohmann::json::object();
  if (m.in_port) j["in_port"] = *m.in_port;
  if (m.src_addr) j["nw_src"] = addr_to_string(*m.src_addr);
  if (m.dst_addr) j["nw_dst"] = addr_to_string(*m.dst_addr);
  if (m.proto) j["nw_proto"] = *m.proto;
  return j;
}

inline nlohmann::json actions_to_json(const Action& a) {
  nlohmann::json arr = nlohmann::json::array();
  // An empty action list is the OpenFlow encoding of drop.
  if (a.kind != Action::Kind::Drop) arr.push_back(to_string(a));
  return arr;
}

inline nlohmann::json rule_to_json(const FlowRule& r) {
  return nlohmann::json{{"actions", actions_to_json(r.action)},
                        {"dpid", r.dpid},
                        {"match", match_to_json(r.match)},
                        {"priority", r.priority},
                        {"version", r.version}};
}

inline std::string canonical_bytes(const Match& m) { return match_to_json(m).dump(); }
inline std::string canonical_bytes(const FlowRule& r) { return rule_to_json(r).dump(); }

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key,
                                     const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(path + "/" + key, "missing required field");
  return *it;
}

template <typename T>
T require_uint(const nlohmann::json& v, const std::string& path, std::uint64_t max) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw ConfigError(path, "expected a non-negative integer");
  }
  auto x = v.get<std::uint64_t>();
  if (x > max) throw ConfigError(path, "value out of range (max " + std::to_string(max) + ")");
  return static_cast<T>(x);
}

inline Addr require_addr(const nlohmann::json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected dotted-quad address string");
  auto a = parse_addr(v.get<std::string>());
  if (!a) throw ConfigError(path, "malformed address '" + v.get<std::string>() + "'");
  return *a;
}

inline Action parse_actions(const nlohmann::json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected an array of actions");
  if (v.empty()) return Action::drop();
  if (v.size() != 1) throw ConfigError(path, "exactly one action is supported");
  const auto& a = v[0];
  if (!a.is_string()) throw ConfigError(path + "/0", "expected action string");
  std::string s = a.get<std::string>();
  if (s == "DROP") return Action::drop();
  if (s == "OUTPUT:FLOOD") return Action::flood();
  if (s == "OUTPUT:CONTROLLER") return Action::to_controller();
  if (s.rfind("OUTPUT:", 0) == 0) {
    PortId port = 0;
    auto tail = std::string_view(s).substr(7);
    auto [p, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), port);
    if (ec == std::errc{} && p == tail.data() + tail.size() && !tail.empty()) {
      return Action::forward(port);
    }
  }
  throw ConfigError(path + "/0", "unknown action '" + s + "'");
}

}  // namespace detail

// Parses one rule object; ConfigError carries a JSON-pointer style path.
inline FlowRule rule_from_json(const nlohmann::json& j, const std::string& path = "") {
  using namespace detail;
  if (!j.is_object()) throw ConfigError(path.empty() ? "/" : path, "expected an object");
  FlowRule r;
  r.dpid = require_uint<SwitchId>(require(j, "dpid", path), path + "/dpid", UINT32_MAX);
  r.priority = require_uint<std::uint16_t>(require(j, "priority", path), path + "/priority", 65535);
  r.action = parse_actions(require(j, "actions", path), path + "/actions");
  if (auto it = j.find("version"); it != j.end()) {
    r.version = require_uint<std::uint64_t>(*it, path + "/version", UINT64_MAX);
  }
  if (auto it = j.find("match"); it != j.end()) {
    const std::string mp = path + "/match";
    if (!it->is_object()) throw ConfigError(mp, "expected an object");
    for (auto f = it->begin(); f != it->end(); ++f) {
      const std::string fp = mp + "/" + f.key();
      if (f.key() == "in_port") {
        r.match.in_port = require_uint<PortId>(f.value(), fp, UINT32_MAX);
      } else if (f.key() == "nw_src") {
        r.match.src_addr = require_addr(f.value(), fp);
      } else if (f.key() == "nw_dst") {
        r.match.dst_addr = require_addr(f.value(), fp);
      } else if (f.key() == "nw_proto") {
        r.match.proto = require_uint<std::uint8_t>(f.value(), fp, 255);
      } else {
        throw ConfigError(fp, "unknown match field");
      }
    }
  }
  for (auto f = j.begin(); f != j.end(); ++f) {
    if (f.key() != "dpid" && f.key() != "priority" && f.key() != "actions" &&
        f.key() != "match" && f.key() != "version") {
      throw ConfigError(path + "/" + f.key(), "unknown field");
    }
  }
  return r;
}

// A set of flow rules with at most one rule per (dpid, priority, match).
// Iteration order is the canonical order: dpid ascending, priority
// descending, canonical match bytes ascending.
class RuleSet {
 public:
  struct Key {
    SwitchId dpid;
    std::uint16_t priority;
    std::string match_bytes;
    bool operator<(const Key& o) const {
      if (dpid != o.dpid) return dpid < o.dpid;
      if (priority != o.priority) return priority > o.priority;
      return match_bytes < o.match_bytes;
    }
    bool operator==(const Key& o) const = default;
  };

  RuleSet() = default;
  RuleSet(std::initializer_list<FlowRule> rules) {
    for (const auto& r : rules) insert(r);
  }

  static Key key_of(const FlowRule& r) { return {r.dpid, r.priority, distb::canonical_bytes(r.match)}; }

  // Returns false (and leaves the set unchanged) if the triple is taken.
  bool insert(const FlowRule& r) { return rules_.emplace(key_of(r), r).second; }
  void upsert(const FlowRule& r) { rules_.insert_or_assign(key_of(r), r); }
  bool erase(const FlowRule& r) { return rules_.erase(key_of(r)) > 0; }
  bool contains_key(const FlowRule& r) const { return rules_.count(key_of(r)) > 0; }
  const FlowRule* find(const FlowRule& r) const {
    auto it = rules_.find(key_of(r));
    return it == rules_.end() ? nullptr : &it->second;
  }

  std::size_t size() const { return rules_.size(); }
  bool empty() const { return rules_.empty(); }

  auto begin() const { return rules_.begin(); }
  auto end() const { return rules_.end(); }

  std::vector<FlowRule> rules() const {
    std::vector<FlowRule> out;
    out.reserve(rules_.size());
    for (const auto& [k, r] : rules_) out.push_back(r);
    return out;
  }

  RuleSet slice(SwitchId dpid) const {
    RuleSet out;
    for (const auto& [k, r] : rules_)
      if (r.dpid == dpid) out.rules_.emplace(k, r);
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [k, r] : rules_) arr.push_back(rule_to_json(r));
    return arr;
  }

  std::string canonical_bytes() const { return to_json().dump(); }
  Digest digest() const { return sha256(canonical_bytes()); }

  static RuleSet from_json(const nlohmann::json& j, const std::string& path = "") {
    if (!j.is_array()) throw ConfigError(path.empty() ? "/" : path, "expected an array of rules");
    RuleSet out;
    for (std::size_t i = 0; i < j.size(); ++i) {
      const std::string p = path + "/" + std::to_string(i);
      if (!out.insert(rule_from_json(j[i], p))) {
        throw ConfigError(p, "duplicate (dpid, priority, match)");
      }
    }
    return out;
  }

  bool operator==(const RuleSet& o) const { return rules_ == o.rules_; }

 private:
  std::map<Key, FlowRule> rules_;
};

// Highest-priority matching rule; among equal priorities the rule with the
// lexicographically smallest canonical bytes wins. nullptr on table miss.
inline const FlowRule* lookup(const RuleSet& table, const PacketHeader& h) {
  const FlowRule* best = nullptr;
  std::string best_bytes;
  for (const auto& [k, r] : table) {
    if (best && r.priority < best->priority) break;
    if (!r.match.matches(h)) continue;
    if (!best) {
      best = &r;
      best_bytes = distb::canonical_bytes(r);
      continue;
    }
    auto bytes = distb::canonical_bytes(r);
    if (bytes < best_bytes) {
      best = &r;
      best_bytes = std::move(bytes);
    }
  }
  return best;
}

inline Action match_action(const RuleSet& table, const PacketHeader& h, Action table_miss) {
  const FlowRule* r = lookup(table, h);
  return r ? r->action : table_miss;
}

}  // namespace distb
