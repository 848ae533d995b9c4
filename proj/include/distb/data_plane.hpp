#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "digest.hpp"
#include "error.hpp"
#include "flow.hpp"

namespace distb {

using NodeId = std::uint32_t;

struct Neighbor {
  enum class Kind { Switch, Host, Gateway };
  Kind kind = Kind::Host;
  NodeId id = 0;
};

struct SwitchCounters {
  std::uint64_t matched = 0;
  std::uint64_t forwarded = 0;
  std::uint64_t dropped = 0;
  std::uint64_t to_controller = 0;
};

// An OpenFlow-style switch with a single flow table.
class Switch {
 public:
  Switch() = default;
  explicit Switch(SwitchId id, Action table_miss = Action::drop())
      : id_(id), table_miss_(table_miss) {}

  SwitchId id() const { return id_; }
  const RuleSet& table() const { return table_; }
  Action table_miss() const { return table_miss_; }
  void set_table_miss(Action a) {
    table_miss_ = a;
    cache_.clear();
  }

  // Rules for other dpids are ignored.
  void install(const RuleSet& rules) {
    table_ = rules.slice(id_);
    cache_.clear();
  }
  bool add_rule(const FlowRule& r) {
    if (r.dpid != id_) return false;
    cache_.clear();
    return table_.insert(r);
  }
  bool remove_rule(const FlowRule& r) {
    cache_.clear();
    return table_.erase(r);
  }

  const std::map<PortId, Neighbor>& ports() const { return ports_; }
  void connect(PortId port, Neighbor n) { ports_[port] = n; }
  std::optional<PortId> port_to(Neighbor::Kind kind, NodeId id) const {
    for (const auto& [p, n] : ports_)
      if (n.kind == kind && n.id == id) return p;
    return std::nullopt;
  }

  bool isolated() const { return isolated_; }
  void set_isolated(bool v) { isolated_ = v; }
  bool compromised() const { return compromised_; }
  void set_compromised(bool v) { compromised_ = v; }

  const SwitchCounters& counters() const { return counters_; }

  // Table lookup without touching counters.
  Action peek(const PacketHeader& h) const { return resolve(h).action; }

  Action forward(const PacketHeader& h) {
    if (isolated_) throw Error("packet delivered to isolated switch " + std::to_string(id_));
    const Resolved r = resolve(h);
    const Action a = r.action;
    if (r.hit) ++counters_.matched;
    switch (a.kind) {
      case Action::Kind::Forward:
      case Action::Kind::Flood: ++counters_.forwarded; break;
      case Action::Kind::Drop: ++counters_.dropped; break;
      case Action::Kind::ToController: ++counters_.to_controller; break;
    }
    return a;
  }

 private:
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    return (a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
  }
  static std::uint64_t cache_key(const PacketHeader& h) {
    std::uint64_t k = (std::uint64_t(h.src) << 32) | h.dst;
    return mix(mix(k, h.in_port), h.proto) ^ (std::uint64_t(h.in_port) << 56) ^
           (std::uint64_t(h.proto) << 48);
  }
  struct Resolved {
    Action action;
    bool hit;
  };
  Resolved resolve(const PacketHeader& h) const {
    const std::uint64_t key = cache_key(h);
    if (auto it = cache_.find(key); it != cache_.end() && it->second.header_matches(h)) {
      return it->second.resolved;
    }
    const FlowRule* rule = lookup(table_, h);
    Resolved r{rule ? rule->action : table_miss_, rule != nullptr};
    cache_.insert_or_assign(key, CacheEntry{h, r});
    return r;
  }
  struct CacheEntry {
    PacketHeader header;
    Resolved resolved;
    bool header_matches(const PacketHeader& o) const {
      return header.in_port == o.in_port && header.src == o.src && header.dst == o.dst &&
             header.proto == o.proto;
    }
  };

  SwitchId id_ = 0;
  RuleSet table_;
  Action table_miss_ = Action::drop();
  std::map<PortId, Neighbor> ports_;
  bool isolated_ = false;
  bool compromised_ = false;
  SwitchCounters counters_;
  mutable std::unordered_map<std::uint64_t, CacheEntry> cache_;
};

inline Action forward_packet(Switch& sw, const PacketHeader& h) { return sw.forward(h); }

// Canonical serialization of the switch's current (possibly tampered) table.
inline std::string dump_flows(const Switch& sw) { return sw.table().canonical_bytes(); }

inline Digest flow_table_hash(const Switch& sw) { return sha256(dump_flows(sw)); }

struct TapObservation {
  PacketHeader packet;
  Action observed;
};

struct Verdict {
  enum class Kind { Consistent, Inconsistent };
  Kind kind = Kind::Consistent;
  std::optional<Digest> observed_digest;
  std::optional<Digest> expected_digest;
  std::optional<TapObservation> violation;
  std::optional<Action> expected_action;
  std::string detail;

  bool consistent() const { return kind == Kind::Consistent; }
  static Verdict ok() { return {}; }
};

inline Verdict verify_switch(const Switch& sw, const Digest& expected) {
  const Digest got = flow_table_hash(sw);
  if (got == expected) return Verdict::ok();
  Verdict v;
  v.kind = Verdict::Kind::Inconsistent;
  v.observed_digest = got;
  v.expected_digest = expected;
  v.detail = "flow table hash mismatch";
  return v;
}

// Forwarding detection: every tapped observation must agree with what the
// reference rules prescribe for that packet.
inline Verdict ids_forwarding_check(const std::vector<TapObservation>& tap, const RuleSet& rules,
                                    Action table_miss = Action::drop()) {
  for (const auto& obs : tap) {
    Action want = match_action(rules, obs.packet, table_miss);
    if (!(want == obs.observed)) {
      Verdict v;
      v.kind = Verdict::Kind::Inconsistent;
      v.violation = obs;
      v.expected_action = want;
      v.detail = "observed " + to_string(obs.observed) + ", rules prescribe " + to_string(want);
      return v;
    }
  }
  return Verdict::ok();
}

// Weighting detection: per-rule observed/expected packet-count ratio must
// lie within [1 - eps, 1 + eps]. Rules absent from `observed` count as 0.
inline Verdict weighting_check(const std::map<std::string, std::uint64_t>& expected,
                               const std::map<std::string, std::uint64_t>& observed,
                               double eps = 0.05) {
  for (const auto& [rule, want] : expected) {
    auto it = observed.find(rule);
    const double got = it == observed.end() ? 0.0 : static_cast<double>(it->second);
    bool bad = false;
    if (want == 0) {
      bad = got > 0;
    } else {
      const double ratio = got / static_cast<double>(want);
      bad = ratio < 1.0 - eps || ratio > 1.0 + eps;
    }
    if (bad) {
      Verdict v;
      v.kind = Verdict::Kind::Inconsistent;
      v.detail = "rule " + rule + ": observed " + std::to_string(static_cast<std::uint64_t>(got)) +
                 " packets, expected " + std::to_string(want);
      return v;
    }
  }
  for (const auto& [rule, got] : observed) {
    if (got > 0 && !expected.count(rule)) {
      Verdict v;
      v.kind = Verdict::Kind::Inconsistent;
      v.detail = "rule " + rule + " carried traffic but has no expectation";
      return v;
    }
  }
  return Verdict::ok();
}

}  // namespace distb
