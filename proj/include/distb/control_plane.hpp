#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "data_plane.hpp"
#include "error.hpp"
#include "ledger.hpp"

namespace distb {

// Work units charged to a controller per handled message; a proxy for CPU.
struct WorkCosts {
  double packet_in = 1.0;
  double block_mined = 5.0;
  double verification = 2.0;
};

struct WorkEntry {
  double time;
  std::uint32_t controller;
  double units;
  const char* reason;
};

struct Controller {
  std::uint32_t id = 0;
  // This replica's view of the control chain head.
  std::uint64_t replica_index = 0;
  Digest replica_head{};
  std::set<SwitchId> connected_switches;
  double work_units = 0.0;
};

struct IsolationEvent {
  double time;
  SwitchId target;
  std::string action;  // "isolate" | "reinstate"
};

class AlreadyIsolated : public Error {
 public:
  explicit AlreadyIsolated(SwitchId id) : Error("switch " + std::to_string(id) + " is already isolated") {}
};
class NotIsolated : public Error {
 public:
  explicit NotIsolated(SwitchId id) : Error("switch " + std::to_string(id) + " is not isolated") {}
};
class UnknownSwitch : public Error {
 public:
  explicit UnknownSwitch(SwitchId id) : Error("unknown switch " + std::to_string(id)) {}
};

// ------------------------------------------------------------ access policy

struct AccessRequest {
  std::string principal;
  std::string signature_token;
};

enum class AccessDecision { Granted, Denied };

// principal -> shared-secret token
using AccessRegistry = std::map<std::string, std::string>;

inline AccessDecision grant_access(const AccessRequest& req, const AccessRegistry& registry) {
  auto it = registry.find(req.principal);
  if (it == registry.end() || it->second != req.signature_token) return AccessDecision::Denied;
  return AccessDecision::Granted;
}

struct AccessLogEntry {
  double time;
  std::string principal;
  AccessDecision decision;
};

class AccessPolicy {
 public:
  AccessPolicy() = default;
  explicit AccessPolicy(AccessRegistry registry) : registry_(std::move(registry)) {}

  AccessDecision decide(const AccessRequest& req, double now) {
    auto d = grant_access(req, registry_);
    log_.push_back({now, req.principal, d});
    return d;
  }
  const AccessRegistry& registry() const { return registry_; }
  const std::vector<AccessLogEntry>& log() const { return log_; }

 private:
  AccessRegistry registry_;
  std::vector<AccessLogEntry> log_;
};

// ---------------------------------------------------------------- cluster

struct ClusterOptions {
  std::uint32_t controllers = 5;
  std::uint32_t difficulty = kDefaultDifficulty;
  double verification_period = 5.0;
  double hop_delay = 0.002;
  std::uint32_t epoch_base = 1'600'000'000;
  std::uint16_t isolation_priority = 65535;
  WorkCosts costs;
};

// Deferred execution hook supplied by the event loop. Without one,
// broadcasts complete synchronously.
using DeferFn = std::function<void(double delay, std::function<void()>)>;

// Keeps the version of a rule that is unchanged from `prev`, stamps
// everything else with `version`.
inline RuleSet stamp_versions(const RuleSet& rules, const RuleSet& prev, std::uint64_t version) {
  RuleSet out;
  for (const auto& [k, r] : rules) {
    FlowRule s = r;
    const FlowRule* old = prev.find(r);
    s.version = (old && old->action == r.action) ? old->version : version;
    out.insert(s);
  }
  return out;
}

class ControllerCluster {
 public:
  ControllerCluster(std::map<SwitchId, Switch>& switches, const RuleSet& initial,
                    ClusterOptions opts = {}, double now = 0.0)
      : switches_(switches),
        opts_(opts),
        control_(Chain::control(stamp_versions(initial, {}, 0), opts.difficulty, timestamp(now))),
        data_(Chain::data(opts.difficulty, timestamp(now))) {
    if (opts_.controllers == 0) throw Error("cluster needs at least one controller");
    if (!(opts_.verification_period > 0)) throw Error("verification period must be > 0");
    for (std::uint32_t i = 0; i < opts_.controllers; ++i) {
      Controller c;
      c.id = i;
      controllers_.push_back(c);
    }
    std::uint32_t n = 0;
    for (auto& [id, sw] : switches_) controllers_[n++ % opts_.controllers].connected_switches.insert(id);
    effective_ = std::get<RuleUpdate>(control_.head().decoded()).rules;
    for (auto& c : controllers_) {
      c.replica_index = 0;
      c.replica_head = control_.head().block_hash;
    }
    for (auto& [id, sw] : switches_) {
      sw.install(effective_);
      delivered_[id] = effective_.slice(id);
    }
    blocks_persisted_ = 2;
  }

  void set_defer(DeferFn fn) { defer_ = std::move(fn); }

  const Chain& control_chain() const { return control_; }
  const Chain& data_chain() const { return data_; }
  const ClusterOptions& options() const { return opts_; }
  const std::vector<Controller>& controllers() const { return controllers_; }
  Controller& controller(std::uint32_t i) { return controllers_.at(i); }
  const std::map<SwitchId, Switch>& switches() const { return switches_; }

  // Rule set carried by the control chain head.
  const RuleSet& effective_rules() const { return effective_; }
  Digest expected_digest(SwitchId id) const { return effective_.slice(id).digest(); }
  // Slice most recently delivered to a switch by broadcast.
  const RuleSet& delivered_rules(SwitchId id) const { return delivered_.at(id); }
  // Bumped every time a broadcast installs rules on the switch.
  std::uint64_t delivery_epoch(SwitchId id) const {
    auto it = epoch_.find(id);
    return it == epoch_.end() ? 0 : it->second;
  }

  bool broadcast_pending() const { return pending_ > 0; }
  std::uint64_t blocks_persisted() const { return blocks_persisted_; }
  std::uint64_t isolation_orders() const { return isolation_orders_; }
  const std::vector<WorkEntry>& work_log() const { return work_log_; }
  const std::vector<IsolationEvent>& isolation_log() const { return isolation_log_; }
  // Nonce attempts for every block mined after genesis, in order.
  const std::vector<std::uint64_t>& mining_attempts() const { return attempts_; }

  double total_work() const {
    double s = 0;
    for (const auto& c : controllers_) s += c.work_units;
    return s;
  }

  std::uint32_t timestamp(double now) const {
    return opts_.epoch_base + static_cast<std::uint32_t>(std::floor(std::max(0.0, now)));
  }

  std::uint32_t master_of(SwitchId id) const {
    for (const auto& c : controllers_)
      if (c.connected_switches.count(id)) return c.id;
    return 0;
  }

  void charge(std::uint32_t controller, double units, const char* reason, double now) {
    controllers_.at(controller).work_units += units;
    work_log_.push_back({now, controller, units, reason});
  }

  const Block& submit_rule_update(const RuleSet& rules, double now) {
    RuleSet stamped = stamp_versions(rules, effective_, control_.head().index + 1);
    const Block& b = append(RuleUpdate{stamped}, now);
    effective_ = std::move(stamped);
    broadcast(now, {});
    return b;
  }

  const Block& isolate_switch(SwitchId target, double now) {
    auto it = switches_.find(target);
    if (it == switches_.end()) throw UnknownSwitch(target);
    if (it->second.isolated() || isolation_rules_.count(target)) throw AlreadyIsolated(target);
    RuleSet added;
    for (const auto& [id, sw] : switches_) {
      if (id == target) continue;
      if (auto port = sw.port_to(Neighbor::Kind::Switch, target)) {
        FlowRule r;
        r.dpid = id;
        r.priority = opts_.isolation_priority;
        r.match.in_port = *port;
        r.action = Action::drop();
        added.insert(r);
      }
    }
    RuleSet next = effective_;
    for (const auto& [k, r] : added) next.upsert(r);
    next = stamp_versions(next, effective_, control_.head().index + 1);
    const Block& b = append(IsolationOrder{target, next}, now);
    effective_ = std::move(next);
    isolation_rules_[target] = added;
    ++isolation_orders_;
    it->second.set_isolated(true);
    isolation_log_.push_back({now, target, "isolate"});
    broadcast(now, {});
    return b;
  }

  const Block& reinstate_switch(SwitchId target, double now) {
    auto it = switches_.find(target);
    if (it == switches_.end()) throw UnknownSwitch(target);
    auto iso = isolation_rules_.find(target);
    if (iso == isolation_rules_.end()) throw NotIsolated(target);
    RuleSet next;
    for (const auto& [k, r] : effective_)
      if (!iso->second.contains_key(r)) next.insert(r);
    next = stamp_versions(next, effective_, control_.head().index + 1);
    const Block& b = append(RuleUpdate{next}, now);
    effective_ = std::move(next);
    isolation_rules_.erase(iso);
    isolation_log_.push_back({now, target, "reinstate"});
    broadcast(now, target);
    return b;
  }

  bool is_quarantined(SwitchId id) const { return isolation_rules_.count(id) > 0; }

  // Hashes every non-isolated switch against the head slice, records a
  // dump on unanimity and isolates each inconsistent switch once. Optional
  // tap observations add forwarding detection against the delivered rules.
  std::vector<std::pair<SwitchId, Verdict>> run_verification_round(
      double now, const std::map<SwitchId, std::vector<TapObservation>>* taps = nullptr) {
    std::map<SwitchId, Digest> digests, expected;
    std::vector<std::pair<SwitchId, Verdict>> verdicts;
    for (const auto& [id, sw] : switches_) {
      if (sw.isolated()) continue;
      charge(master_of(id), opts_.costs.verification, "verification", now);
      expected[id] = expected_digest(id);
      digests[id] = flow_table_hash(sw);
      Verdict v = verify_switch(sw, expected[id]);
      if (v.consistent() && taps) {
        if (auto t = taps->find(id); t != taps->end()) {
          v = ids_forwarding_check(t->second, delivered_.at(id), sw.table_miss());
        }
      }
      verdicts.emplace_back(id, std::move(v));
    }
    bool all_clean = true;
    for (const auto& [id, v] : verdicts) all_clean = all_clean && v.consistent();
    if (all_clean) {
      auto outcome = append_dump(data_, digests, expected, timestamp(now));
      if (std::holds_alternative<DumpAppended>(outcome)) after_mine(now, data_.head());
    }
    for (const auto& [id, v] : verdicts) {
      if (!v.consistent()) isolate_switch(id, now);
    }
    return verdicts;
  }

  bool controllers_consistent() const {
    for (const auto& c : controllers_)
      if (c.replica_head != controllers_.front().replica_head) return false;
    return true;
  }

 private:
  const Block& append(const BlockPayload& payload, double now) {
    const Block& b = control_.mine_and_append(payload, timestamp(now));
    after_mine(now, b);
    return b;
  }

  void after_mine(double now, const Block& b) {
    attempts_.push_back(std::uint64_t(b.header.nonce) + 1);
    charge(static_cast<std::uint32_t>(b.index % controllers_.size()), opts_.costs.block_mined,
           "block_mined", now);
    ++blocks_persisted_;
  }

  // Controllers learn the new head one hop after mining; switches install
  // one further hop later. `readmit` is a switch rejoining the fabric.
  void broadcast(double now, std::optional<SwitchId> readmit) {
    const std::uint64_t index = control_.head().index;
    const Digest head = control_.head().block_hash;
    RuleSet rules = effective_;
    auto to_controllers = [this, index, head] {
      for (auto& c : controllers_) {
        if (c.replica_index < index) {
          c.replica_index = index;
          c.replica_head = head;
        }
      }
    };
    auto to_switches = [this, rules, readmit] {
      for (auto& [id, sw] : switches_) {
        if (readmit && id == *readmit) {
          sw.set_isolated(false);
          sw.set_compromised(false);
        }
        if (sw.isolated()) continue;
        sw.install(rules);
        delivered_[id] = rules.slice(id);
        ++epoch_[id];
      }
    };
    (void)now;
    if (!defer_) {
      to_controllers();
      to_switches();
      return;
    }
    ++pending_;
    defer_(opts_.hop_delay, to_controllers);
    defer_(2 * opts_.hop_delay, [this, to_switches] {
      to_switches();
      --pending_;
    });
  }

  std::map<SwitchId, Switch>& switches_;
  ClusterOptions opts_;
  Chain control_;
  Chain data_;
  std::vector<Controller> controllers_;
  RuleSet effective_;
  std::map<SwitchId, RuleSet> delivered_;
  std::map<SwitchId, RuleSet> isolation_rules_;
  std::map<SwitchId, std::uint64_t> epoch_;
  DeferFn defer_;
  int pending_ = 0;
  std::uint64_t blocks_persisted_ = 0;
  std::uint64_t isolation_orders_ = 0;
  std::vector<WorkEntry> work_log_;
  std::vector<IsolationEvent> isolation_log_;
  std::vector<std::uint64_t> attempts_;
};

}  // namespace distb
