#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "rng.hpp"

namespace distb::iot {

struct Vec2 {
  double x = 0;
  double y = 0;
  bool operator==(const Vec2&) const = default;
};

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

enum class Role { Member, ClusterHead };

struct SensorNode {
  std::uint32_t id = 0;
  Vec2 position;
  double energy = 0;  // J
  double trust = 5.0;  // J; carried but not used by any formula
  Role role = Role::Member;
  bool dead = false;

  // random-waypoint state
  Vec2 waypoint;
  double speed = 0;
  double pause_left = 0;
};

struct Cluster {
  std::uint32_t id = 0;
  std::vector<std::uint32_t> members;
  std::optional<std::uint32_t> head;
  Vec2 centroid;
};

struct BaseStation {
  Vec2 position;
  double energy_budget = 20.0;  // J, the station energy constant of the gate
};

class InvalidK : public Error {
 public:
  InvalidK(std::size_t k, std::size_t n)
      : Error("k = " + std::to_string(k) + " must lie in [1, " + std::to_string(n) + "]") {}
};
class EmptyCluster : public Error {
 public:
  explicit EmptyCluster(std::uint32_t id) : Error("cluster " + std::to_string(id) + " has no live members") {}
};

inline Vec2 centroid_of(const std::vector<SensorNode>& nodes, const std::vector<std::uint32_t>& ids) {
  Vec2 c;
  if (ids.empty()) return c;
  for (auto i : ids) {
    c.x += nodes[i].position.x;
    c.y += nodes[i].position.y;
  }
  c.x /= static_cast<double>(ids.size());
  c.y /= static_cast<double>(ids.size());
  return c;
}

inline std::size_t default_cluster_count(std::size_t n) { return std::max<std::size_t>(1, (n + 9) / 10); }

// Deterministic k-means. The first centre is a seed-chosen node, each
// further centre is the node farthest from the centres picked so far
// (lowest index on ties). Lloyd iterations run to convergence or 100 rounds.
// Node ids must equal their index in `nodes`.
inline std::vector<Cluster> partition_clusters(const std::vector<SensorNode>& nodes, std::size_t k,
                                               std::uint64_t seed) {
  const std::size_t n = nodes.size();
  if (k < 1 || k > n) throw InvalidK(k, n);
  RngStream rng = RngRoot(seed).stream("kmeans");
  std::vector<Vec2> centres;
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(n, false);
  std::size_t pick = static_cast<std::size_t>(rng.uniform_int(0, n - 1));
  for (std::size_t c = 0; c < k; ++c) {
    chosen[pick] = true;
    centres.push_back(nodes[pick].position);
    for (std::size_t i = 0; i < n; ++i)
      nearest[i] = std::min(nearest[i], distance(nodes[i].position, centres.back()));
    double best = -1;
    for (std::size_t i = 0; i < n; ++i) {
      if (!chosen[i] && nearest[i] > best) {
        best = nearest[i];
        pick = i;
      }
    }
  }

  std::vector<std::size_t> assign(n, 0);
  auto assign_all = [&] {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        double d = distance(nodes[i].position, centres[c]);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (assign[i] != best) changed = true;
      assign[i] = best;
    }
    return changed;
  };
  assign_all();
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<Vec2> sum(k);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[assign[i]].x += nodes[i].position.x;
      sum[assign[i]].y += nodes[i].position.y;
      ++count[assign[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] > 0) {
        centres[c] = {sum[c].x / static_cast<double>(count[c]), sum[c].y / static_cast<double>(count[c])};
        continue;
      }
      // Re-seed an emptied cluster at the node farthest from its centre.
      std::size_t far = 0;
      double fd = -1;
      for (std::size_t i = 0; i < n; ++i) {
        if (count[assign[i]] <= 1) continue;
        double d = distance(nodes[i].position, centres[assign[i]]);
        if (d > fd) {
          fd = d;
          far = i;
        }
      }
      --count[assign[far]];
      assign[far] = c;
      count[c] = 1;
      centres[c] = nodes[far].position;
    }
    if (!assign_all()) break;
  }
  // Guarantee non-empty clusters after the final assignment.
  for (std::size_t c = 0; c < k; ++c) {
    if (std::find(assign.begin(), assign.end(), c) != assign.end()) continue;
    std::vector<std::size_t> count(k, 0);
    for (auto a : assign) ++count[a];
    for (std::size_t i = 0; i < n; ++i) {
      if (count[assign[i]] > 1) {
        assign[i] = c;
        break;
      }
    }
  }

  std::vector<Cluster> out(k);
  for (std::size_t c = 0; c < k; ++c) out[c].id = static_cast<std::uint32_t>(c);
  for (std::size_t i = 0; i < n; ++i) out[assign[i]].members.push_back(nodes[i].id);
  for (auto& cl : out) cl.centroid = centroid_of(nodes, cl.members);
  return out;
}

inline double within_cluster_ss(const std::vector<SensorNode>& nodes, const std::vector<Cluster>& clusters) {
  double ss = 0;
  for (const auto& c : clusters) {
    Vec2 m = centroid_of(nodes, c.members);
    for (auto i : c.members) {
      double d = distance(nodes[i].position, m);
      ss += d * d;
    }
  }
  return ss;
}

// Distance from a node to its cluster's centre of gravity.
inline double gravity_distance(const SensorNode& node, const Cluster& cluster) {
  return distance(node.position, cluster.centroid);
}

inline constexpr double kDefaultLdsBand = 0.10;

// Cluster-head selection. Members are first ordered by ascending energy
// with a selection sort; the lowest distance separation (LDS) is the
// smallest gravity distance in the cluster; the head is the highest-energy
// member whose gravity distance is within LDS * (1 + band); ties go to the
// smaller gravity distance, then the lower id. Dead nodes are not eligible.
inline std::uint32_t select_head(const std::vector<SensorNode>& nodes, const Cluster& cluster,
                                 double band = kDefaultLdsBand) {
  std::vector<std::uint32_t> sorted;
  for (auto id : cluster.members)
    if (!nodes[id].dead) sorted.push_back(id);
  if (sorted.empty()) throw EmptyCluster(cluster.id);
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    std::size_t min = i;
    for (std::size_t j = i + 1; j < sorted.size(); ++j)
      if (nodes[sorted[j]].energy < nodes[sorted[min]].energy) min = j;
    std::swap(sorted[i], sorted[min]);
  }
  double lds = std::numeric_limits<double>::infinity();
  for (auto id : sorted) lds = std::min(lds, gravity_distance(nodes[id], cluster));
  const double limit = lds * (1.0 + band);
  std::optional<std::uint32_t> head;
  for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) {
    const auto& cand = nodes[*it];
    if (gravity_distance(cand, cluster) > limit) continue;
    if (!head) {
      head = cand.id;
      continue;
    }
    const auto& cur = nodes[*head];
    const double dc = gravity_distance(cand, cluster), dh = gravity_distance(cur, cluster);
    if (cand.energy > cur.energy || (cand.energy == cur.energy && dc < dh) ||
        (cand.energy == cur.energy && dc == dh && cand.id < *head)) {
      head = cand.id;
    }
  }
  return *head;
}

inline std::vector<std::pair<std::uint32_t, std::uint32_t>> select_cluster_heads(
    std::vector<SensorNode>& nodes, std::vector<Cluster>& clusters, double band = kDefaultLdsBand) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  for (auto& c : clusters) {
    const auto h = select_head(nodes, c, band);
    c.head = h;
    for (auto id : c.members) nodes[id].role = id == h ? Role::ClusterHead : Role::Member;
    out.emplace_back(c.id, h);
  }
  return out;
}

// First-order radio model.
struct RadioModel {
  double e_elec = 50e-9;     // J/bit
  double eps_amp = 100e-12;  // J/bit/m^2
};

inline double energy_tx(double bits, double distance_m, const RadioModel& r = {}) {
  return r.e_elec * bits + r.eps_amp * bits * distance_m * distance_m;
}
inline double energy_rx(double bits, const RadioModel& r = {}) { return r.e_elec * bits; }

enum class GateSemantics { AsWritten, BudgetCheck };

struct RoundOptions {
  RadioModel radio;
  GateSemantics gate = GateSemantics::AsWritten;
  double request_bits = 200;  // request-to-send control message
  double data_rate_bps = 12e6;
  double propagation_mps = 3e8;
};

struct EnergyDebit {
  double time;
  std::uint32_t node;
  double delta_j;  // negative
  const char* reason;
};

// Append-only record of every energy debit.
class EnergyLedger {
 public:
  void record(double time, std::uint32_t node, double delta, const char* reason) {
    entries_.push_back({time, node, delta, reason});
    total_ += delta;
  }
  const std::vector<EnergyDebit>& entries() const { return entries_; }
  double total() const { return total_; }

 private:
  std::vector<EnergyDebit> entries_;
  double total_ = 0;
};

struct RoundResult {
  std::vector<std::pair<std::uint32_t, double>> energy_spent;  // node -> J
  double end_to_end_delay = 0;  // s, mean over delivered readings
  bool delivered = false;
  std::optional<std::uint32_t> head;
  std::vector<std::uint32_t> dead;  // nodes that died during the round
  std::uint32_t readings = 0;       // readings delivered to the station
  std::vector<std::uint32_t> sources;  // originating node of each delivered reading

  double total_energy() const {
    double s = 0;
    for (const auto& [n, e] : energy_spent) s += e;
    return s;
  }
};

namespace detail {

class RoundAccount {
 public:
  RoundAccount(std::vector<SensorNode>& nodes, EnergyLedger* ledger, double now, RoundResult& res)
      : nodes_(nodes), ledger_(ledger), now_(now), res_(res) {}

  // Returns false, and marks the node dead, if the debit exceeds its energy.
  bool debit(std::uint32_t id, double joules, const char* reason) {
    auto& n = nodes_[id];
    if (n.dead) return false;
    if (joules > n.energy) {
      if (n.energy > 0) {
        spend(id, n.energy, "depleted");
        n.energy = 0;
      }
      n.dead = true;
      res_.dead.push_back(id);
      return false;
    }
    if (joules > 0) spend(id, joules, reason);
    n.energy -= joules;
    return true;
  }

 private:
  void spend(std::uint32_t id, double joules, const char* reason) {
    if (ledger_) ledger_->record(now_, id, -joules, reason);
    for (auto& [n, e] : res_.energy_spent) {
      if (n == id) {
        e += joules;
        return;
      }
    }
    res_.energy_spent.emplace_back(id, joules);
  }

  std::vector<SensorNode>& nodes_;
  EnergyLedger* ledger_;
  double now_;
  RoundResult& res_;
};

inline RoundResult run_round(std::vector<SensorNode>& nodes, const Cluster& cluster, std::uint32_t head,
                             const BaseStation& bs, double payload_bits, const RoundOptions& opt,
                             bool gated, EnergyLedger* ledger, double now) {
  RoundResult res;
  res.head = head;
  RoundAccount acct(nodes, ledger, now, res);
  if (nodes[head].dead) return res;
  const double rate = opt.data_rate_bps;
  const double c = opt.propagation_mps;

  std::vector<double> first_hop;  // per delivered reading
  std::vector<std::uint32_t> sources;
  if (payload_bits > 0) {
    first_hop.push_back(0.0);  // head's own reading
    sources.push_back(head);
  }
  for (auto m : cluster.members) {
    if (m == head || nodes[m].dead || payload_bits <= 0) continue;
    const double d = distance(nodes[m].position, nodes[head].position);
    if (!acct.debit(m, energy_tx(payload_bits, d, opt.radio), "tx_member")) continue;
    if (!acct.debit(head, energy_rx(payload_bits, opt.radio), "rx_head")) return res;
    first_hop.push_back(payload_bits / rate + d / c);
    sources.push_back(m);
  }

  const double d_bs = distance(nodes[head].position, bs.position);
  if (!acct.debit(head, energy_tx(opt.request_bits, d_bs, opt.radio), "request")) return res;

  const double agg_bits = payload_bits * static_cast<double>(first_hop.size());
  const double data_cost = energy_tx(agg_bits, d_bs, opt.radio);
  if (gated) {
    const bool pass = opt.gate == GateSemantics::AsWritten ? bs.energy_budget > nodes[head].energy
                                                           : nodes[head].energy >= data_cost;
    if (!pass) return res;
  }
  if (first_hop.empty()) {
    res.delivered = true;
    return res;
  }
  if (!acct.debit(head, data_cost, "tx_head")) return res;
  res.delivered = true;
  res.readings = static_cast<std::uint32_t>(first_hop.size());
  res.sources = std::move(sources);
  const double tail = opt.request_bits / rate + d_bs / c + agg_bits / rate + d_bs / c;
  double sum = 0;
  for (double h : first_hop) sum += h + tail;
  res.end_to_end_delay = sum / static_cast<double>(first_hop.size());
  return res;
}

}  // namespace detail

// One data round of a cluster with an already selected head: members send
// to the head, the head requests the station and, if the gate holds,
// forwards the aggregated readings.
inline RoundResult transmit_round(std::vector<SensorNode>& nodes, const Cluster& cluster,
                                  const BaseStation& bs, double payload_bits, const RoundOptions& opt = {},
                                  EnergyLedger* ledger = nullptr, double now = 0) {
  if (!cluster.head) throw Error("transmit_round: cluster " + std::to_string(cluster.id) + " has no head");
  return detail::run_round(nodes, cluster, *cluster.head, bs, payload_bits, opt, true, ledger, now);
}

// Comparison protocol: same radio accounting, head drawn uniformly from
// the live members, no station gate.
inline RoundResult baseline_round(std::vector<SensorNode>& nodes, const Cluster& cluster,
                                  const BaseStation& bs, double payload_bits, RngStream& rng,
                                  const RoundOptions& opt = {}, EnergyLedger* ledger = nullptr,
                                  double now = 0) {
  std::vector<std::uint32_t> alive;
  for (auto id : cluster.members)
    if (!nodes[id].dead) alive.push_back(id);
  if (alive.empty()) throw EmptyCluster(cluster.id);
  const auto head = alive[rng.uniform_int(0, alive.size() - 1)];
  return detail::run_round(nodes, cluster, head, bs, payload_bits, opt, false, ledger, now);
}

struct MobilityOptions {
  double area_m = 1000;
  double min_speed = 1.0;
  double max_speed = 5.0;
  double max_pause = 2.0;
};

// Random waypoint model: travel to a uniform waypoint at a uniform speed,
// pause, repeat. Advances the node by dt seconds.
inline Vec2 random_waypoint_step(SensorNode& node, double dt, RngStream& rng, const MobilityOptions& opt = {}) {
  if (!(dt > 0)) throw Error("random_waypoint_step: dt must be > 0");
  auto clip = [&](Vec2 p) {
    return Vec2{std::clamp(p.x, 0.0, opt.area_m), std::clamp(p.y, 0.0, opt.area_m)};
  };
  auto new_leg = [&] {
    node.waypoint = {rng.uniform(0, opt.area_m), rng.uniform(0, opt.area_m)};
    node.speed = rng.uniform(opt.min_speed, opt.max_speed);
  };
  if (node.speed <= 0) new_leg();
  double left = dt;
  for (int guard = 0; left > 0 && guard < 1000; ++guard) {
    if (node.pause_left > 0) {
      const double p = std::min(left, node.pause_left);
      node.pause_left -= p;
      left -= p;
      if (node.pause_left <= 0) new_leg();
      continue;
    }
    const double dist = distance(node.position, node.waypoint);
    const double reach = dist / node.speed;
    if (reach > left) {
      const double f = node.speed * left / dist;
      node.position = {node.position.x + (node.waypoint.x - node.position.x) * f,
                       node.position.y + (node.waypoint.y - node.position.y) * f};
      left = 0;
    } else {
      node.position = node.waypoint;
      left -= reach;
      node.pause_left = rng.uniform(0, opt.max_pause);
      if (node.pause_left <= 0) new_leg();
    }
  }
  node.position = clip(node.position);
  return node.position;
}

}  // namespace distb::iot
