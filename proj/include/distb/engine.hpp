#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "config.hpp"
#include "control_plane.hpp"
#include "data_plane.hpp"
#include "iot.hpp"
#include "ledger.hpp"
#include "metrics.hpp"
#include "rng.hpp"
#include "traffic.hpp"

namespace distb {

class Unreachable : public Error {
 public:
  Unreachable(const std::string& from, const std::string& to) : Error("no route from " + from + " to " + to) {}
};

// Events run in (time, sequence) order.
class EventQueue {
 public:
  using Fn = std::function<void()>;

  void schedule(double t, Fn fn) { q_.push({t, seq_++, std::move(fn)}); }
  bool empty() const { return q_.empty(); }
  double next_time() const { return q_.top().time; }
  std::size_t size() const { return q_.size(); }

  // Pops and runs the earliest event.
  void step() {
    Ev e = std::move(const_cast<Ev&>(q_.top()));
    q_.pop();
    ++executed_;
    e.fn();
  }
  std::uint64_t executed() const { return executed_; }

 private:
  struct Ev {
    double time;
    std::uint64_t seq;
    Fn fn;
  };
  struct Later {
    bool operator()(const Ev& a, const Ev& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };
  std::priority_queue<Ev, std::vector<Ev>, Later> q_;
  std::uint64_t seq_ = 0;
  std::uint64_t executed_ = 0;
};

// One direction of a link: FIFO at a fixed rate with a bounded buffer.
class Channel {
 public:
  Channel(double rate_bps, std::size_t buffer) : rate_(rate_bps), buffer_(buffer) {}

  // Departure time of a packet offered at t, or nullopt on tail drop.
  std::optional<double> admit(double t, std::uint32_t bytes) {
    while (!departures_.empty() && departures_.front() <= t) departures_.pop_front();
    if (departures_.size() >= buffer_) return std::nullopt;
    const double dep = std::max(t, busy_until_) + 8.0 * bytes / rate_;
    busy_until_ = dep;
    departures_.push_back(dep);
    return dep;
  }
  std::size_t backlog() const { return departures_.size(); }

 private:
  double rate_;
  std::size_t buffer_;
  double busy_until_ = 0;
  std::deque<double> departures_;
};

enum class HostRole { Gateway, Cloud, Client, Bot };

struct Host {
  NodeId id = 0;
  std::string name;
  HostRole role = HostRole::Gateway;
  Addr addr = 0;
  SwitchId sw = 0;
  PortId port = 0;
};

inline constexpr Addr make_addr(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
  return (Addr(a) << 24) | (Addr(b) << 16) | (Addr(c) << 8) | d;
}

inline Addr device_addr(std::uint32_t i) { return make_addr(10, 1, std::uint8_t(i >> 8), std::uint8_t(i & 0xff)); }

struct TransferRecord {
  NodeId src = 0;
  NodeId dst = 0;
  std::uint64_t bytes = 0;
  double start = 0;
  std::uint32_t chunks = 0;
  std::uint32_t retransmissions = 0;
  std::optional<double> response;  // s, first send to last delivery plus cloud store
  bool failed = false;
};

struct TamperRecord {
  double time = 0;
  SwitchId target = 0;
  TamperMutation::Kind kind = TamperMutation::Kind::AddRule;
  bool applied = false;
  std::optional<double> reverted_at;
};

struct RunStats {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t in_flight = 0;
  std::uint64_t cbr_sent = 0;
  std::uint64_t cbr_delivered = 0;
  std::uint64_t rtr_packets = 0;
  std::uint64_t flood_sent = 0;
  std::uint64_t flood_delivered = 0;
  std::uint64_t packet_ins = 0;
  std::uint64_t iot_rounds = 0;
  std::uint64_t verification_rounds = 0;
  std::uint64_t events = 0;
  std::map<std::string, std::uint64_t> drop_reasons;  // per packet copy
};

// Generates the sensor field: uniform placement and initial energy unless
// the config carries an explicit topology.
inline std::vector<iot::SensorNode> make_nodes(const ScenarioConfig& cfg, const RngRoot& root) {
  std::vector<iot::SensorNode> nodes;
  if (!cfg.topology.empty()) {
    nodes = cfg.topology;
    for (auto& n : nodes) n.trust = cfg.trust;
    return nodes;
  }
  RngStream rng = root.stream("topology");
  for (std::uint32_t i = 0; i < cfg.node_count; ++i) {
    iot::SensorNode n;
    n.id = i;
    n.position = {rng.uniform(0, cfg.area_m), rng.uniform(0, cfg.area_m)};
    n.energy = rng.uniform(cfg.initial_energy_min, cfg.initial_energy_max);
    n.trust = cfg.trust;
    nodes.push_back(n);
  }
  return nodes;
}

// Gateways double as the clusters' base stations.
inline std::vector<iot::Vec2> gateway_positions(const ScenarioConfig& cfg) {
  return {{cfg.area_m / 4, cfg.area_m / 2}, {3 * cfg.area_m / 4, cfg.area_m / 2}};
}

inline std::size_t nearest_index(const std::vector<iot::Vec2>& points, iot::Vec2 p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < points.size(); ++i)
    if (iot::distance(points[i], p) < iot::distance(points[best], p)) best = i;
  return best;
}

inline iot::RoundOptions round_options(const ScenarioConfig& cfg) {
  iot::RoundOptions o;
  o.gate = cfg.gate;
  o.data_rate_bps = cfg.data_rate_bps;
  return o;
}

inline constexpr std::uint16_t kProactivePriority = 10;
inline constexpr std::uint16_t kMicroflowPriority = 1;
inline constexpr std::uint16_t kMitigationPriority = 100;
inline constexpr double kIdleTimeout = 10.0;
inline constexpr double kHardTimeout = 30.0;
inline constexpr std::size_t kTapLimit = 256;

// The simulated fabric: sensor field, gateways, a line of switches, the
// controller cluster and the cloud sink, driven by one event queue.
class World {
 public:
  explicit World(ScenarioConfig cfg) : cfg_(std::move(cfg)), root_(cfg_.seed) {
    validate(cfg_);
    build_fabric();
    build_iot();
    schedule_sources();
  }
  World(const World&) = delete;
  World& operator=(const World&) = delete;

  const ScenarioConfig& config() const { return cfg_; }
  double now() const { return now_; }
  bool finished() const { return queue_.empty() || queue_.next_time() > cfg_.duration_s; }

  // Runs every event with time <= t.
  void run_until(double t) {
    while (!queue_.empty() && queue_.next_time() <= t) {
      now_ = queue_.next_time();
      queue_.step();
    }
    now_ = std::max(now_, t);
  }
  void run() { run_until(cfg_.duration_s); }

  // Schedules fn at time t >= now.
  void at(double t, EventQueue::Fn fn) {
    if (t < now_) throw Error("event scheduled in the past");
    queue_.schedule(t, std::move(fn));
  }

  std::map<SwitchId, Switch>& switches() { return switches_; }
  const std::map<SwitchId, Switch>& switches() const { return switches_; }
  ControllerCluster& cluster() { return *cluster_; }
  const ControllerCluster& cluster() const { return *cluster_; }
  AccessPolicy& access() { return access_; }
  const AccessPolicy& access() const { return access_; }
  const std::vector<Host>& hosts() const { return hosts_; }
  const std::vector<Packet>& packets() const { return packets_; }
  const std::vector<iot::SensorNode>& nodes() const { return nodes_; }
  const std::vector<iot::Cluster>& clusters() const { return clusters_; }
  const iot::EnergyLedger& energy_ledger() const { return energy_; }
  const std::vector<TransferRecord>& transfers() const { return transfers_; }
  const std::vector<TamperRecord>& tamper_log() const { return tamper_log_; }
  const std::vector<std::pair<double, double>>& rtt_samples() const { return rtts_; }
  double initial_iot_energy() const { return initial_energy_; }

  NodeId host_id(const std::string& name) const {
    for (const auto& h : hosts_)
      if (h.name == name) return h.id;
    throw Error("unknown host " + name);
  }
  std::optional<NodeId> host_by_addr(Addr a) const {
    if (auto it = addr_index_.find(a); it != addr_index_.end()) return it->second;
    return std::nullopt;
  }

  // Highest per-source admitted count in any one-second meter window.
  std::uint32_t max_admitted_per_window() const {
    std::uint32_t m = 0;
    for (const auto& [k, v] : meters_) m = std::max(m, v.max_admitted);
    return m;
  }

  RunStats stats() const {
    RunStats s = counters_;
    s.events = queue_.executed();
    for (std::size_t i = 0; i < packets_.size(); ++i) {
      const auto& f = flight_[i];
      const auto& p = packets_[i];
      if (f.delivered) {
        ++s.delivered;
        if (p.kind == PacketKind::CbrData) ++s.cbr_delivered;
        if (p.kind == PacketKind::AttackFlood) ++s.flood_delivered;
      } else if (f.live == 0) {
        ++s.dropped;
      } else {
        ++s.in_flight;
      }
    }
    return s;
  }

  // Switches a packet from `from` to `to` would traverse under the current
  // tables; throws Unreachable if it would be dropped or hit an isolated
  // switch.
  std::uint32_t route_hops(NodeId from, NodeId to) const {
    const Host& src = hosts_.at(from);
    const Host& dst = hosts_.at(to);
    SwitchId s = src.sw;
    PortId in = src.port;
    for (std::uint32_t hops = 1; hops <= switches_.size() + 1; ++hops) {
      const Switch& sw = switches_.at(s);
      if (sw.isolated()) throw Unreachable(src.name, dst.name);
      const Action a = sw.peek({in, src.addr, dst.addr, 6});
      PortId out;
      if (a.kind == Action::Kind::Forward) out = a.port;
      else if (a.kind == Action::Kind::ToController && cfg_.mode == Mode::OpenflowOnly) out = route_port(s, dst);
      else throw Unreachable(src.name, dst.name);
      auto nb = sw.ports().find(out);
      if (nb == sw.ports().end()) throw Unreachable(src.name, dst.name);
      if (nb->second.kind != Neighbor::Kind::Switch) {
        if (hosts_.at(nb->second.id).addr == dst.addr) return hops;
        throw Unreachable(src.name, dst.name);
      }
      const Switch& next = switches_.at(nb->second.id);
      if (next.isolated()) throw Unreachable(src.name, dst.name);
      in = *next.port_to(Neighbor::Kind::Switch, s);
      s = next.id();
    }
    throw Unreachable(src.name, dst.name);
  }

  // Sends a request from client to server; the server answers on arrival.
  // Both packets count as RTR packets. Returns the idle-fabric round trip.
  double rtr_exchange(NodeId client, NodeId server) {
    const auto hops = route_hops(client, server);
    route_hops(server, client);
    start_rtr(client, server);
    const double tx = 8.0 * cfg_.rtr_packet_size / cfg_.data_rate_bps;
    return 2 * (hops * cfg_.hop_delay_s + (hops + 1) * tx);
  }

  // Starts a paced, chunked transfer; returns its index in transfers().
  std::size_t file_transfer(NodeId src, NodeId dst, std::uint64_t bytes) {
    if (bytes == 0) throw Error("file_transfer: file_bytes must be > 0");
    route_hops(src, dst);
    TransferRecord t;
    t.src = src;
    t.dst = dst;
    t.bytes = bytes;
    t.start = now_;
    t.chunks = static_cast<std::uint32_t>((bytes + cfg_.packet_size_max - 1) / cfg_.packet_size_max);
    transfers_.push_back(t);
    chunk_got_.emplace_back(t.chunks, false);
    chunks_delivered_.push_back(0);
    const std::size_t ti = transfers_.size() - 1;
    emit_chunk(ti, 0);
    return ti;
  }

  MetricsReport report() const;
  std::vector<std::string> write_outputs(const std::filesystem::path& dir) const;

 private:
  struct Flight {
    std::uint32_t live = 1;
    bool delivered = false;
  };
  struct Meter {
    std::int64_t window = -1;
    std::uint32_t admitted = 0;
    std::uint32_t max_admitted = 0;
  };
  struct Microflow {
    double installed;
    double last_seen;
    FlowRule rule;
  };
  struct RtrInfo {
    bool request;
    NodeId client;
    NodeId server;
    double started;
  };
  using FlowKey = std::tuple<SwitchId, Addr, Addr>;

  // ------------------------------------------------------------ assembly

  NodeId add_host(std::string name, HostRole role, Addr addr, SwitchId sw) {
    Host h;
    h.id = static_cast<NodeId>(hosts_.size());
    h.name = std::move(name);
    h.role = role;
    h.addr = addr;
    h.sw = sw;
    auto& s = switches_.at(sw);
    h.port = static_cast<PortId>(3 + next_host_port_[sw]++);
    s.connect(h.port, {role == HostRole::Gateway ? Neighbor::Kind::Gateway : Neighbor::Kind::Host, h.id});
    addr_index_[addr] = h.id;
    hosts_.push_back(h);
    uplinks_.emplace_back(cfg_.data_rate_bps, cfg_.buffer_packets);
    return h.id;
  }

  // Port 1 faces the lower-numbered neighbour, port 2 the higher one.
  PortId route_port(SwitchId s, const Host& dst) const {
    if (dst.sw == s) return dst.port;
    return dst.sw < s ? 1 : 2;
  }

  void build_fabric() {
    const std::uint32_t n = cfg_.switches;
    const Action miss = cfg_.mode == Mode::OpenflowOnly ? Action::to_controller() : cfg_.table_miss;
    for (SwitchId s = 1; s <= n; ++s) {
      Switch sw(s, miss);
      if (s > 1) sw.connect(1, {Neighbor::Kind::Switch, s - 1});
      if (s < n) sw.connect(2, {Neighbor::Kind::Switch, s + 1});
      switches_.emplace(s, std::move(sw));
    }
    const SwitchId second = std::min<SwitchId>(2, n);
    gateways_ = {add_host("g1", HostRole::Gateway, make_addr(10, 0, 1, 1), 1),
                 add_host("g2", HostRole::Gateway, make_addr(10, 0, 1, 2), second)};
    cloud_ = add_host("cloud", HostRole::Cloud, make_addr(10, 0, 2, 1), n);
    client_ = add_host("client", HostRole::Client, make_addr(10, 0, 3, 1), 1);
    if (cfg_.attack) {
      for (std::uint32_t k = 0; k < cfg_.attack->sources; ++k) {
        bots_.push_back(add_host("bot" + std::to_string(k + 1), HostRole::Bot,
                                 make_addr(10, 0, 4, std::uint8_t(k + 1)), k % 2 == 0 ? 1 : second));
      }
    }
    for (const auto& [id, sw] : switches_)
      for (const auto& [port, nb] : sw.ports()) egress_.emplace(std::make_pair(id, port), Channel(cfg_.data_rate_bps, cfg_.buffer_packets));

    RuleSet initial;
    if (cfg_.mode == Mode::Distb) {
      for (const auto& [id, sw] : switches_) {
        for (NodeId h : {gateways_[0], gateways_[1], cloud_, client_}) {
          FlowRule r;
          r.dpid = id;
          r.priority = kProactivePriority;
          r.match.dst_addr = hosts_[h].addr;
          r.action = Action::forward(route_port(id, hosts_[h]));
          initial.insert(r);
        }
      }
    }
    ClusterOptions opts;
    opts.controllers = cfg_.controllers;
    opts.difficulty = cfg_.difficulty;
    opts.verification_period = cfg_.verification_period_s;
    opts.hop_delay = cfg_.hop_delay_s;
    cluster_ = std::make_unique<ControllerCluster>(switches_, initial, opts, 0.0);
    cluster_->set_defer([this](double delay, std::function<void()> fn) { at(now_ + delay, std::move(fn)); });

    AccessRegistry reg;
    for (const char* p : {"admin", "g1", "g2", "client"}) reg[p] = std::string(p) + "-secret";
    access_ = AccessPolicy(reg);
    for (NodeId h : {gateways_[0], gateways_[1], client_}) exempt_.insert(hosts_[h].addr);
  }

  void build_iot() {
    nodes_ = make_nodes(cfg_, root_);
    for (const auto& n : nodes_) initial_energy_ += n.energy;
    clusters_ = iot::partition_clusters(nodes_, iot::default_cluster_count(nodes_.size()), cfg_.seed);
    stations_ = gateway_positions(cfg_);
    cbr_rng_ = root_.stream("cbr");
    baseline_rng_ = root_.stream("ch_baseline");
    mobility_rng_ = root_.stream("mobility");
    recluster_rng_ = root_.stream("recluster");
  }

  void schedule_sources() {
    if (cfg_.cbr_rate_pps > 0) at(0.0, [this] { iot_round(0); });
    if (cfg_.mode == Mode::Distb) at(cfg_.verification_period_s, [this] { verification_tick(1); });
    if (cfg_.mode == Mode::OpenflowOnly) at(1.0, [this] { sweep_microflows(); });
    if (cfg_.attack) {
      schedule_ = cfg_.attack->schedule(hosts_[cloud_].addr);
      RngStream rng = root_.stream("attack");
      for (std::size_t k = 0; k < bots_.size(); ++k) generators_.emplace_back(schedule_, rng.uniform());
      for (std::size_t k = 0; k < bots_.size(); ++k) next_flood(k);
    }
    tamper_rng_ = root_.stream("tamper");
    for (std::size_t i = 0; i < cfg_.tamper.size(); ++i) at(cfg_.tamper[i].time_s, [this, i] { tamper_tick(i); });
    for (const auto& f : cfg_.file_transfers) {
      at(f.time_s, [this, bytes = f.bytes] {
        try {
          file_transfer(client_, cloud_, bytes);
        } catch (const Unreachable&) {
          TransferRecord t;
          t.src = client_;
          t.dst = cloud_;
          t.bytes = bytes;
          t.start = now_;
          t.failed = true;
          transfers_.push_back(t);
          chunk_got_.emplace_back();
          chunks_delivered_.push_back(0);
        }
      });
    }
  }

  // ------------------------------------------------------------- packets

  std::uint64_t new_packet(PacketKind kind, Addr src, Addr dst, std::uint32_t size) {
    Packet p;
    p.id = packets_.size();
    p.kind = kind;
    p.src = src;
    p.dst = dst;
    p.size = size;
    p.proto = (kind == PacketKind::RtrControl || kind == PacketKind::FileChunk) ? 6 : 17;
    p.sent_at = now_;
    packets_.push_back(p);
    flight_.push_back({});
    ++counters_.sent;
    if (kind == PacketKind::CbrData) ++counters_.cbr_sent;
    if (kind == PacketKind::RtrControl) ++counters_.rtr_packets;
    if (kind == PacketKind::AttackFlood) ++counters_.flood_sent;
    return p.id;
  }

  void send_from_host(NodeId h, std::uint64_t id) {
    const Host& host = hosts_[h];
    auto dep = uplinks_[h].admit(now_, packets_[id].size);
    if (!dep) return drop_copy(id, "queue");
    at(*dep, [this, s = host.sw, p = host.port, id] { arrive_switch(s, p, id); });
  }

  void arrive_switch(SwitchId s, PortId in_port, std::uint64_t id) {
    Switch& sw = switches_.at(s);
    if (sw.isolated()) return drop_copy(id, "isolated");
    const Packet& p = packets_[id];
    const Neighbor from = sw.ports().at(in_port);
    if (from.kind != Neighbor::Kind::Switch && cfg_.mitigation && !exempt_.count(p.src)) {
      if (!meter_admit(s, p.src)) return drop_copy(id, "meter");
    }
    const PacketHeader h{in_port, p.src, p.dst, p.proto};
    const Action a = sw.forward(h);
    if (from.kind == Neighbor::Kind::Switch && taps_[s].size() < kTapLimit)
      taps_[s].emplace_back(cluster_->delivery_epoch(s), TapObservation{h, a});
    switch (a.kind) {
      case Action::Kind::Forward:
        if (cfg_.mode == Mode::OpenflowOnly) {
          if (auto m = micro_.find({s, p.src, p.dst}); m != micro_.end()) m->second.last_seen = now_;
        }
        return egress(s, a.port, id, now_ + cfg_.hop_delay_s);
      case Action::Kind::Flood: {
        std::vector<PortId> out;
        for (const auto& [port, nb] : sw.ports())
          if (port != in_port) out.push_back(port);
        if (out.empty()) return drop_copy(id, "flood_no_port");
        flight_[id].live += static_cast<std::uint32_t>(out.size() - 1);
        for (auto port : out) egress(s, port, id, now_ + cfg_.hop_delay_s);
        return;
      }
      case Action::Kind::Drop: return drop_copy(id, "rule");
      case Action::Kind::ToController: return packet_in(s, id);
    }
  }

  void egress(SwitchId s, PortId port, std::uint64_t id, double t) {
    const Switch& sw = switches_.at(s);
    auto it = sw.ports().find(port);
    if (it == sw.ports().end()) return drop_copy(id, "no_port");
    const Neighbor nb = it->second;
    if (nb.kind == Neighbor::Kind::Switch && switches_.at(nb.id).isolated()) return drop_copy(id, "isolated");
    auto dep = egress_.at({s, port}).admit(t, packets_[id].size);
    if (!dep) return drop_copy(id, "queue");
    if (nb.kind == Neighbor::Kind::Switch) {
      const PortId back = *switches_.at(nb.id).port_to(Neighbor::Kind::Switch, s);
      at(*dep, [this, n = nb.id, back, id] { arrive_switch(n, back, id); });
    } else {
      at(*dep, [this, h = nb.id, id] { arrive_host(h, id); });
    }
  }

  void arrive_host(NodeId h, std::uint64_t id) {
    if (hosts_[h].addr != packets_[id].dst) return drop_copy(id, "misdelivered");
    auto& f = flight_[id];
    --f.live;
    if (f.delivered) return;
    f.delivered = true;
    packets_[id].delivered_at = now_;
    on_delivered(h, id);
  }

  void drop_copy(std::uint64_t id, const char* reason) {
    ++counters_.drop_reasons[reason];
    auto& f = flight_[id];
    --f.live;
    if (f.live == 0 && !f.delivered) on_dropped(id);
  }

  void on_delivered(NodeId h, std::uint64_t id) {
    const Packet& p = packets_[id];
    if (p.kind == PacketKind::RtrControl) {
      auto it = rtr_.find(id);
      if (it == rtr_.end()) return;
      const RtrInfo info = it->second;
      rtr_.erase(it);
      if (info.request) {
        const auto resp = new_packet(PacketKind::RtrControl, hosts_[h].addr, hosts_[info.client].addr,
                                     cfg_.rtr_packet_size);
        rtr_[resp] = {false, info.client, info.server, info.started};
        send_from_host(h, resp);
      } else {
        rtts_.emplace_back(now_, now_ - info.started);
      }
    } else if (p.kind == PacketKind::FileChunk) {
      auto it = chunk_of_.find(id);
      if (it == chunk_of_.end()) return;
      const auto [ti, k] = it->second;
      chunk_of_.erase(it);
      if (chunk_got_[ti][k]) return;
      chunk_got_[ti][k] = true;
      if (++chunks_delivered_[ti] == transfers_[ti].chunks)
        transfers_[ti].response = now_ + cfg_.cloud_store_latency_s - transfers_[ti].start;
    }
  }

  void on_dropped(std::uint64_t id) {
    const Packet& p = packets_[id];
    if (p.kind == PacketKind::RtrControl) {
      rtr_.erase(id);
    } else if (p.kind == PacketKind::FileChunk) {
      auto it = chunk_of_.find(id);
      if (it == chunk_of_.end()) return;
      const auto [ti, k] = it->second;
      chunk_of_.erase(it);
      if (chunk_got_[ti][k]) return;
      ++transfers_[ti].retransmissions;
      at(now_ + cfg_.retransmit_timeout_s, [this, ti, k] { send_chunk(ti, k); });
    }
  }

  // ------------------------------------------------------- control path

  void packet_in(SwitchId s, std::uint64_t id) {
    cluster_->charge(cluster_->master_of(s), cluster_->options().costs.packet_in, "packet_in", now_);
    ++counters_.packet_ins;
    if (cfg_.mode == Mode::Distb) return drop_copy(id, "table_miss");
    const Packet& p = packets_[id];
    const FlowKey key{s, p.src, p.dst};
    auto& waiting = pending_in_[key];
    waiting.push_back(id);
    if (waiting.size() > 1) return;
    at(now_ + 2 * cfg_.hop_delay_s, [this, key] { resolve_packet_in(key); });
  }

  // Reactive controller: install a microflow toward the destination and
  // release the buffered packets.
  void resolve_packet_in(const FlowKey& key) {
    auto waiting = std::move(pending_in_[key]);
    pending_in_.erase(key);
    const auto [s, src, dst] = key;
    const auto dst_host = host_by_addr(dst);
    if (!dst_host) {
      for (auto id : waiting) drop_copy(id, "no_route");
      return;
    }
    const PortId port = route_port(s, hosts_[*dst_host]);
    Switch& sw = switches_.at(s);
    FlowRule r;
    r.dpid = s;
    r.priority = kMicroflowPriority;
    r.match.src_addr = src;
    r.match.dst_addr = dst;
    r.action = Action::forward(port);
    if (!sw.table().contains_key(r)) {
      sw.add_rule(r);
      micro_[key] = {now_, now_, r};
    }
    for (auto id : waiting) egress(s, port, id, now_ + cfg_.hop_delay_s);
  }

  void sweep_microflows() {
    for (auto it = micro_.begin(); it != micro_.end();) {
      const auto& m = it->second;
      if (now_ - m.last_seen >= kIdleTimeout || now_ - m.installed >= kHardTimeout) {
        switches_.at(m.rule.dpid).remove_rule(m.rule);
        it = micro_.erase(it);
      } else {
        ++it;
      }
    }
    if (now_ + 1.0 <= cfg_.duration_s) at(now_ + 1.0, [this] { sweep_microflows(); });
  }

  bool meter_admit(SwitchId s, Addr src) {
    auto& m = meters_[{s, src}];
    const auto w = static_cast<std::int64_t>(std::floor(now_));
    if (w != m.window) {
      m.window = w;
      m.admitted = 0;
    }
    if (m.admitted < cfg_.mitigation_cap_pps) {
      ++m.admitted;
      m.max_admitted = std::max(m.max_admitted, m.admitted);
      return true;
    }
    report_source(s, src);
    return false;
  }

  // The edge switch reports an over-rate source; the controller answers
  // with a drop rule for it at that switch.
  void report_source(SwitchId s, Addr src) {
    if (!blocked_.insert({s, src}).second) return;
    cluster_->charge(cluster_->master_of(s), cluster_->options().costs.packet_in, "meter", now_);
    at(now_ + 2 * cfg_.hop_delay_s, [this, s, src] {
      FlowRule r;
      r.dpid = s;
      r.priority = kMitigationPriority;
      r.match.src_addr = src;
      r.action = Action::drop();
      if (cfg_.mode == Mode::Distb) {
        RuleSet next = cluster_->effective_rules();
        next.upsert(r);
        cluster_->submit_rule_update(next, now_);
      } else {
        switches_.at(s).add_rule(r);
      }
    });
  }

  void verification_tick(std::uint64_t k) {
    if (cluster_->broadcast_pending()) {
      at(now_ + cfg_.hop_delay_s, [this, k] { verification_tick(k); });
      return;
    }
    std::map<SwitchId, std::vector<TapObservation>> taps;
    for (const auto& [s, obs] : taps_)
      for (const auto& [epoch, o] : obs)
        if (epoch == cluster_->delivery_epoch(s)) taps[s].push_back(o);
    taps_.clear();
    ++counters_.verification_rounds;
    const auto verdicts = cluster_->run_verification_round(now_, cfg_.forwarding_detection ? &taps : nullptr);
    for (const auto& [id, v] : verdicts) {
      if (v.consistent()) continue;
      at(now_ + cfg_.quarantine_s, [this, id = id] {
        if (cluster_->is_quarantined(id)) cluster_->reinstate_switch(id, now_);
      });
    }
    const double next = static_cast<double>(k + 1) * cfg_.verification_period_s;
    if (next <= cfg_.duration_s) at(std::max(next, now_), [this, k] { verification_tick(k + 1); });
  }

  // ------------------------------------------------------------ sources

  void iot_round(std::uint64_t r) {
    const double dt = 1.0 / cfg_.cbr_rate_pps;
    if (cfg_.mobility && r > 0) {
      iot::MobilityOptions mo;
      mo.area_m = cfg_.area_m;
      for (auto& n : nodes_)
        if (!n.dead) iot::random_waypoint_step(n, dt, mobility_rng_, mo);
      clusters_ = iot::partition_clusters(nodes_, iot::default_cluster_count(nodes_.size()),
                                          recluster_rng_.next_u64());
    }
    ++counters_.iot_rounds;
    const auto opts = round_options(cfg_);
    for (auto& c : clusters_) {
      const auto bytes = static_cast<std::uint32_t>(cbr_rng_.uniform_int(cfg_.packet_size_min, cfg_.packet_size_max));
      const bool alive = std::any_of(c.members.begin(), c.members.end(), [&](auto id) { return !nodes_[id].dead; });
      if (!alive) continue;
      const std::size_t g = nearest_index(stations_, c.centroid);
      iot::BaseStation bs{stations_[g], cfg_.station_energy_j};
      iot::RoundResult res;
      if (cfg_.ch_protocol == ChProtocol::Alg1) {
        const auto head = iot::select_head(nodes_, c, cfg_.lds_band);
        c.head = head;
        for (auto id : c.members) nodes_[id].role = id == head ? iot::Role::ClusterHead : iot::Role::Member;
        res = iot::transmit_round(nodes_, c, bs, 8.0 * bytes, opts, &energy_, now_);
      } else {
        res = iot::baseline_round(nodes_, c, bs, 8.0 * bytes, baseline_rng_, opts, &energy_, now_);
      }
      if (!res.delivered || res.readings == 0) continue;
      at(now_ + res.end_to_end_delay, [this, gw = gateways_[g], sources = res.sources, bytes] {
        for (auto n : sources) {
          send_from_host(gw, new_packet(PacketKind::CbrData, device_addr(n), hosts_[cloud_].addr, bytes));
        }
        start_rtr(gw, cloud_);
      });
    }
    const double next = static_cast<double>(r + 1) * dt;
    if (next < cfg_.duration_s) at(next, [this, r] { iot_round(r + 1); });
  }

  void start_rtr(NodeId client, NodeId server) {
    const auto id = new_packet(PacketKind::RtrControl, hosts_[client].addr, hosts_[server].addr, cfg_.rtr_packet_size);
    rtr_[id] = {true, client, server, now_};
    send_from_host(client, id);
  }

  void next_flood(std::size_t k) {
    auto t = generators_[k].next();
    if (!t || *t >= cfg_.duration_s) return;
    at(std::max(*t, now_), [this, k] {
      send_from_host(bots_[k], new_packet(PacketKind::AttackFlood, hosts_[bots_[k]].addr, hosts_[cloud_].addr,
                                          schedule_.packet_size));
      next_flood(k);
    });
  }

  void emit_chunk(std::size_t ti, std::uint32_t k) {
    send_chunk(ti, k);
    if (k + 1 >= transfers_[ti].chunks) return;
    const double gap = 8.0 * cfg_.packet_size_max / cfg_.data_rate_bps;
    at(now_ + gap, [this, ti, k] { emit_chunk(ti, k + 1); });
  }

  void send_chunk(std::size_t ti, std::uint32_t k) {
    const auto& t = transfers_[ti];
    const std::uint64_t offset = std::uint64_t(k) * cfg_.packet_size_max;
    const auto size = static_cast<std::uint32_t>(std::min<std::uint64_t>(cfg_.packet_size_max, t.bytes - offset));
    const auto id = new_packet(PacketKind::FileChunk, hosts_[t.src].addr, hosts_[t.dst].addr, size);
    chunk_of_[id] = {ti, k};
    send_from_host(t.src, id);
  }

  void tamper_tick(std::size_t i) {
    const auto& tc = cfg_.tamper[i];
    const SwitchId target =
        tc.switch_id ? tc.switch_id : static_cast<SwitchId>(1 + tamper_rng_.uniform_int(0, cfg_.switches - 1));
    Switch& sw = switches_.at(target);
    const Addr cloud = hosts_[cloud_].addr;
    TamperMutation m;
    m.kind = tc.mutation;
    if (m.kind == TamperMutation::Kind::AddRule) {
      m.rule.dpid = target;
      m.rule.priority = kMitigationPriority;
      m.rule.match.dst_addr = cloud;
      m.rule.action = Action::drop();
    } else {
      const FlowRule* victim = nullptr;
      for (const auto& [k, r] : sw.table())
        if (!victim || (r.match.dst_addr == cloud && victim->match.dst_addr != cloud)) victim = &r;
      if (victim) {
        m.rule = *victim;
        m.new_priority = static_cast<std::uint16_t>(victim->priority + 1);
      }
    }
    TamperRecord rec;
    rec.time = now_;
    rec.target = target;
    rec.kind = m.kind;
    rec.applied = (m.kind == TamperMutation::Kind::AddRule || m.rule.dpid == target) && tamper_switch(sw, m);
    tamper_log_.push_back(rec);
    if (rec.applied && tc.revert_after_s) {
      const std::size_t idx = tamper_log_.size() - 1;
      at(now_ + *tc.revert_after_s, [this, idx, m] { revert_tamper(idx, m); });
    }
  }

  void revert_tamper(std::size_t idx, const TamperMutation& m) {
    Switch& sw = switches_.at(tamper_log_[idx].target);
    if (!sw.compromised()) return;
    bool done = false;
    switch (m.kind) {
      case TamperMutation::Kind::AddRule: {
        FlowRule r = m.rule;
        r.dpid = sw.id();
        done = sw.remove_rule(r);
        break;
      }
      case TamperMutation::Kind::DropRule: done = sw.add_rule(m.rule); break;
      case TamperMutation::Kind::EditPriority: {
        FlowRule edited = m.rule;
        edited.priority = m.new_priority;
        if (sw.remove_rule(edited)) done = sw.add_rule(m.rule);
        break;
      }
    }
    if (done) {
      sw.set_compromised(false);
      tamper_log_[idx].reverted_at = now_;
    }
  }

  ScenarioConfig cfg_;
  RngRoot root_;
  EventQueue queue_;
  double now_ = 0;

  std::map<SwitchId, Switch> switches_;
  std::unique_ptr<ControllerCluster> cluster_;
  AccessPolicy access_;
  std::vector<Host> hosts_;
  std::map<Addr, NodeId> addr_index_;
  std::map<SwitchId, std::uint32_t> next_host_port_;
  std::vector<NodeId> gateways_;
  NodeId cloud_ = 0;
  NodeId client_ = 0;
  std::vector<NodeId> bots_;
  std::set<Addr> exempt_;
  std::vector<Channel> uplinks_;
  std::map<std::pair<SwitchId, PortId>, Channel> egress_;

  std::vector<Packet> packets_;
  std::vector<Flight> flight_;
  RunStats counters_;

  std::map<std::pair<SwitchId, Addr>, Meter> meters_;
  std::set<std::pair<SwitchId, Addr>> blocked_;
  std::map<SwitchId, std::vector<std::pair<std::uint64_t, TapObservation>>> taps_;
  std::map<FlowKey, Microflow> micro_;
  std::map<FlowKey, std::vector<std::uint64_t>> pending_in_;

  std::unordered_map<std::uint64_t, RtrInfo> rtr_;
  std::vector<std::pair<double, double>> rtts_;
  std::vector<TransferRecord> transfers_;
  std::vector<std::vector<bool>> chunk_got_;
  std::vector<std::uint32_t> chunks_delivered_;
  std::unordered_map<std::uint64_t, std::pair<std::size_t, std::uint32_t>> chunk_of_;

  std::vector<iot::SensorNode> nodes_;
  std::vector<iot::Cluster> clusters_;
  std::vector<iot::Vec2> stations_;
  iot::EnergyLedger energy_;
  double initial_energy_ = 0;
  RngStream cbr_rng_, baseline_rng_, mobility_rng_, recluster_rng_, tamper_rng_;

  AttackSchedule schedule_;
  std::vector<RampGenerator> generators_;
  std::vector<TamperRecord> tamper_log_;
};

// ---------------------------------------------------------------- report

inline std::vector<EnergyEntry> energy_entries(const World& w) {
  const auto& cfg = w.config();
  std::vector<EnergyEntry> out;
  out.push_back({0.0, EnergyComponent::CloudStorage, 2 * cfg.cloud_block_j});  // the two genesis blocks
  for (const auto& e : w.cluster().work_log()) {
    out.push_back({e.time, EnergyComponent::Controllers, e.units * cfg.controller_unit_j});
    if (std::string_view(e.reason) == "block_mined")
      out.push_back({e.time, EnergyComponent::CloudStorage, cfg.cloud_block_j});
  }
  for (const auto& d : w.energy_ledger().entries()) out.push_back({d.time, EnergyComponent::IoTDevices, -d.delta_j});
  return out;
}

inline std::vector<SeriesPoint> cpu_series(const World& w) {
  const auto& cfg = w.config();
  const auto n = static_cast<std::size_t>(std::ceil(cfg.duration_s / cfg.cpu_window_s - 1e-9));
  std::vector<double> units(n, 0.0);
  for (const auto& e : w.cluster().work_log()) {
    const auto k = static_cast<std::size_t>(std::floor(e.time / cfg.cpu_window_s));
    if (k < n) units[k] += e.units;
  }
  const double capacity = cfg.controllers * cfg.controller_capacity_units_s * cfg.cpu_window_s;
  std::vector<SeriesPoint> out;
  for (std::size_t k = 0; k < n; ++k)
    out.push_back({static_cast<double>(k) * cfg.cpu_window_s, std::min(100.0, 100.0 * units[k] / capacity)});
  return out;
}

// Mean one-way CBR latency per 100-byte size bucket.
inline std::vector<SeriesPoint> latency_by_size(const std::vector<Packet>& packets) {
  std::map<std::uint32_t, std::pair<double, std::uint64_t>> buckets;
  for (const auto& p : packets) {
    if (p.kind != PacketKind::CbrData || !p.delivered_at) continue;
    auto& b = buckets[p.size / 100 * 100];
    b.first += *p.delivered_at - p.sent_at;
    ++b.second;
  }
  std::vector<SeriesPoint> out;
  for (const auto& [size, b] : buckets) out.push_back({double(size), b.first / double(b.second)});
  return out;
}

inline MetricsReport World::report() const {
  MetricsReport r;
  const RunStats s = stats();
  r.node_count = nodes_.size();
  r.throughput_bps = throughput(packets_, cfg_.duration_s);
  r.overhead_defined = s.cbr_delivered > 0;
  if (r.overhead_defined) r.overhead_ratio = comm_overhead(s.rtr_packets, s.cbr_delivered);
  r.bandwidth_series = bandwidth_series(packets_, cfg_.bandwidth_window_s, cfg_.duration_s);
  r.latency_by_size = latency_by_size(packets_);
  for (const auto& t : transfers_)
    if (t.response) r.response_times.push_back({double(t.bytes), *t.response});
  r.energy_by_component = energy_report(energy_entries(*this));
  r.cpu_series = cpu_series(*this);
  const auto& attempts = cluster_->mining_attempts();
  const auto gas = gas_model(attempts.size(), attempts);
  r.gas_total = gas.gas_total;
  r.tx_processing_times = gas.processing_times;

  auto kv = [&](std::string k, std::string v) { r.summary.emplace_back(std::move(k), std::move(v)); };
  auto num = [](std::uint64_t v) { return std::to_string(v); };
  kv("mode", to_string(cfg_.mode));
  kv("mode_label", cfg_.mode == Mode::Distb ? "distb" : "openflow-only (BCF stand-in)");
  kv("preset", cfg_.preset);
  kv("seed", num(cfg_.seed));
  kv("node_count", num(nodes_.size()));
  kv("duration_s", fmt_num(cfg_.duration_s));
  kv("throughput_bps", fmt_num(r.throughput_bps));
  kv("throughput_mbps", fmt_num(r.throughput_bps / 1e6));
  kv("overhead_ratio", r.overhead_defined ? fmt_num(r.overhead_ratio) : "undefined");
  kv("packets_sent", num(s.sent));
  kv("packets_delivered", num(s.delivered));
  kv("packets_dropped", num(s.dropped));
  kv("packets_in_flight", num(s.in_flight));
  kv("cbr_sent", num(s.cbr_sent));
  kv("cbr_delivered", num(s.cbr_delivered));
  kv("rtr_packets", num(s.rtr_packets));
  kv("flood_sent", num(s.flood_sent));
  kv("flood_delivered", num(s.flood_delivered));
  kv("packet_ins", num(s.packet_ins));
  for (const auto& [reason, n] : s.drop_reasons) kv("drops_" + reason, num(n));
  kv("iot_rounds", num(s.iot_rounds));
  kv("verification_rounds", num(s.verification_rounds));
  kv("control_chain_length", num(cluster_->control_chain().size()));
  kv("data_chain_length", num(cluster_->data_chain().size()));
  kv("control_head", to_hex(cluster_->control_chain().head().block_hash));
  kv("data_head", to_hex(cluster_->data_chain().head().block_hash));
  kv("isolation_orders", num(cluster_->isolation_orders()));
  kv("tamper_events", num(tamper_log_.size()));
  kv("controller_work_units", fmt_num(cluster_->total_work()));
  for (const auto& [c, j] : r.energy_by_component) kv(std::string("energy_") + to_string(c) + "_j", fmt_num(j));
  kv("iot_energy_remaining_j", fmt_num(initial_energy_ + energy_.total()));
  kv("gas_total", fmt_num(r.gas_total));
  kv("events", num(s.events));
  return r;
}

inline std::vector<std::string> World::write_outputs(const std::filesystem::path& dir) const {
  auto written = emit_report(report(), dir);
  auto put = [&](const char* name, const std::string& content) {
    detail::write_file(dir / name, content);
    written.emplace_back(name);
  };
  if (cfg_.write_trace) {
    std::string t = "id,kind,src,dst,size,sent,delivered\n";
    for (const auto& p : packets_) {
      t += std::to_string(p.id) + "," + to_string(p.kind) + "," + addr_to_string(p.src) + "," +
           addr_to_string(p.dst) + "," + std::to_string(p.size) + "," + fmt_num(p.sent_at) + "," +
           (p.delivered_at ? fmt_num(*p.delivered_at) : "") + "\n";
    }
    put("trace.csv", t);
  }
  std::string e = "time,node,delta_J,reason\n";
  for (const auto& d : energy_.entries())
    e += fmt_num(d.time) + "," + std::to_string(d.node) + "," + fmt_num(d.delta_j) + "," + d.reason + "\n";
  put("energy_ledger.csv", e);
  std::string iso = "time,switch,action\n";
  for (const auto& ev : cluster_->isolation_log())
    iso += fmt_num(ev.time) + "," + std::to_string(ev.target) + "," + ev.action + "\n";
  put("isolation.csv", iso);
  std::string acc = "time,principal,decision\n";
  for (const auto& a : access_.log())
    acc += fmt_num(a.time) + "," + a.principal + "," + (a.decision == AccessDecision::Granted ? "granted" : "denied") + "\n";
  put("access_log.csv", acc);
  std::string rtt = "t_s,rtt_s\n";
  for (const auto& [t, v] : rtts_) rtt += fmt_num(t) + "," + fmt_num(v) + "\n";
  put("rtt.csv", rtt);
  write_chain((dir / "control_chain.bin").string(), cluster_->control_chain());
  written.emplace_back("control_chain.bin");
  write_chain((dir / "data_chain.bin").string(), cluster_->data_chain());
  written.emplace_back("data_chain.bin");
  return written;
}

inline MetricsReport run_scenario(const ScenarioConfig& cfg) {
  World w(cfg);
  w.run();
  return w.report();
}

// ------------------------------------------------------------- scenarios

// Fig. 7 setting: a blackhole rule is slipped into a seed-chosen switch at
// 30% of the run.
inline ScenarioConfig throughput_sweep_config(ScenarioConfig base) {
  base.tamper = {TamperConfig{0.3 * base.duration_s, 0, TamperMutation::Kind::AddRule, std::nullopt}};
  base.write_trace = false;
  return base;
}

struct ThroughputRow {
  std::uint32_t nodes;
  Mode mode;
  double throughput_bps;
};

inline std::vector<ThroughputRow> scenario_throughput_vs_nodes(const std::vector<std::uint32_t>& counts,
                                                               const ScenarioConfig& base) {
  std::vector<ThroughputRow> out;
  for (auto n : counts) {
    for (Mode m : {Mode::Distb, Mode::OpenflowOnly}) {
      ScenarioConfig c = base;
      c.topology.clear();
      c.node_count = n;
      c.mode = m;
      c.write_trace = false;
      World w(c);
      w.run();
      out.push_back({n, m, throughput(w.packets(), c.duration_s)});
    }
  }
  return out;
}

inline double window_mean(const std::vector<SeriesPoint>& s, double from, double to) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& p : s)
    if (p.t >= from && p.t < to) {
      sum += p.value;
      ++n;
    }
  return n ? sum / double(n) : 0.0;
}

struct DdosResult {
  std::vector<SeriesPoint> nominal, baseline, distb;
  std::vector<SeriesPoint> cpu_baseline, cpu_distb;
  double peak_from = 0, peak_to = 0;
  double nominal_peak = 0, baseline_peak = 0, distb_peak = 0;
};

// Attack ramp against the cloud: nominal (no attack), baseline
// (openflow-only, mitigation off) and distb (mitigation on).
inline DdosResult scenario_ddos(ScenarioConfig base) {
  if (!base.attack) base.attack = AttackConfig{};
  const auto& a = *base.attack;
  base.duration_s = std::max(base.duration_s, a.start_s + a.ramp_s + a.hold_s);
  base.write_trace = false;
  base.tamper.clear();
  DdosResult r;
  r.peak_from = a.start_s + a.ramp_s;
  r.peak_to = std::min(base.duration_s, a.start_s + a.ramp_s + std::max(a.hold_s, base.bandwidth_window_s));

  auto run = [&](Mode mode, bool mitigation, bool attack, std::vector<SeriesPoint>* cpu) {
    ScenarioConfig c = base;
    c.mode = mode;
    c.mitigation = mitigation;
    if (!attack) c.attack.reset();
    World w(c);
    w.run();
    if (cpu) *cpu = cpu_series(w);
    return bandwidth_series(w.packets(), c.bandwidth_window_s, c.duration_s);
  };
  r.nominal = run(Mode::Distb, true, false, nullptr);
  r.baseline = run(Mode::OpenflowOnly, false, true, &r.cpu_baseline);
  r.distb = run(Mode::Distb, true, true, &r.cpu_distb);
  r.nominal_peak = window_mean(r.nominal, r.peak_from, r.peak_to);
  r.baseline_peak = window_mean(r.baseline, r.peak_from, r.peak_to);
  r.distb_peak = window_mean(r.distb, r.peak_from, r.peak_to);
  return r;
}

struct RateRow {
  double rate_pps;
  Mode mode;
  double bandwidth_bps;
};

// Flat flood at each rate; distb with mitigation against the
// openflow-only (BCF stand-in) fabric without it.
inline std::vector<RateRow> scenario_bandwidth_vs_rate(ScenarioConfig base, const std::vector<double>& rates) {
  std::vector<RateRow> out;
  base.write_trace = false;
  base.tamper.clear();
  const double start = std::min(5.0, base.duration_s / 4);
  for (double rate : rates) {
    for (Mode m : {Mode::Distb, Mode::OpenflowOnly}) {
      ScenarioConfig c = base;
      AttackConfig a;
      a.start_s = start;
      a.ramp_s = 0;
      a.hold_s = c.duration_s - start;
      a.from_pps = a.to_pps = rate;
      c.attack = a;
      c.mode = m;
      c.mitigation = m == Mode::Distb;
      World w(c);
      w.run();
      const auto s = bandwidth_series(w.packets(), c.bandwidth_window_s, c.duration_s);
      out.push_back({rate, m, window_mean(s, 2 * start, c.duration_s)});
    }
  }
  return out;
}

// One transfer per size from the client host to the cloud, each in its
// own run of the same scenario.
inline std::vector<SeriesPoint> scenario_response_times(ScenarioConfig base, const std::vector<std::uint64_t>& sizes) {
  std::vector<SeriesPoint> out;
  base.write_trace = false;
  base.attack.reset();
  base.tamper.clear();
  for (auto bytes : sizes) {
    ScenarioConfig c = base;
    c.file_transfers = {FileTransferConfig{1.0, bytes}};
    c.duration_s = std::max(base.duration_s, 1.0 + 4.0 * 8.0 * double(bytes) / c.data_rate_bps + 10.0);
    World w(c);
    w.run();
    const auto& t = w.transfers().at(0);
    if (!t.response) throw Error("file transfer of " + std::to_string(bytes) + " bytes did not complete");
    out.push_back({double(bytes), *t.response});
  }
  return out;
}

struct ChRow {
  std::uint32_t round;
  double alg1_energy, alg1_delay;
  double baseline_energy, baseline_delay;
  std::uint32_t alg1_readings, baseline_readings;
};

// Alg. 1 against the random-head baseline on identical copies of the
// sensor field, identical payloads per round.
inline std::vector<ChRow> scenario_ch_comparison(const ScenarioConfig& base, std::uint32_t rounds) {
  validate(base);
  const RngRoot root(base.seed);
  auto alg1 = make_nodes(base, root);
  auto plain = alg1;
  auto clusters = iot::partition_clusters(alg1, iot::default_cluster_count(alg1.size()), base.seed);
  const auto stations = gateway_positions(base);
  RngStream sizes = root.stream("cbr");
  RngStream heads = root.stream("ch_baseline");
  const auto opts = round_options(base);
  std::vector<ChRow> out;
  for (std::uint32_t r = 0; r < rounds; ++r) {
    ChRow row{r, 0, 0, 0, 0, 0, 0};
    double d1 = 0, d2 = 0;
    for (auto& c : clusters) {
      const double bits = 8.0 * double(sizes.uniform_int(base.packet_size_min, base.packet_size_max));
      const iot::BaseStation bs{stations[nearest_index(stations, c.centroid)], base.station_energy_j};
      if (std::any_of(c.members.begin(), c.members.end(), [&](auto id) { return !alg1[id].dead; })) {
        c.head = iot::select_head(alg1, c, base.lds_band);
        const auto res = iot::transmit_round(alg1, c, bs, bits, opts);
        row.alg1_energy += res.total_energy();
        row.alg1_readings += res.readings;
        d1 += res.end_to_end_delay * res.readings;
      }
      if (std::any_of(c.members.begin(), c.members.end(), [&](auto id) { return !plain[id].dead; })) {
        const auto res = iot::baseline_round(plain, c, bs, bits, heads, opts);
        row.baseline_energy += res.total_energy();
        row.baseline_readings += res.readings;
        d2 += res.end_to_end_delay * res.readings;
      }
    }
    row.alg1_delay = row.alg1_readings ? d1 / row.alg1_readings : 0;
    row.baseline_delay = row.baseline_readings ? d2 / row.baseline_readings : 0;
    out.push_back(row);
  }
  return out;
}

}  // namespace distb
