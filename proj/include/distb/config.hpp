#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "flow.hpp"
#include "iot.hpp"
#include "ledger.hpp"
#include "traffic.hpp"

namespace distb {

enum class Mode { Distb, OpenflowOnly };
enum class ChProtocol { Alg1, Baseline };

inline const char* to_string(Mode m) { return m == Mode::Distb ? "distb" : "openflow-only"; }

struct AttackConfig {
  double start_s = 10;
  double ramp_s = 100;
  double hold_s = 10;
  double from_pps = 190;
  double to_pps = 1400;
  std::uint32_t sources = 6;
  std::uint32_t packet_size = 512;

  AttackSchedule schedule(Addr target) const {
    auto s = AttackSchedule::ramp(start_s, ramp_s, hold_s, from_pps, to_pps);
    s.sources = sources;
    s.packet_size = packet_size;
    s.targets = {target};
    return s;
  }
};

struct TamperConfig {
  double time_s = 0;
  SwitchId switch_id = 0;  // 0: chosen from the seed
  TamperMutation::Kind mutation = TamperMutation::Kind::AddRule;
  std::optional<double> revert_after_s;
};

struct FileTransferConfig {
  double time_s = 1;
  std::uint64_t bytes = 0;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  std::string preset = "p1";
  Mode mode = Mode::Distb;

  // IoT layer
  std::uint32_t node_count = 30;
  double area_m = 1000;
  double initial_energy_min = 12;
  double initial_energy_max = 15;
  double trust = 5;
  double cbr_rate_pps = 1;  // sensing rounds per second
  std::uint32_t packet_size_min = 100;
  std::uint32_t packet_size_max = 512;
  bool mobility = false;
  ChProtocol ch_protocol = ChProtocol::Alg1;
  double lds_band = iot::kDefaultLdsBand;
  iot::GateSemantics gate = iot::GateSemantics::AsWritten;
  double station_energy_j = 20;
  std::vector<iot::SensorNode> topology;  // empty: uniform placement

  // fabric
  double duration_s = 120;
  double data_rate_bps = 12e6;
  double hop_delay_s = 0.002;
  std::uint32_t buffer_packets = 1000;
  std::uint32_t switches = 4;
  std::uint32_t controllers = 5;
  std::uint32_t difficulty = kDefaultDifficulty;
  double verification_period_s = 5;
  double quarantine_s = 10;
  bool forwarding_detection = false;  // IDS taps in verification rounds
  Action table_miss = Action::drop();
  double cloud_store_latency_s = 0.003;
  std::uint32_t rtr_packet_size = 64;
  double retransmit_timeout_s = 0.2;

  // attack and defence
  bool mitigation = true;
  double mitigation_cap_pps = 200;
  std::optional<AttackConfig> attack;
  std::vector<TamperConfig> tamper;
  std::vector<FileTransferConfig> file_transfers;

  // accounting
  double controller_unit_j = 1e-3;
  double cloud_block_j = 0.5e-3;
  double controller_capacity_units_s = 20;
  double bandwidth_window_s = 1;
  double cpu_window_s = 1;
  bool write_trace = true;
};

// p1: 1-50 devices, 1000 x 1000 m, 12 Mbps, 100-512 B, 12-15 J.
inline ScenarioConfig preset_p1() { return ScenarioConfig{}; }

// p2: 100 devices, 3000 x 3000 m, 10 Mbps, 128-1024 B, 10-12 J.
inline ScenarioConfig preset_p2() {
  ScenarioConfig c;
  c.preset = "p2";
  c.node_count = 100;
  c.area_m = 3000;
  c.data_rate_bps = 10e6;
  c.packet_size_min = 128;
  c.packet_size_max = 1024;
  c.initial_energy_min = 10;
  c.initial_energy_max = 12;
  c.duration_s = 60;
  return c;
}

inline void validate(const ScenarioConfig& c) {
  auto fail = [](const char* path, const std::string& what) { throw ConfigError(path, what); };
  if (!(c.duration_s > 0)) fail("/duration_s", "must be > 0");
  if (c.node_count == 0) fail("/node_count", "must be >= 1");
  if (!(c.area_m > 0)) fail("/area_m", "must be > 0");
  if (!(c.data_rate_bps > 0)) fail("/data_rate_bps", "must be > 0");
  if (c.packet_size_min == 0 || c.packet_size_min > c.packet_size_max)
    fail("/packet_size", "range must be non-empty and start at >= 1 byte");
  if (c.initial_energy_min < 0 || c.initial_energy_min > c.initial_energy_max)
    fail("/initial_energy", "range must be non-empty and non-negative");
  if (c.cbr_rate_pps < 0) fail("/cbr_rate_pps", "must be >= 0");
  if (c.switches == 0) fail("/switches", "must be >= 1");
  if (c.controllers == 0) fail("/controllers", "must be >= 1");
  if (c.difficulty > kMaxDifficulty) fail("/difficulty", "must be <= " + std::to_string(kMaxDifficulty));
  if (!(c.verification_period_s > 0)) fail("/verification_period_s", "must be > 0");
  if (c.quarantine_s < 0) fail("/quarantine_s", "must be >= 0");
  if (c.hop_delay_s < 0) fail("/hop_delay_s", "must be >= 0");
  if (c.buffer_packets == 0) fail("/buffer_packets", "must be >= 1");
  if (c.lds_band < 0) fail("/lds_band", "must be >= 0");
  if (!(c.mitigation_cap_pps > 0)) fail("/mitigation_cap_pps", "must be > 0");
  if (!(c.bandwidth_window_s > 0)) fail("/windows/bandwidth_s", "must be > 0");
  if (!(c.cpu_window_s > 0)) fail("/windows/cpu_s", "must be > 0");
  if (!(c.controller_capacity_units_s > 0)) fail("/energy/controller_capacity_units_s", "must be > 0");
  if (c.attack) {
    const auto& a = *c.attack;
    if (a.start_s < 0) fail("/attack/start_s", "must be >= 0");
    if (a.ramp_s < 0) fail("/attack/ramp_s", "must be >= 0");
    if (a.hold_s < 0) fail("/attack/hold_s", "must be >= 0");
    if (a.from_pps < 0) fail("/attack/from_pps", "must be >= 0");
    if (a.to_pps < 0) fail("/attack/to_pps", "must be >= 0");
    if (a.packet_size == 0) fail("/attack/packet_size", "must be >= 1");
  }
  for (std::size_t i = 0; i < c.tamper.size(); ++i) {
    const auto& t = c.tamper[i];
    const std::string base = "/tamper/" + std::to_string(i);
    if (t.time_s < 0) throw ConfigError(base + "/time_s", "must be >= 0");
    if (t.switch_id > c.switches) throw ConfigError(base + "/switch", "no such switch");
    if (t.revert_after_s && *t.revert_after_s < 0) throw ConfigError(base + "/revert_after_s", "must be >= 0");
  }
  for (std::size_t i = 0; i < c.file_transfers.size(); ++i) {
    const std::string base = "/file_transfers/" + std::to_string(i);
    if (c.file_transfers[i].bytes == 0) throw ConfigError(base + "/bytes", "must be > 0");
    if (c.file_transfers[i].time_s < 0) throw ConfigError(base + "/time_s", "must be >= 0");
  }
  for (std::size_t i = 0; i < c.topology.size(); ++i) {
    const auto& n = c.topology[i];
    const std::string base = "/topology/nodes/" + std::to_string(i);
    if (n.id != i) throw ConfigError(base + "/id", "ids must be 0..n-1 in order");
    if (n.energy < 0) throw ConfigError(base + "/energy", "must be >= 0");
  }
}

// Topology file: one node per line, "id x y energy"; '#' starts a comment.
inline std::vector<iot::SensorNode> parse_topology(std::istream& in, const std::string& origin = "topology") {
  std::vector<iot::SensorNode> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::uint32_t id;
    double x, y, e;
    if (!(ls >> id)) continue;
    if (!(ls >> x >> y >> e)) throw ConfigError(origin + ":" + std::to_string(lineno), "expected 'id x y energy'");
    std::string extra;
    if (ls >> extra) throw ConfigError(origin + ":" + std::to_string(lineno), "trailing field '" + extra + "'");
    iot::SensorNode n;
    n.id = id;
    n.position = {x, y};
    n.energy = e;
    out.push_back(n);
  }
  return out;
}

namespace detail {

class Reader {
 public:
  Reader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
  }

  template <class F>
  void with(const char* key, F&& f) {
    seen_.push_back(key);
    if (auto it = j_.find(key); it != j_.end()) f(*it, path_ + "/" + key);
  }

  void number(const char* key, double& out) {
    with(key, [&](const nlohmann::json& v, const std::string& p) {
      if (!v.is_number()) throw ConfigError(p, "expected a number");
      out = v.get<double>();
    });
  }
  template <class U>
  void unsigned_int(const char* key, U& out) {
    with(key, [&](const nlohmann::json& v, const std::string& p) {
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        throw ConfigError(p, "expected a non-negative integer");
      const auto raw = v.get<std::uint64_t>();
      if (raw > std::numeric_limits<U>::max()) throw ConfigError(p, "value out of range");
      out = static_cast<U>(raw);
    });
  }
  void boolean(const char* key, bool& out) {
    with(key, [&](const nlohmann::json& v, const std::string& p) {
      if (!v.is_boolean()) throw ConfigError(p, "expected true or false");
      out = v.get<bool>();
    });
  }
  template <class E>
  void choice(const char* key, E& out, std::initializer_list<std::pair<const char*, E>> options) {
    with(key, [&](const nlohmann::json& v, const std::string& p) {
      std::string allowed;
      if (v.is_string()) {
        for (const auto& [name, val] : options)
          if (v.get<std::string>() == name) {
            out = val;
            return;
          }
      }
      for (const auto& [name, val] : options) allowed += std::string(allowed.empty() ? "" : "|") + name;
      throw ConfigError(p, "expected one of " + allowed);
    });
  }

  void reject_unknown() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool known = false;
      for (const auto& k : seen_) known = known || it.key() == k;
      if (!known) throw ConfigError(path_ + "/" + it.key(), "unknown field");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::vector<std::string> seen_;
};

inline void range(Reader& r, const char* key, auto& lo, auto& hi, auto read) {
  r.with(key, [&](const nlohmann::json& v, const std::string& p) {
    Reader sub(v, p);
    read(sub, "min", lo);
    read(sub, "max", hi);
    sub.reject_unknown();
  });
}

}  // namespace detail

// Parses a scenario config. Presets supply defaults; explicit fields
// override them. `base_dir` resolves a topology file reference.
inline ScenarioConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  if (!j.is_object()) throw ConfigError("/", "expected an object");
  auto schema = j.find("schema");
  if (schema == j.end()) throw ConfigError("/schema", "missing required field");
  if (!schema->is_number_integer() || schema->get<std::int64_t>() != 1)
    throw ConfigError("/schema", "unsupported schema version (expected 1)");

  ScenarioConfig c;
  if (auto p = j.find("preset"); p != j.end()) {
    if (!p->is_string()) throw ConfigError("/preset", "expected p1|p2|custom");
    const auto name = p->get<std::string>();
    if (name == "p1") c = preset_p1();
    else if (name == "p2") c = preset_p2();
    else if (name == "custom") {
      c = preset_p1();
      c.preset = "custom";
    } else throw ConfigError("/preset", "expected p1|p2|custom");
  }

  detail::Reader r(j, "");
  r.with("schema", [](const auto&, const auto&) {});
  r.with("preset", [](const auto&, const auto&) {});
  r.unsigned_int("seed", c.seed);
  r.choice("mode", c.mode, {{"distb", Mode::Distb}, {"openflow-only", Mode::OpenflowOnly}});
  r.unsigned_int("node_count", c.node_count);
  r.number("area_m", c.area_m);
  r.number("duration_s", c.duration_s);
  r.number("data_rate_bps", c.data_rate_bps);
  r.number("cbr_rate_pps", c.cbr_rate_pps);
  r.number("trust", c.trust);
  detail::range(r, "packet_size", c.packet_size_min, c.packet_size_max,
                [](detail::Reader& s, const char* k, std::uint32_t& v) { s.unsigned_int(k, v); });
  detail::range(r, "initial_energy", c.initial_energy_min, c.initial_energy_max,
                [](detail::Reader& s, const char* k, double& v) { s.number(k, v); });
  r.boolean("mobility", c.mobility);
  r.choice("ch_protocol", c.ch_protocol, {{"alg1", ChProtocol::Alg1}, {"baseline", ChProtocol::Baseline}});
  r.number("lds_band", c.lds_band);
  r.choice("gate_semantics", c.gate,
           {{"as-written", iot::GateSemantics::AsWritten}, {"budget-check", iot::GateSemantics::BudgetCheck}});
  r.number("station_energy_j", c.station_energy_j);
  r.number("hop_delay_s", c.hop_delay_s);
  r.unsigned_int("buffer_packets", c.buffer_packets);
  r.unsigned_int("switches", c.switches);
  r.unsigned_int("controllers", c.controllers);
  r.unsigned_int("difficulty", c.difficulty);
  r.number("verification_period_s", c.verification_period_s);
  r.number("quarantine_s", c.quarantine_s);
  r.boolean("forwarding_detection", c.forwarding_detection);
  r.choice("table_miss", c.table_miss, {{"drop", Action::drop()}, {"controller", Action::to_controller()}});
  r.number("cloud_store_latency_s", c.cloud_store_latency_s);
  r.unsigned_int("rtr_packet_size", c.rtr_packet_size);
  r.number("retransmit_timeout_s", c.retransmit_timeout_s);
  r.choice("mitigation", c.mitigation, {{"on", true}, {"off", false}});
  r.number("mitigation_cap_pps", c.mitigation_cap_pps);
  r.boolean("write_trace", c.write_trace);

  r.with("attack", [&](const nlohmann::json& v, const std::string& p) {
    if (v.is_null()) {
      c.attack.reset();
      return;
    }
    AttackConfig a;
    detail::Reader s(v, p);
    s.number("start_s", a.start_s);
    s.number("ramp_s", a.ramp_s);
    s.number("hold_s", a.hold_s);
    s.number("from_pps", a.from_pps);
    s.number("to_pps", a.to_pps);
    s.unsigned_int("sources", a.sources);
    s.unsigned_int("packet_size", a.packet_size);
    s.reject_unknown();
    c.attack = a;
  });

  r.with("tamper", [&](const nlohmann::json& v, const std::string& p) {
    if (!v.is_array()) throw ConfigError(p, "expected an array");
    c.tamper.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      TamperConfig t;
      detail::Reader s(v[i], p + "/" + std::to_string(i));
      s.number("time_s", t.time_s);
      s.unsigned_int("switch", t.switch_id);
      s.choice("mutation", t.mutation,
               {{"add_rule", TamperMutation::Kind::AddRule},
                {"drop_rule", TamperMutation::Kind::DropRule},
                {"edit_priority", TamperMutation::Kind::EditPriority}});
      s.with("revert_after_s", [&](const nlohmann::json& rv, const std::string& rp) {
        if (rv.is_null()) return;
        if (!rv.is_number()) throw ConfigError(rp, "expected a number");
        t.revert_after_s = rv.get<double>();
      });
      s.reject_unknown();
      c.tamper.push_back(t);
    }
  });

  r.with("file_transfers", [&](const nlohmann::json& v, const std::string& p) {
    if (!v.is_array()) throw ConfigError(p, "expected an array");
    c.file_transfers.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      FileTransferConfig f;
      detail::Reader s(v[i], p + "/" + std::to_string(i));
      s.number("time_s", f.time_s);
      s.unsigned_int("bytes", f.bytes);
      s.reject_unknown();
      c.file_transfers.push_back(f);
    }
  });

  r.with("topology", [&](const nlohmann::json& v, const std::string& p) {
    if (v.is_string()) {
      const auto file = base_dir / v.get<std::string>();
      std::ifstream in(file);
      if (!in) throw ConfigError(p, "cannot open topology file " + file.string());
      c.topology = parse_topology(in, file.string());
    } else if (v.is_object()) {
      detail::Reader s(v, p);
      s.with("nodes", [&](const nlohmann::json& nodes, const std::string& np) {
        if (!nodes.is_array()) throw ConfigError(np, "expected an array");
        c.topology.clear();
        for (std::size_t i = 0; i < nodes.size(); ++i) {
          iot::SensorNode n;
          detail::Reader ns(nodes[i], np + "/" + std::to_string(i));
          ns.unsigned_int("id", n.id);
          ns.number("x", n.position.x);
          ns.number("y", n.position.y);
          ns.number("energy", n.energy);
          ns.reject_unknown();
          c.topology.push_back(n);
        }
      });
      s.reject_unknown();
    } else {
      throw ConfigError(p, "expected a file name or {\"nodes\": [...]}");
    }
    if (!c.topology.empty()) c.node_count = static_cast<std::uint32_t>(c.topology.size());
  });

  r.with("energy", [&](const nlohmann::json& v, const std::string& p) {
    detail::Reader s(v, p);
    s.number("controller_unit_j", c.controller_unit_j);
    s.number("cloud_block_j", c.cloud_block_j);
    s.number("controller_capacity_units_s", c.controller_capacity_units_s);
    s.reject_unknown();
  });
  r.with("windows", [&](const nlohmann::json& v, const std::string& p) {
    detail::Reader s(v, p);
    s.number("bandwidth_s", c.bandwidth_window_s);
    s.number("cpu_s", c.cpu_window_s);
    s.reject_unknown();
  });
  r.reject_unknown();
  validate(c);
  return c;
}

inline ScenarioConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(file.string(), "cannot open config file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(file.string(), std::string("not valid JSON: ") + e.what());
  }
  return parse_config(j, file.parent_path());
}

// DISTB_SEED, when set, replaces the config seed.
inline void apply_env_overrides(ScenarioConfig& c) {
  const char* s = std::getenv("DISTB_SEED");
  if (!s || !*s) return;
  char* end = nullptr;
  const auto v = std::strtoull(s, &end, 10);
  if (*end != '\0') throw ConfigError("DISTB_SEED", "expected an unsigned integer");
  c.seed = v;
}

}  // namespace distb
