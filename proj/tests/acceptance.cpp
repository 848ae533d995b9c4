// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "distb/gateway.hpp"

using namespace distb;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int n, const std::string& name, bool ok, const std::string& detail, double seconds) {
  if (!ok) ++failures;
  char t[32];
  std::snprintf(t, sizeof t, "%.1fs", seconds);
  std::cout << (ok ? "PASS" : "FAIL") << "  " << n << ". " << name << ": " << detail << " [" << t << "]"
            << std::endl;
}

template <class F>
void criterion(int n, const std::string& name, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  std::string detail;
  try {
    ok = f(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  report(n, name, ok, detail, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

RuleSet some_rules(RngStream& rng) {
  RuleSet s;
  const auto n = rng.uniform_int(0, 4);
  for (std::uint64_t i = 0; i < n; ++i) {
    FlowRule r;
    r.dpid = static_cast<SwitchId>(rng.uniform_int(1, 4));
    r.priority = static_cast<std::uint16_t>(rng.uniform_int(0, 100));
    r.match.dst_addr = static_cast<Addr>(rng.uniform_int(1, 1u << 20));
    r.action = Action::forward(static_cast<PortId>(rng.uniform_int(1, 4)));
    s.insert(r);
  }
  return s;
}

// ----------------------------------------------------------------- 1

bool formula_exactness(std::string& d) {
  RngStream rng = RngRoot(1).stream("traces");
  double worst_tp = 0, worst_oh = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Packet> trace;
    const auto n = rng.uniform_int(1, 300);
    std::uint64_t rtr = 0, cbr = 0, bytes = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      Packet p;
      p.kind = rng.uniform() < 0.8 ? PacketKind::CbrData : PacketKind::RtrControl;
      p.size = static_cast<std::uint32_t>(rng.uniform_int(64, 1500));
      if (rng.uniform() < 0.9) p.delivered_at = rng.uniform(0, 100);
      if (p.kind == PacketKind::RtrControl) ++rtr;
      if (p.kind == PacketKind::CbrData && p.delivered_at) {
        ++cbr;
        bytes += p.size;
      }
      trace.push_back(p);
    }
    const double T = rng.uniform(1, 500);
    worst_tp = std::max(worst_tp, std::abs(throughput(trace, T) - 8.0 * double(bytes) / T));
    if (cbr) worst_oh = std::max(worst_oh, std::abs(comm_overhead(rtr, cbr) - double(rtr) / double(cbr)));
  }
  d = "max|d throughput|=" + fmt(worst_tp) + ", max|d overhead|=" + fmt(worst_oh) + " (tol 1e-9, 1000 traces)";
  return worst_tp <= 1e-9 && worst_oh <= 1e-9;
}

// ----------------------------------------------------------------- 2

bool chain_integrity(std::string& d) {
  RngStream rng = RngRoot(2).stream("chains");
  const std::uint32_t diff = 8;
  int flagged = 0, located = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto len = rng.uniform_int(1, 50);
    Chain c = Chain::control(some_rules(rng), diff, 0);
    while (c.size() < len) append_rules(c, some_rules(rng), static_cast<std::uint32_t>(c.size()));
    auto blocks = c.blocks();
    const auto i = rng.uniform_int(0, blocks.size() - 1);
    auto& b = blocks[i];
    switch (rng.uniform_int(0, 8)) {
      case 0: b.header.version ^= 1u << rng.uniform_int(0, 31); break;
      case 1: b.header.prev_hash[rng.uniform_int(0, 31)] ^= std::uint8_t(1u << rng.uniform_int(0, 7)); break;
      case 2: b.header.payload_digest[rng.uniform_int(0, 31)] ^= std::uint8_t(1u << rng.uniform_int(0, 7)); break;
      case 3: b.header.timestamp ^= 1u << rng.uniform_int(0, 31); break;
      case 4: b.header.difficulty = diff + 1 + static_cast<std::uint32_t>(rng.uniform_int(0, 4)); break;
      case 5: b.header.nonce ^= 1u << rng.uniform_int(0, 31); break;
      case 6: b.payload.push_back(' '); break;
      case 7: b.index += 1 + rng.uniform_int(0, 3); break;
      default: b.block_hash[rng.uniform_int(0, 31)] ^= std::uint8_t(1u << rng.uniform_int(0, 7)); break;
    }
    const auto f = validate_chain(Chain::from_blocks(ChainKind::Control, diff, blocks));
    if (f) {
      ++flagged;
      located += f->index == i;
    }
  }
  d = "flagged " + std::to_string(flagged) + "/500, correct index " + std::to_string(located) + "/500 (need 100%)";
  return flagged == 500 && located == 500;
}

// ----------------------------------------------------------------- 3

bool pow_statistics(std::string& d) {
  Chain c = Chain::data(8, 0);
  double sum = 0;
  for (int i = 0; i < 200; ++i) {
    DumpRecord rec;
    rec.switch_digests[1] = sha256(std::to_string(i));
    const Block& b = c.mine_and_append(rec, static_cast<std::uint32_t>(i));
    sum += double(b.header.nonce) + 1;
  }
  const double mean = sum / 200;
  d = "mean attempts at difficulty 8 = " + fmt(mean) + " (band [128, 512], 200 blocks)";
  return mean >= 128 && mean <= 512;
}

// ----------------------------------------------------------------- 4

bool rogue_switch(std::string& d) {
  int exact = 0, false_pos = 0, late = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    ScenarioConfig c = preset_p1();
    c.seed = seed;
    c.duration_s = 25;
    c.write_trace = false;
    RngStream rng = RngRoot(seed).stream("acceptance_tamper");
    TamperConfig t;
    t.time_s = rng.uniform(1, 14);
    t.switch_id = static_cast<SwitchId>(rng.uniform_int(1, c.switches));
    t.mutation = static_cast<TamperMutation::Kind>(rng.uniform_int(0, 2));
    c.tamper = {t};
    World w(c);
    w.run();
    std::vector<IsolationEvent> iso;
    for (const auto& e : w.cluster().isolation_log())
      if (e.action == "isolate") iso.push_back(e);
    const bool ok = iso.size() == 1 && iso[0].target == t.switch_id && w.tamper_log().at(0).applied;
    exact += ok;
    if (ok && iso[0].time - t.time_s > c.verification_period_s + 1e-9) ++late;
  }
  for (std::uint64_t seed = 101; seed <= 200; ++seed) {
    ScenarioConfig c = preset_p1();
    c.seed = seed;
    c.duration_s = 25;
    c.write_trace = false;
    World w(c);
    w.run();
    false_pos += static_cast<int>(w.cluster().isolation_orders());
  }
  d = "exact isolation " + std::to_string(exact) + "/100, late " + std::to_string(late) +
      ", false isolations " + std::to_string(false_pos) + " in 100 clean runs";
  return exact == 100 && late == 0 && false_pos == 0;
}

// ----------------------------------------------------------------- 5

bool ddos_trend(std::string& d) {
  ScenarioConfig c = load_config(fs::path(DISTB_CONFIGS) / "ddos.json");
  const auto r = scenario_ddos(c);
  const double base = r.baseline_peak / r.nominal_peak, dist = r.distb_peak / r.nominal_peak;
  d = "peak window [" + fmt(r.peak_from) + ", " + fmt(r.peak_to) + ") s: nominal " + fmt(r.nominal_peak) +
      " bps, baseline " + fmt(100 * base, 3) + "% (need <= 50%), distb " + fmt(100 * dist, 3) + "% (need >= 90%)";
  return r.nominal_peak > 0 && base <= 0.5 && dist >= 0.9;
}

// ----------------------------------------------------------------- 6

bool throughput_trend(std::string& d) {
  bool ok = true;
  d.clear();
  for (std::uint32_t n : {30u, 40u, 50u}) {
    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      ScenarioConfig c = throughput_sweep_config(preset_p1());
      c.seed = seed;
      const auto rows = scenario_throughput_vs_nodes({n}, c);
      wins += rows.at(0).throughput_bps >= rows.at(1).throughput_bps;
    }
    ok = ok && wins >= 16;
    d += "n=" + std::to_string(n) + ": " + std::to_string(wins) + "/20  ";
  }
  d += "(need >= 16/20 each)";
  return ok;
}

// ----------------------------------------------------------------- 7

bool response_trend(std::string& d) {
  const std::vector<std::uint64_t> sizes{64 << 10, 256 << 10, 1 << 20, 4 << 20};
  int monotone = 0;
  std::vector<SeriesPoint> first;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ScenarioConfig c = preset_p1();
    c.seed = seed;
    c.duration_s = 20;
    const auto r = scenario_response_times(c, sizes);
    bool mono = true;
    for (std::size_t i = 1; i < r.size(); ++i) mono = mono && r[i].value >= r[i - 1].value;
    monotone += mono;
    if (seed == 1) first = r;
  }
  d = "non-decreasing in " + std::to_string(monotone) + "/10 seeds; seed 1:";
  for (const auto& p : first) d += " " + fmt(p.value, 3) + "s";
  return monotone == 10;
}

// ----------------------------------------------------------------- 8

std::uint32_t oracle_head(const std::vector<iot::SensorNode>& nodes, const iot::Cluster& c, double band) {
  double lds = INFINITY;
  for (auto id : c.members)
    if (!nodes[id].dead) lds = std::min(lds, iot::distance(nodes[id].position, c.centroid));
  std::tuple<double, double, long> best{-INFINITY, 0, 0};
  for (auto id : c.members) {
    if (nodes[id].dead) continue;
    const double dist = iot::distance(nodes[id].position, c.centroid);
    if (dist <= lds * (1 + band)) best = std::max(best, std::make_tuple(nodes[id].energy, -dist, -long(id)));
  }
  return static_cast<std::uint32_t>(-std::get<2>(best));
}

bool ch_trends(std::string& d) {
  double e1 = 0, e2 = 0, d1 = 0, d2 = 0;
  std::uint64_t r1 = 0, r2 = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    ScenarioConfig c = preset_p1();
    c.seed = seed;
    c.node_count = 50;
    c.gate = iot::GateSemantics::BudgetCheck;
    for (const auto& row : scenario_ch_comparison(c, 200)) {
      e1 += row.alg1_energy;
      e2 += row.baseline_energy;
      d1 += row.alg1_delay * row.alg1_readings;
      d2 += row.baseline_delay * row.baseline_readings;
      r1 += row.alg1_readings;
      r2 += row.baseline_readings;
    }
  }
  const double rounds = 20 * 200;
  const double me1 = e1 / rounds, me2 = e2 / rounds, md1 = d1 / double(r1), md2 = d2 / double(r2);

  RngStream rng = RngRoot(8).stream("acceptance_heads");
  int agree = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = rng.uniform_int(1, 15);
    std::vector<iot::SensorNode> nodes(n);
    iot::Cluster cl;
    for (std::uint32_t i = 0; i < n; ++i) {
      nodes[i].id = i;
      nodes[i].position = {double(rng.uniform_int(0, 6)) * 10, double(rng.uniform_int(0, 6)) * 10};
      nodes[i].energy = 10 + double(rng.uniform_int(0, 5)) * 0.5;
      nodes[i].dead = i > 0 && rng.uniform() < 0.1;
      cl.members.push_back(i);
    }
    cl.centroid = iot::centroid_of(nodes, cl.members);
    agree += iot::select_head(nodes, cl) == oracle_head(nodes, cl, iot::kDefaultLdsBand);
  }
  d = "mean round energy alg1 " + fmt(me1 * 1e3) + " mJ vs baseline " + fmt(me2 * 1e3) + " mJ; mean delay " +
      fmt(md1 * 1e3) + " ms vs " + fmt(md2 * 1e3) + " ms; head oracle " + std::to_string(agree) + "/1000";
  return me1 < me2 && md1 < md2 && agree == 1000;
}

// ----------------------------------------------------------------- 9

bool energy_split(std::string& d) {
  ScenarioConfig c = load_config(fs::path(DISTB_CONFIGS) / "p2.json");
  c.write_trace = false;
  auto controllers = [&](Mode m) {
    ScenarioConfig x = c;
    x.mode = m;
    World w(x);
    w.run();
    return w.report().energy_by_component.at(EnergyComponent::Controllers);
  };
  const double distb = controllers(Mode::Distb), openflow = controllers(Mode::OpenflowOnly);
  const double ratio = distb / openflow;
  d = "controllers distb " + fmt(distb) + " J vs openflow-only " + fmt(openflow) + " J, ratio " + fmt(ratio, 3) +
      " (need <= 0.7)";
  return openflow > 0 && ratio <= 0.7;
}

// ----------------------------------------------------------------- 10

bool gas_model_check(std::string& d) {
  Chain c = Chain::control({}, kDefaultDifficulty, 0);
  std::vector<std::uint64_t> attempts;
  for (int i = 0; i < 400; ++i) {
    FlowRule r;
    r.dpid = 1;
    r.priority = static_cast<std::uint16_t>(i);
    attempts.push_back(std::uint64_t(append_rules(c, RuleSet{r}, i).header.nonce) + 1);
  }
  const GasModel m;
  double mx = 0, my = 0;
  const std::vector<std::uint64_t> ns{100, 400, 800};
  for (auto n : ns) {
    mx += double(n) / 3;
    my += gas_model(n, attempts, m).gas_total / 3;
  }
  double sxy = 0, sxx = 0;
  for (auto n : ns) {
    sxy += (double(n) - mx) * (gas_model(n, attempts, m).gas_total - my);
    sxx += (double(n) - mx) * (double(n) - mx);
  }
  const double slope = sxy / sxx;
  // Jitter band: the base time plus at most 16 expected mining times.
  const double expected_mining = std::ldexp(1.0, kDefaultDifficulty) * m.hash_time_s;
  const auto r = gas_model(400, attempts, m);
  double lo = INFINITY, hi = 0, mean = 0;
  for (const auto& p : r.processing_times) {
    lo = std::min(lo, p.value);
    hi = std::max(hi, p.value);
    mean += p.value / 400;
  }
  const bool band = lo >= m.base_time_s && hi <= m.base_time_s + 16 * expected_mining &&
                    mean - m.base_time_s >= 0.5 * expected_mining && mean - m.base_time_s <= 2 * expected_mining;
  d = "slope " + fmt(slope, 10) + " (exact 21000); proc time " + fmt(lo * 1e3) + ".." + fmt(hi * 1e3) +
      " ms, mean " + fmt(mean * 1e3) + " ms (band 5 ms + [0, 16] x " + fmt(expected_mining * 1e3) + " ms)";
  return slope == m.gas_per_tx && band;
}

// ----------------------------------------------------------------- 11

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DISTB_CLI) + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

bool determinism(std::string& d) {
  const fs::path base = fs::temp_directory_path() / "distb_acceptance_det";
  fs::remove_all(base);
  const std::string cfg = (fs::path(DISTB_CONFIGS) / "p1.json").string();
  for (const auto& [name, seed] : std::vector<std::pair<std::string, int>>{{"a", 7}, {"b", 7}, {"c", 8}}) {
    if (run_cli("run " + cfg + " --seed " + std::to_string(seed) + " --out " + (base / name).string()) != 0) {
      d = "cli run failed";
      return false;
    }
  }
  int files = 0, same = 0, differ = 0;
  for (const auto& f : fs::directory_iterator(base / "a")) {
    ++files;
    same += slurp(f.path()) == slurp(base / "b" / f.path().filename());
    differ += slurp(f.path()) != slurp(base / "c" / f.path().filename());
  }
  d = "seed 7 twice: " + std::to_string(same) + "/" + std::to_string(files) + " files identical; seed 8: " +
      std::to_string(differ) + " files differ";
  return files > 0 && same == files && differ > 0;
}

// ----------------------------------------------------------------- 12

bool gateway_round_trip(std::string& d) {
  ScenarioConfig c = preset_p1();
  c.duration_s = 30;
  World w(c);
  w.run_until(6);
  Gateway g(w);
  const int port = g.bind_any("127.0.0.1");
  if (port <= 0) {
    d = "cannot bind";
    return false;
  }
  std::thread t([&] { g.listen(); });
  for (int i = 0; i < 200 && !g.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  httplib::Client cli("127.0.0.1", port);
  const std::string body = R"([{"dpid":1,"priority":10,"match":{"nw_dst":"10.0.2.1"},"actions":["OUTPUT:2"]}])";

  auto before = cli.Get("/chain");
  auto posted = cli.Post("/rules", {{"Authorization", "Bearer admin:admin-secret"}}, body, "application/json");
  auto after = cli.Get("/chain");
  auto denied = cli.Post("/rules", {{"Authorization", "Bearer admin:forged"}}, body, "application/json");
  auto after_denied = cli.Get("/chain");
  auto desc = cli.Get("/stats/desc/1");
  auto flow = cli.Get("/stats/flow/1");
  g.stop();
  t.join();
  if (!before || !posted || !after || !denied || !after_denied || !desc || !flow) {
    d = "http request failed";
    return false;
  }
  const auto chain_before = nlohmann::json::parse(before->body);
  const auto chain = nlohmann::json::parse(after->body);
  const auto post_body = nlohmann::json::parse(posted->body);
  const bool shows = posted->status == 200 && chain.size() == chain_before.size() + 1 &&
                     chain.back()["hash"] == post_body["hash"];
  std::vector<Block> blocks;
  for (const auto& b : chain) blocks.push_back(block_from_json(b));
  const bool chain_valid = !validate_chain(Chain::from_blocks(ChainKind::Control, kDefaultDifficulty, blocks));
  const RuleSet offline = RuleSet::from_json(nlohmann::json::parse(flow->body)["flows"]);
  const bool hash_ok = nlohmann::json::parse(desc->body)["table_hash"] == to_hex(sha256(offline.canonical_bytes()));
  const bool deny_ok = denied->status == 403 && nlohmann::json::parse(after_denied->body).size() == chain.size() &&
                       grant_access({"admin", "forged"}, w.access().registry()) == AccessDecision::Denied;
  d = std::string("POST->GET /chain ") + (shows ? "shows block" : "MISSING block") + ", served chain " +
      (chain_valid ? "valid" : "INVALID") + ", desc hash " + (hash_ok ? "matches" : "MISMATCH") +
      ", bad token " + (deny_ok ? "denied (403)" : "NOT denied");
  return shows && chain_valid && hash_ok && deny_ok;
}

}  // namespace

int main() {
  criterion(1, "formula exactness", formula_exactness);
  criterion(2, "chain integrity", chain_integrity);
  criterion(3, "PoW statistics", pow_statistics);
  criterion(4, "rogue-switch detection", rogue_switch);
  criterion(5, "DDoS trend", ddos_trend);
  criterion(6, "throughput trend", throughput_trend);
  criterion(7, "response-time trend", response_trend);
  criterion(8, "cluster-head trends", ch_trends);
  criterion(9, "energy split direction", energy_split);
  criterion(10, "gas model", gas_model_check);
  criterion(11, "determinism", determinism);
  criterion(12, "gateway round-trip", gateway_round_trip);
  std::cout << (failures ? std::to_string(failures) + " criterion(s) failed" : std::string("all 12 criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
