// distb: run scenarios, sweep figures, serve the gateway, validate chains.

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "distb/config.hpp"
#include "distb/engine.hpp"
#include "distb/gateway.hpp"
#include "distb/ledger.hpp"
#include "distb/metrics.hpp"

namespace fs = std::filesystem;
using namespace distb;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kBadConfig = 2;
constexpr int kRuntime = 3;

void put(const fs::path& dir, const std::string& name, const std::string& content) {
  detail::write_file(dir / name, content);
  std::cout << (dir / name).string() << "\n";
}

int cmd_run(const std::string& config, std::optional<std::uint64_t> seed, const std::string& out,
            const std::string& mode) {
  ScenarioConfig cfg = load_config(config);
  apply_env_overrides(cfg);
  if (seed) cfg.seed = *seed;
  if (mode == "distb") cfg.mode = Mode::Distb;
  else if (mode == "openflow-only") cfg.mode = Mode::OpenflowOnly;
  validate(cfg);
  World w(cfg);
  w.run();
  fs::create_directories(out);
  for (const auto& f : w.write_outputs(out)) std::cout << (fs::path(out) / f).string() << "\n";
  return kOk;
}

void figures_p1(const fs::path& out, std::uint64_t seed) {
  ScenarioConfig base = preset_p1();
  base.seed = seed;
  base.write_trace = false;

  std::string s = "nodes,mode,throughput_bps,throughput_mbps\n";
  for (const auto& r : scenario_throughput_vs_nodes({10, 20, 30, 40, 50}, throughput_sweep_config(base)))
    s += std::to_string(r.nodes) + "," + to_string(r.mode) + "," + fmt_num(r.throughput_bps) + "," +
         fmt_num(r.throughput_bps / 1e6) + "\n";
  put(out, "fig7_throughput.csv", s);

  const auto ddos = scenario_ddos(base);
  const AttackConfig attack;
  const auto sched = attack.schedule(0);
  s = "t_s,attack_pps,nominal_bps,baseline_bps,distb_bps\n";
  for (std::size_t i = 0; i < ddos.nominal.size(); ++i) {
    const double t = ddos.nominal[i].t;
    s += fmt_num(t) + "," + fmt_num(sched.rate_at(t) * attack.sources) + "," + fmt_num(ddos.nominal[i].value) +
         "," + fmt_num(ddos.baseline[i].value) + "," + fmt_num(ddos.distb[i].value) + "\n";
  }
  put(out, "fig8_ddos_bandwidth.csv", s);

  s = "file_bytes,response_s\n";
  for (const auto& p : scenario_response_times(base, {65536, 262144, 1048576, 4194304}))
    s += fmt_num(p.t) + "," + fmt_num(p.value) + "\n";
  put(out, "fig9_response.csv", s);

  ScenarioConfig short_run = base;
  short_run.duration_s = 30;
  s = "rate_pps,mode,bits_per_s\n";
  for (const auto& r : scenario_bandwidth_vs_rate(short_run, {190, 400, 800, 1200, 1400}))
    s += fmt_num(r.rate_pps) + "," + (r.mode == Mode::Distb ? "distb" : "bcf-openflow-only") + "," +
         fmt_num(r.bandwidth_bps) + "\n";
  put(out, "fig10_bandwidth_vs_bcf.csv", s);

  s = "bytes,mode,latency_s\n";
  const std::vector<std::uint64_t> sizes{1024, 4096, 16384, 65536, 262144};
  for (Mode m : {Mode::Distb, Mode::OpenflowOnly}) {
    ScenarioConfig c = short_run;
    c.mode = m;
    for (const auto& p : scenario_response_times(c, sizes))
      s += fmt_num(p.t) + "," + (m == Mode::Distb ? "distb" : "bcf-openflow-only") + "," + fmt_num(p.value) + "\n";
  }
  put(out, "fig11_latency.csv", s);

  s = "t_s,baseline_cpu_pct,distb_cpu_pct\n";
  for (std::size_t i = 0; i < ddos.cpu_baseline.size(); ++i)
    s += fmt_num(ddos.cpu_baseline[i].t) + "," + fmt_num(ddos.cpu_baseline[i].value) + "," +
         fmt_num(ddos.cpu_distb[i].value) + "\n";
  put(out, "fig12_cpu.csv", s);
}

void figures_p2(const fs::path& out, std::uint64_t seed) {
  ScenarioConfig base = preset_p2();
  base.seed = seed;
  base.write_trace = false;

  std::string s = "nodes,mode,throughput_bps,throughput_mbps\n";
  for (const auto& r : scenario_throughput_vs_nodes({20, 40, 60, 80, 100}, throughput_sweep_config(base)))
    s += std::to_string(r.nodes) + "," + to_string(r.mode) + "," + fmt_num(r.throughput_bps) + "," +
         fmt_num(r.throughput_bps / 1e6) + "\n";
  put(out, "p2_throughput.csv", s);

  s = "mode,component,joules\n";
  for (Mode m : {Mode::Distb, Mode::OpenflowOnly}) {
    ScenarioConfig c = base;
    c.mode = m;
    c.mobility = true;
    for (const auto& [comp, j] : run_scenario(c).energy_by_component)
      s += std::string(to_string(m)) + "," + to_string(comp) + "," + fmt_num(j) + "\n";
  }
  put(out, "p2_energy.csv", s);

  // One rule-update transaction per block.
  Chain chain = Chain::control({}, base.difficulty, 1'600'000'000);
  std::vector<std::uint64_t> attempts;
  for (std::uint32_t i = 1; i <= 400; ++i) {
    FlowRule r;
    r.dpid = 1 + i % base.switches;
    r.priority = static_cast<std::uint16_t>(i);
    r.action = Action::drop();
    const Block& b = chain.mine_and_append(RuleUpdate{RuleSet{r}}, 1'600'000'000 + i);
    attempts.push_back(std::uint64_t(b.header.nonce) + 1);
  }
  const GasModel gm;
  const auto gas = gas_model(attempts.size(), attempts, gm);
  s = "tx,gas,proc_time_s\n";
  for (const auto& p : gas.processing_times)
    s += fmt_num(p.t) + "," + fmt_num(gm.gas_per_tx * p.t) + "," + fmt_num(p.value) + "\n";
  put(out, "p2_gas.csv", s);

  ScenarioConfig ch = base;
  ch.gate = iot::GateSemantics::BudgetCheck;
  s = "round,alg1_energy_j,alg1_delay_s,baseline_energy_j,baseline_delay_s\n";
  for (const auto& r : scenario_ch_comparison(ch, 200))
    s += std::to_string(r.round) + "," + fmt_num(r.alg1_energy) + "," + fmt_num(r.alg1_delay) + "," +
         fmt_num(r.baseline_energy) + "," + fmt_num(r.baseline_delay) + "\n";
  put(out, "p2_ch.csv", s);
}

int cmd_validate(const std::string& file) {
  LoadedChain loaded;
  try {
    loaded = read_chain_file(file);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadConfig;
  }
  if (loaded.blocks.empty()) {
    std::cout << "invalid: no decodable block at index 0\n";
    return kInvalid;
  }
  const Chain chain = chain_from_loaded(loaded);
  if (auto fault = validate_chain(chain)) {
    std::cout << "invalid: block " << fault->index << ": " << to_string(fault->error) << "\n";
    return kInvalid;
  }
  if (loaded.corrupt_at) {
    std::cout << "invalid: block " << *loaded.corrupt_at << ": truncated or undecodable record\n";
    return kInvalid;
  }
  std::cout << "valid: " << chain.size() << " blocks, head " << to_hex(chain.head().block_hash) << "\n";
  return kOk;
}

// Recomputes throughput and overhead from a packet trace.
int cmd_replay(const std::string& file, double duration) {
  std::ifstream in(file);
  if (!in) throw ConfigError(file, "cannot open trace");
  std::string line;
  std::getline(in, line);
  if (line != "id,kind,src,dst,size,sent,delivered") throw ConfigError(file, "not a packet trace");
  std::vector<Packet> packets;
  std::uint64_t rtr = 0, cbr = 0;
  double last = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() == 6) f.emplace_back();
    if (f.size() != 7) throw ConfigError(file, "malformed row: " + line);
    Packet p;
    p.id = std::stoull(f[0]);
    p.kind = f[1] == "cbr" ? PacketKind::CbrData
             : f[1] == "rtr" ? PacketKind::RtrControl
             : f[1] == "flood" ? PacketKind::AttackFlood
                               : PacketKind::FileChunk;
    p.size = static_cast<std::uint32_t>(std::stoul(f[4]));
    p.sent_at = std::stod(f[5]);
    if (!f[6].empty()) p.delivered_at = std::stod(f[6]);
    if (p.kind == PacketKind::RtrControl) ++rtr;
    if (p.kind == PacketKind::CbrData && p.delivered_at) ++cbr;
    last = std::max(last, p.delivered_at.value_or(p.sent_at));
    packets.push_back(p);
  }
  if (duration <= 0) duration = last;
  std::cout << "packets=" << packets.size() << "\n";
  std::cout << "throughput_bps=" << fmt_num(throughput(packets, duration)) << "\n";
  std::cout << "overhead_ratio=" << (cbr ? fmt_num(comm_overhead(rtr, cbr)) : std::string("undefined")) << "\n";
  return kOk;
}

Gateway* g_gateway = nullptr;
extern "C" void on_signal(int) {
  if (g_gateway) g_gateway->stop();
}

int cmd_serve(const std::string& config, const std::string& host, int port, double until) {
  ScenarioConfig cfg = load_config(config);
  apply_env_overrides(cfg);
  World w(cfg);
  if (until > 0) w.run_until(until);
  Gateway gw(w);
  g_gateway = &gw;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "serving on http://" << host << ":" << port << " (simulated t=" << w.now() << " s)\n";
  if (!gw.serve(host, port)) {
    std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
    return kRuntime;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DistB-SDCloud simulator"};
  app.require_subcommand(1);

  std::string config, out = "out", mode, which, chainfile, host = "127.0.0.1", trace;
  std::optional<std::uint64_t> seed;
  std::uint64_t fig_seed = 1;
  int port = 8080;
  double until = 0, duration = 0;

  auto* run = app.add_subcommand("run", "Run one scenario and write its report CSVs");
  run->add_option("config", config, "Scenario config (JSON, schema 1)")->required();
  run->add_option("--seed", seed, "Override the config seed (beats DISTB_SEED)");
  run->add_option("--out", out, "Output directory")->capture_default_str();
  run->add_option("--mode", mode, "Fabric mode")->check(CLI::IsMember({"distb", "openflow-only"}));

  auto* figs = app.add_subcommand("figures", "Run the canned figure sweeps, one CSV per figure");
  figs->add_option("preset", which, "p1 or p2")->required()->check(CLI::IsMember({"p1", "p2"}));
  figs->add_option("--out", out, "Output directory")->capture_default_str();
  figs->add_option("--seed", fig_seed, "Seed for every sweep")->capture_default_str();

  auto* serve = app.add_subcommand("serve", "Serve the REST gateway over a live scenario");
  serve->add_option("config", config, "Scenario config (JSON, schema 1)")->required();
  serve->add_option("--port", port, "TCP port")->capture_default_str();
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--until", until, "Advance the simulation to this time before serving (s)");

  auto* val = app.add_subcommand("validate", "Validate a persisted chain file (exit 0 valid, 1 invalid)");
  val->add_option("chainfile", chainfile, "Chain file written by run")->required();

  auto* replay = app.add_subcommand("replay", "Recompute throughput and overhead from trace.csv");
  replay->add_option("trace", trace, "Packet trace CSV")->required();
  replay->add_option("--duration", duration, "Simulation time (s); default: last timestamp in the trace");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kBadConfig;
  }

  try {
    if (*run) return cmd_run(config, seed, out, mode);
    if (*figs) {
      fs::create_directories(out);
      if (which == "p1") figures_p1(out, fig_seed);
      else figures_p2(out, fig_seed);
      return kOk;
    }
    if (*serve) return cmd_serve(config, host, port, until);
    if (*val) return cmd_validate(chainfile);
    if (*replay) return cmd_replay(trace, duration);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
