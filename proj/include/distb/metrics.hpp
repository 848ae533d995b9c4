#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "traffic.hpp"

namespace distb {

class ZeroDuration : public Error {
 public:
  ZeroDuration() : Error("simulation time must be > 0") {}
};
class ZeroCbr : public Error {
 public:
  ZeroCbr() : Error("communication overhead undefined: no CBR packets received") {}
};

// Sum of delivered CBR bits over the simulated time.
inline double throughput(const std::vector<Packet>& packets, double simulation_time) {
  if (!(simulation_time > 0)) throw ZeroDuration();
  double bits = 0;
  for (const auto& p : packets)
    if (p.kind == PacketKind::CbrData && p.delivered_at) bits += 8.0 * p.size;
  return bits / simulation_time;
}

// RTR packets (both directions counted individually) per received CBR packet.
inline double comm_overhead(std::uint64_t rtr_packets, std::uint64_t cbr_received) {
  if (cbr_received == 0) throw ZeroCbr();
  return static_cast<double>(rtr_packets) / static_cast<double>(cbr_received);
}

struct SeriesPoint {
  double t;
  double value;
  bool operator==(const SeriesPoint&) const = default;
};

// Delivered CBR bits per second in consecutive windows [k*w, (k+1)*w)
// covering [0, duration). Each point is stamped with its window start.
inline std::vector<SeriesPoint> bandwidth_series(const std::vector<Packet>& trace, double window,
                                                 double duration) {
  if (!(window > 0)) throw Error("bandwidth_series: window must be > 0");
  const auto n = static_cast<std::size_t>(std::ceil(duration / window - 1e-9));
  std::vector<double> bits(n, 0.0);
  for (const auto& p : trace) {
    if (p.kind != PacketKind::CbrData || !p.delivered_at) continue;
    const auto k = static_cast<std::size_t>(std::floor(*p.delivered_at / window));
    if (k < n) bits[k] += 8.0 * p.size;
  }
  std::vector<SeriesPoint> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back({static_cast<double>(k) * window, bits[k] / window});
  return out;
}

enum class EnergyComponent { Controllers, IoTDevices, CloudStorage };

inline const char* to_string(EnergyComponent c) {
  switch (c) {
    case EnergyComponent::Controllers: return "controllers";
    case EnergyComponent::IoTDevices: return "iot_devices";
    case EnergyComponent::CloudStorage: return "cloud_storage";
  }
  return "?";
}

struct EnergyEntry {
  double time;
  EnergyComponent component;
  double joules;  // consumed, non-negative
};

inline std::map<EnergyComponent, double> energy_report(const std::vector<EnergyEntry>& ledger) {
  std::map<EnergyComponent, double> out{{EnergyComponent::Controllers, 0.0},
                                        {EnergyComponent::IoTDevices, 0.0},
                                        {EnergyComponent::CloudStorage, 0.0}};
  for (const auto& e : ledger) out[e.component] += e.joules;
  return out;
}

struct GasModel {
  double gas_per_tx = 21000;
  double base_time_s = 0.005;
  double hash_time_s = 1e-6;  // simulated time per nonce attempt
};

struct GasResult {
  double gas_total = 0;
  std::vector<SeriesPoint> processing_times;  // (tx index, s)
};

// Gas grows linearly in the transaction count; each transaction's
// processing time is a constant plus the mining time of its block.
inline GasResult gas_model(std::uint64_t transactions, const std::vector<std::uint64_t>& attempts,
                           const GasModel& m = {}) {
  GasResult r;
  r.gas_total = m.gas_per_tx * static_cast<double>(transactions);
  for (std::uint64_t i = 0; i < transactions; ++i) {
    const double mining = i < attempts.size() ? static_cast<double>(attempts[i]) * m.hash_time_s : 0.0;
    r.processing_times.push_back({static_cast<double>(i + 1), m.base_time_s + mining});
  }
  return r;
}

struct MetricsReport {
  double throughput_bps = 0;
  double overhead_ratio = 0;
  bool overhead_defined = false;
  std::vector<SeriesPoint> bandwidth_series;
  std::vector<SeriesPoint> latency_by_size;   // (bytes, s)
  std::vector<SeriesPoint> response_times;    // (file bytes, s)
  std::map<EnergyComponent, double> energy_by_component;
  std::vector<SeriesPoint> cpu_series;        // (t, percent)
  double gas_total = 0;
  std::vector<SeriesPoint> tx_processing_times;
  std::uint64_t node_count = 0;
  // key=value lines for summary.txt, in insertion order
  std::vector<std::pair<std::string, std::string>> summary;
};

// Shortest round-trip decimal representation; stable across runs.
inline std::string fmt_num(double v) {
  if (v == 0) return "0";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f << content;
  if (!f) throw Error("write failed: " + path.string());
}

inline std::string series_csv(const char* header, const std::vector<SeriesPoint>& s) {
  std::string out = std::string(header) + "\n";
  for (const auto& p : s) out += fmt_num(p.t) + "," + fmt_num(p.value) + "\n";
  return out;
}

}  // namespace detail

// Writes one CSV per series plus summary.txt into `dir`.
inline std::vector<std::string> emit_report(const MetricsReport& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::string> written;
  auto put = [&](const char* name, const std::string& content) {
    detail::write_file(dir / name, content);
    written.emplace_back(name);
  };
  std::string tp = "nodes,throughput_bps,throughput_mbps\n";
  tp += std::to_string(r.node_count) + "," + fmt_num(r.throughput_bps) + "," + fmt_num(r.throughput_bps / 1e6) + "\n";
  put("throughput.csv", tp);
  put("bandwidth.csv", detail::series_csv("t_s,bits_per_s", r.bandwidth_series));
  put("latency.csv", detail::series_csv("bytes,latency_s", r.latency_by_size));
  put("response.csv", detail::series_csv("file_bytes,response_s", r.response_times));
  put("cpu.csv", detail::series_csv("t_s,cpu_pct", r.cpu_series));
  std::string en = "component,joules\n";
  for (const auto& [c, j] : r.energy_by_component) en += std::string(to_string(c)) + "," + fmt_num(j) + "\n";
  put("energy.csv", en);
  std::string gas = "tx,gas,proc_time_s\n";
  for (std::size_t i = 0; i < r.tx_processing_times.size(); ++i) {
    const auto& p = r.tx_processing_times[i];
    const double cumulative = r.tx_processing_times.empty()
                                  ? 0
                                  : r.gas_total * (p.t / static_cast<double>(r.tx_processing_times.size()));
    gas += fmt_num(p.t) + "," + fmt_num(cumulative) + "," + fmt_num(p.value) + "\n";
  }
  put("gas.csv", gas);
  std::string sum;
  for (const auto& [k, v] : r.summary) sum += k + "=" + v + "\n";
  put("summary.txt", sum);
  return written;
}

}  // namespace distb
