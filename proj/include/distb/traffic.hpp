#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "data_plane.hpp"
#include "error.hpp"
#include "flow.hpp"
#include "rng.hpp"

namespace distb {

enum class PacketKind : std::uint8_t { CbrData, RtrControl, AttackFlood, FileChunk };

inline const char* to_string(PacketKind k) {
  switch (k) {
    case PacketKind::CbrData: return "cbr";
    case PacketKind::RtrControl: return "rtr";
    case PacketKind::AttackFlood: return "flood";
    case PacketKind::FileChunk: return "file";
  }
  return "?";
}

struct Packet {
  std::uint64_t id = 0;
  Addr src = 0;
  Addr dst = 0;
  std::uint32_t size = 0;  // bytes
  PacketKind kind = PacketKind::CbrData;
  std::uint8_t proto = 17;
  double sent_at = 0;
  std::optional<double> delivered_at;
};

struct TimedSize {
  double time;
  std::uint32_t size;
};

// Constant-bit-rate emission: packet k leaves at k / rate, sizes uniform
// over [min_size, max_size].
class CbrSource {
 public:
  CbrSource(double rate_pps, std::uint32_t min_size, std::uint32_t max_size, double duration,
            RngStream rng, double start = 0)
      : rate_(rate_pps), lo_(min_size), hi_(max_size), start_(start), end_(start + duration), rng_(rng) {
    if (rate_pps < 0) throw Error("cbr_source: rate must be >= 0");
    if (min_size > max_size) throw Error("cbr_source: empty size range");
  }

  std::optional<TimedSize> next() {
    if (rate_ <= 0) return std::nullopt;
    const double t = start_ + static_cast<double>(k_) / rate_;
    if (t >= end_) return std::nullopt;
    ++k_;
    return TimedSize{t, static_cast<std::uint32_t>(rng_.uniform_int(lo_, hi_))};
  }

 private:
  double rate_;
  std::uint32_t lo_, hi_;
  double start_, end_;
  RngStream rng_;
  std::uint64_t k_ = 0;
};

inline std::vector<TimedSize> cbr_source(double rate_pps, std::uint32_t min_size, std::uint32_t max_size,
                                         double duration, RngStream rng) {
  CbrSource src(rate_pps, min_size, max_size, duration, rng);
  std::vector<TimedSize> out;
  while (auto p = src.next()) out.push_back(*p);
  return out;
}

struct AttackSchedule {
  double start = 0;
  // Piecewise-linear rate per source: (time, packets/s), times ascending.
  // Rate is 0 before start and after the last point.
  std::vector<std::pair<double, double>> rate_curve;
  std::vector<Addr> targets;
  std::uint32_t sources = 1;
  std::uint32_t packet_size = 512;

  void validate() const {
    if (rate_curve.empty()) throw Error("attack: rate_curve must not be empty");
    for (std::size_t i = 0; i < rate_curve.size(); ++i) {
      if (rate_curve[i].second < 0) throw Error("attack: rates must be non-negative");
      if (i && rate_curve[i].first < rate_curve[i - 1].first)
        throw Error("attack: rate_curve times must be ascending");
    }
    if (rate_curve.front().first < start) throw Error("attack: rate_curve starts before start");
  }

  double rate_at(double t) const {
    if (rate_curve.empty() || t < rate_curve.front().first || t > rate_curve.back().first) return 0;
    for (std::size_t i = 1; i < rate_curve.size(); ++i) {
      const auto [t0, r0] = rate_curve[i - 1];
      const auto [t1, r1] = rate_curve[i];
      if (t <= t1) {
        if (t1 == t0) return r1;
        return r0 + (r1 - r0) * (t - t0) / (t1 - t0);
      }
    }
    return rate_curve.back().second;
  }

  // Linear ramp from `from` to `to` pps over [start, start + ramp], then
  // held at `to` for `hold` seconds.
  static AttackSchedule ramp(double start, double ramp, double hold, double from, double to) {
    AttackSchedule s;
    s.start = start;
    s.rate_curve = {{start, from}, {start + ramp, to}};
    if (hold > 0) s.rate_curve.emplace_back(start + ramp + hold, to);
    return s;
  }
};

// Emission times of one flood source. Packet k leaves when the integral of
// the rate curve reaches k, so a flat rate r yields exactly r packets in
// every full second.
class RampGenerator {
 public:
  explicit RampGenerator(const AttackSchedule& s, double phase = 0) : s_(s), phase_(phase) {}

  std::optional<double> next() {
    const auto& c = s_.rate_curve;
    const double target = static_cast<double>(k_) + phase_;
    while (seg_ + 1 < c.size()) {
      const auto [t0, r0] = c[seg_];
      const auto [t1, r1] = c[seg_ + 1];
      const double dt = t1 - t0;
      const double area = 0.5 * (r0 + r1) * dt;
      if (acc_ + area >= target && dt > 0) {
        // Solve acc + r0*x + 0.5*slope*x^2 = target for x in [0, dt].
        const double need = target - acc_;
        const double slope = (r1 - r0) / dt;
        double x;
        if (std::abs(slope) < 1e-12) {
          x = r0 > 0 ? need / r0 : dt;
        } else {
          const double disc = std::max(0.0, r0 * r0 + 2 * slope * need);
          x = (std::sqrt(disc) - r0) / slope;
        }
        x = std::clamp(x, 0.0, dt);
        ++k_;
        return t0 + x;
      }
      acc_ += area;
      ++seg_;
    }
    return std::nullopt;
  }

 private:
  const AttackSchedule& s_;
  double phase_;
  std::uint64_t k_ = 0;
  std::size_t seg_ = 0;
  double acc_ = 0;
};

inline std::vector<double> ddos_ramp(const AttackSchedule& schedule) {
  schedule.validate();
  RampGenerator g(schedule);
  std::vector<double> out;
  while (auto t = g.next()) out.push_back(*t);
  return out;
}

// ------------------------------------------------------------- tampering

struct TamperMutation {
  enum class Kind { AddRule, DropRule, EditPriority };
  Kind kind = Kind::AddRule;
  FlowRule rule;                 // rule to add, remove, or re-prioritise
  std::uint16_t new_priority = 0;  // EditPriority only
};

// Mutates the switch's local table behind the controllers' back. Returns
// false when the mutation cannot apply (duplicate add, missing rule); the
// table is then unchanged.
inline bool tamper_switch(Switch& sw, const TamperMutation& m) {
  bool applied = false;
  switch (m.kind) {
    case TamperMutation::Kind::AddRule: {
      FlowRule r = m.rule;
      r.dpid = sw.id();
      applied = sw.add_rule(r);
      break;
    }
    case TamperMutation::Kind::DropRule: applied = sw.remove_rule(m.rule); break;
    case TamperMutation::Kind::EditPriority: {
      const FlowRule* cur = sw.table().find(m.rule);
      if (!cur || m.new_priority == cur->priority) break;
      FlowRule edited = *cur;
      edited.priority = m.new_priority;
      if (sw.table().contains_key(edited)) break;
      sw.remove_rule(*cur);
      applied = sw.add_rule(edited);
      break;
    }
  }
  if (applied) sw.set_compromised(true);
  return applied;
}

}  // namespace distb
