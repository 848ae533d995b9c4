#pragma once

#include <cstdint>
#include <string_view>

namespace distb {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Counter-based stream: draw i is a pure function of (key, i), so streams
// keyed by different names never share state.
class RngStream {
 public:
  RngStream() = default;
  explicit RngStream(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() { return splitmix64(key_ ^ splitmix64(counter_++)); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], rejection-sampled to avoid modulo bias.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    const std::uint64_t span = hi - lo + 1;
    if (span == 0) return next_u64();
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return lo + r % span;
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t draws() const { return counter_; }

  RngStream child(std::string_view name) const {
    return RngStream(splitmix64(key_ ^ fnv1a64(name)));
  }
  RngStream child(std::uint64_t index) const {
    return RngStream(splitmix64(key_ + splitmix64(index ^ 0xa5a5a5a5a5a5a5a5ULL)));
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

// The single root of randomness for a run. Components derive their own
// stream by name.
class RngRoot {
 public:
  explicit RngRoot(std::uint64_t seed) : seed_(seed) {}
  RngStream stream(std::string_view component) const {
    return RngStream(splitmix64(splitmix64(seed_) ^ fnv1a64(component)));
  }
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

}  // namespace distb
