#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include <openssl/evp.h>

namespace distb {

// 256-bit digest, stored big-endian as produced by the hash.
using Digest = std::array<std::uint8_t, 32>;

inline constexpr Digest zero_digest{};

inline Digest sha256(std::span<const std::uint8_t> bytes) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(),
                 nullptr) != 1 ||
      len != out.size()) {
    throw std::runtime_error("sha256: EVP_Digest failed");
  }
  return out;
}

inline Digest sha256(std::string_view text) {
  return sha256(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline std::string to_hex(const Digest& d) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (auto b : d) {
    s.push_back(kHex[b >> 4]);
    s.push_back(kHex[b & 0xf]);
  }
  return s;
}

inline Digest digest_from_hex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() != 64) throw std::invalid_argument("digest hex must be 64 chars");
  Digest d{};
  for (std::size_t i = 0; i < 32; ++i) {
    int hi = nibble(hex[2 * i]);
    int lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw std::invalid_argument("digest hex: bad character");
    d[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return d;
}

// Number of leading zero bits, most significant byte first.
inline unsigned leading_zero_bits(const Digest& d) {
  unsigned n = 0;
  for (auto b : d) {
    if (b == 0) {
      n += 8;
      continue;
    }
    for (int bit = 7; bit >= 0 && !(b & (1u << bit)); --bit) ++n;
    break;
  }
  return n;
}

}  // namespace distb
