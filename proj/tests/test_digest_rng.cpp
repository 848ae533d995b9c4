#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "distb/digest.hpp"
#include "distb/rng.hpp"

using namespace distb;

// Golden values computed with Python's hashlib.
TEST(Sha256, GoldenVectors) {
  EXPECT_EQ(to_hex(sha256("")), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(to_hex(sha256("abc")), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(to_hex(sha256("[]")), "4f53cda18c2baa0c0354bb5f9a3ecbe5ed12ab4d8e11ba873c2f11161202b945");
  const std::array<std::uint8_t, 80> zeros{};
  EXPECT_EQ(to_hex(sha256(std::span<const std::uint8_t>(zeros))),
            "5b6fb58e61fa475939767d68a446f97f1bff02c0e5935a3ea8bb51e6515783d8");
}

TEST(Sha256, HexRoundTrip) {
  const Digest d = sha256("round trip");
  EXPECT_EQ(digest_from_hex(to_hex(d)), d);
  EXPECT_THROW(digest_from_hex("abc"), std::exception);
  EXPECT_THROW(digest_from_hex(std::string(64, 'g')), std::exception);
}

TEST(LeadingZeroBits, CountsFromMostSignificantBit) {
  Digest d{};
  EXPECT_EQ(leading_zero_bits(d), 256u);
  d[0] = 0x80;
  EXPECT_EQ(leading_zero_bits(d), 0u);
  d[0] = 0x01;
  EXPECT_EQ(leading_zero_bits(d), 7u);
  d[0] = 0;
  d[1] = 0x10;
  EXPECT_EQ(leading_zero_bits(d), 11u);
}

TEST(Rng, SameSeedSameStream) {
  RngStream a = RngRoot(42).stream("cbr");
  RngStream b = RngRoot(42).stream("cbr");
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, StreamsAreIndependentByName) {
  RngStream a = RngRoot(42).stream("cbr");
  RngStream b = RngRoot(42).stream("attack");
  int same = 0;
  for (int i = 0; i < 100; ++i) same += a.next_u64() == b.next_u64();
  EXPECT_EQ(same, 0);
}

TEST(Rng, DrawingFromOneStreamDoesNotPerturbAnother) {
  RngRoot root(9);
  RngStream x = root.stream("x");
  const auto first = root.stream("y").next_u64();
  for (int i = 0; i < 1000; ++i) x.next_u64();
  EXPECT_EQ(root.stream("y").next_u64(), first);
}

TEST(Rng, UniformBounds) {
  RngStream r = RngRoot(1).stream("u");
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const auto k = r.uniform_int(3, 7);
    ASSERT_GE(k, 3u);
    ASSERT_LE(k, 7u);
  }
}

TEST(Rng, UniformIntCoversRange) {
  RngStream r = RngRoot(5).stream("cover");
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) seen.insert(r.uniform_int(0, 9));
  EXPECT_EQ(seen.size(), 10u);
}

TEST(Rng, MeanOfUniformIsNearHalf) {
  RngStream r = RngRoot(77).stream("mean");
  double s = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) s += r.uniform();
  // 5 sigma of the sample mean: 5 * sqrt(1/12 / n)
  EXPECT_NEAR(s / n, 0.5, 5 * std::sqrt(1.0 / 12 / n));
}
