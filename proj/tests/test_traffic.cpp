#include <gtest/gtest.h>

#include <cmath>

#include "distb/traffic.hpp"

using namespace distb;

TEST(Cbr, RateZeroIsEmpty) {
  EXPECT_TRUE(cbr_source(0, 100, 200, 10, RngRoot(1).stream("c")).empty());
}

TEST(Cbr, TenPpsForTwoSeconds) {
  const auto s = cbr_source(10, 512, 512, 2, RngRoot(1).stream("c"));
  ASSERT_EQ(s.size(), 20u);
  for (std::size_t k = 0; k < s.size(); ++k) {
    EXPECT_NEAR(s[k].time, 0.1 * k, 1e-12);
    EXPECT_EQ(s[k].size, 512u);
  }
}

TEST(Cbr, SizesWithinRangeAndMeanConverges) {
  // Uniform over [100, 512]: mean 306, sd = sqrt(((413)^2 - 1) / 12).
  const double mean = 306, sd = std::sqrt((413.0 * 413.0 - 1) / 12);
  const std::size_t n = 1000;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = cbr_source(100, 100, 512, 10, RngRoot(seed).stream("cbr"));
    ASSERT_EQ(s.size(), n);
    double bytes = 0;
    for (const auto& p : s) {
      ASSERT_GE(p.size, 100u);
      ASSERT_LE(p.size, 512u);
      bytes += p.size;
    }
    EXPECT_NEAR(bytes, n * mean, 5 * sd * std::sqrt(double(n))) << "seed " << seed;
  }
}

TEST(Cbr, RejectsBadArguments) {
  EXPECT_THROW(cbr_source(-1, 1, 2, 1, {}), Error);
  EXPECT_THROW(cbr_source(1, 3, 2, 1, {}), Error);
}

TEST(Attack, RampInterpolation) {
  const auto s = AttackSchedule::ramp(0, 100, 0, 190, 1400);
  EXPECT_DOUBLE_EQ(s.rate_at(50), 795);
  EXPECT_DOUBLE_EQ(s.rate_at(0), 190);
  EXPECT_DOUBLE_EQ(s.rate_at(100), 1400);
  EXPECT_DOUBLE_EQ(s.rate_at(-1), 0);
  EXPECT_DOUBLE_EQ(s.rate_at(101), 0);
}

TEST(Attack, FlatRateGivesExactCountPerSecond) {
  AttackSchedule s;
  s.start = 0;
  s.rate_curve = {{0, 190}, {10, 190}};
  const auto t = ddos_ramp(s);
  for (int sec = 0; sec < 9; ++sec) {
    const auto n = std::count_if(t.begin(), t.end(), [&](double x) { return x >= sec && x < sec + 1; });
    EXPECT_EQ(n, 190) << "second " << sec;
  }
}

TEST(Attack, RampCountMatchesIntegral) {
  const auto s = AttackSchedule::ramp(10, 100, 10, 190, 1400);
  const auto t = ddos_ramp(s);
  const double area = 0.5 * (190 + 1400) * 100 + 1400 * 10;
  EXPECT_NEAR(double(t.size()), area, 1.0);
  EXPECT_TRUE(std::is_sorted(t.begin(), t.end()));
  EXPECT_GE(t.front(), 10.0);
  EXPECT_LE(t.back(), 120.0);
  // Packets in [59, 60) track the instantaneous rate near t = 59.5.
  const auto n = std::count_if(t.begin(), t.end(), [](double x) { return x >= 59 && x < 60; });
  EXPECT_NEAR(double(n), s.rate_at(59.5), 1.0);
}

TEST(Attack, ValidationErrors) {
  AttackSchedule s;
  EXPECT_THROW(s.validate(), Error);
  s.rate_curve = {{0, 1}, {-1, 1}};
  EXPECT_THROW(s.validate(), Error);
  s.rate_curve = {{0, -1}};
  EXPECT_THROW(s.validate(), Error);
  s.start = 5;
  s.rate_curve = {{0, 1}, {6, 1}};
  EXPECT_THROW(s.validate(), Error);
}

namespace {
Switch table_switch() {
  Switch sw(1);
  FlowRule r;
  r.dpid = 1;
  r.priority = 10;
  r.match.dst_addr = 7;
  r.action = Action::forward(2);
  sw.install(RuleSet{r});
  return sw;
}
}  // namespace

TEST(Tamper, AddDuplicateRejected) {
  Switch sw = table_switch();
  TamperMutation m;
  m.kind = TamperMutation::Kind::AddRule;
  m.rule = sw.table().rules()[0];
  m.rule.action = Action::drop();
  const auto before = dump_flows(sw);
  EXPECT_FALSE(tamper_switch(sw, m));
  EXPECT_EQ(dump_flows(sw), before);
  EXPECT_FALSE(sw.compromised());
}

TEST(Tamper, EachKindChangesTheTable) {
  for (auto kind : {TamperMutation::Kind::AddRule, TamperMutation::Kind::DropRule, TamperMutation::Kind::EditPriority}) {
    Switch sw = table_switch();
    const Digest before = flow_table_hash(sw);
    TamperMutation m;
    m.kind = kind;
    m.rule = sw.table().rules()[0];
    if (kind == TamperMutation::Kind::AddRule) m.rule.priority = 100;
    m.new_priority = 11;
    EXPECT_TRUE(tamper_switch(sw, m));
    EXPECT_TRUE(sw.compromised());
    EXPECT_NE(flow_table_hash(sw), before);
  }
}

TEST(Tamper, InapplicableEditIsNoop) {
  Switch sw = table_switch();
  TamperMutation m;
  m.kind = TamperMutation::Kind::EditPriority;
  m.rule = sw.table().rules()[0];
  m.new_priority = 10;
  EXPECT_FALSE(tamper_switch(sw, m));
  m.rule.priority = 3;
  m.new_priority = 4;
  EXPECT_FALSE(tamper_switch(sw, m));
  TamperMutation drop;
  drop.kind = TamperMutation::Kind::DropRule;
  drop.rule.dpid = 1;
  drop.rule.priority = 99;
  EXPECT_FALSE(tamper_switch(sw, drop));
}
