#include <gtest/gtest.h>

#include <deque>
#include <functional>
#include <queue>

#include "distb/control_plane.hpp"

using namespace distb;

namespace {

// Line of n switches; port 1 faces the lower neighbour, port 2 the higher.
std::map<SwitchId, Switch> line(SwitchId n) {
  std::map<SwitchId, Switch> out;
  for (SwitchId i = 1; i <= n; ++i) {
    Switch sw(i);
    if (i > 1) sw.connect(1, {Neighbor::Kind::Switch, i - 1});
    if (i < n) sw.connect(2, {Neighbor::Kind::Switch, i + 1});
    out.emplace(i, std::move(sw));
  }
  return out;
}

RuleSet routes(SwitchId n) {
  RuleSet s;
  for (SwitchId i = 1; i <= n; ++i) {
    FlowRule r;
    r.dpid = i;
    r.priority = 10;
    r.match.dst_addr = 0x0A000201;
    r.action = Action::forward(i < n ? 2 : 3);
    s.insert(r);
  }
  return s;
}

ClusterOptions fast() {
  ClusterOptions o;
  o.difficulty = 6;
  o.controllers = 3;
  return o;
}

// Minimal deferred-call queue for the broadcast hook.
struct Loop {
  double now = 0;
  std::multimap<double, std::function<void()>> q;
  DeferFn hook() {
    return [this](double d, std::function<void()> f) { q.emplace(now + d, std::move(f)); };
  }
  void drain() {
    while (!q.empty()) {
      auto it = q.begin();
      now = it->first;
      auto f = std::move(it->second);
      q.erase(it);
      f();
    }
  }
};

}  // namespace

TEST(Access, GrantAndDeny) {
  const AccessRegistry reg{{"g1", "k1"}};
  EXPECT_EQ(grant_access({"g1", "k1"}, reg), AccessDecision::Granted);
  EXPECT_EQ(grant_access({"g1", "bad"}, reg), AccessDecision::Denied);
  EXPECT_EQ(grant_access({"mallory", "k1"}, reg), AccessDecision::Denied);
  AccessPolicy p(reg);
  p.decide({"g1", "k1"}, 1.0);
  p.decide({"x", "y"}, 2.0);
  ASSERT_EQ(p.log().size(), 2u);
  EXPECT_EQ(p.log()[1].decision, AccessDecision::Denied);
}

TEST(Cluster, GenesisInstallsInitialRules) {
  auto sw = line(4);
  ControllerCluster c(sw, routes(4), fast());
  EXPECT_EQ(c.control_chain().size(), 1u);
  EXPECT_EQ(c.data_chain().size(), 1u);
  EXPECT_EQ(c.blocks_persisted(), 2u);
  for (const auto& [id, s] : sw) {
    EXPECT_EQ(s.table().size(), 1u);
    EXPECT_EQ(flow_table_hash(s), c.expected_digest(id));
  }
  EXPECT_TRUE(c.controllers_consistent());
  EXPECT_EQ(c.master_of(1), 0u);
  EXPECT_EQ(c.master_of(2), 1u);
  EXPECT_EQ(c.master_of(4), 0u);
}

TEST(Cluster, RejectsBadOptions) {
  auto sw = line(2);
  ClusterOptions o = fast();
  o.controllers = 0;
  EXPECT_THROW(ControllerCluster(sw, {}, o), Error);
  o = fast();
  o.verification_period = 0;
  EXPECT_THROW(ControllerCluster(sw, {}, o), Error);
}

TEST(Cluster, RuleUpdateChainsAndInstalls) {
  auto sw = line(3);
  ControllerCluster c(sw, routes(3), fast());
  RuleSet next = routes(3);
  FlowRule extra;
  extra.dpid = 2;
  extra.priority = 100;
  extra.match.src_addr = 0x0A000401;
  extra.action = Action::drop();
  next.insert(extra);
  const Block& b = c.submit_rule_update(next, 3.0);
  EXPECT_EQ(b.index, 1u);
  EXPECT_EQ(b.header.prev_hash, c.control_chain()[0].block_hash);
  EXPECT_FALSE(validate_chain(c.control_chain()));
  EXPECT_EQ(sw.at(2).table().size(), 2u);
  // Unchanged rules keep version 0; the new one takes the block index.
  for (const auto& [k, r] : sw.at(2).table()) EXPECT_EQ(r.version, r.priority == 100 ? 1u : 0u);
  EXPECT_EQ(c.delivery_epoch(2), 1u);
  EXPECT_TRUE(c.controllers_consistent());
  EXPECT_EQ(c.mining_attempts().size(), 1u);
  EXPECT_EQ(c.mining_attempts()[0], b.header.nonce + 1u);
}

TEST(Cluster, DeferredBroadcastTakesTwoHops) {
  auto sw = line(3);
  ControllerCluster c(sw, routes(3), fast());
  Loop loop;
  c.set_defer(loop.hook());
  RuleSet next;
  c.submit_rule_update(next, 0.0);
  EXPECT_TRUE(c.broadcast_pending());
  EXPECT_EQ(sw.at(1).table().size(), 1u);
  EXPECT_EQ(c.controller(0).replica_index, 0u);
  loop.drain();
  EXPECT_DOUBLE_EQ(loop.now, 2 * c.options().hop_delay);
  EXPECT_FALSE(c.broadcast_pending());
  EXPECT_EQ(sw.at(1).table().size(), 0u);
  EXPECT_EQ(c.controller(2).replica_index, 1u);
}

TEST(Verification, CleanRoundAppendsDump) {
  auto sw = line(4);
  ControllerCluster c(sw, routes(4), fast());
  for (int r = 1; r <= 5; ++r) {
    const auto v = c.run_verification_round(5.0 * r);
    EXPECT_EQ(v.size(), 4u);
    for (const auto& [id, verdict] : v) EXPECT_TRUE(verdict.consistent());
  }
  EXPECT_EQ(c.data_chain().size(), 6u);
  EXPECT_EQ(c.isolation_orders(), 0u);
  EXPECT_FALSE(validate_chain(c.data_chain()));
  const auto dr = std::get<DumpRecord>(c.data_chain().head().decoded());
  EXPECT_EQ(dr.switch_digests.size(), 4u);
}

TEST(Verification, TamperedSwitchIsolatedThenReinstated) {
  auto sw = line(4);
  ControllerCluster c(sw, routes(4), fast());
  FlowRule evil;
  evil.dpid = 3;
  evil.priority = 100;
  evil.match.dst_addr = 0x0A000201;
  evil.action = Action::drop();
  sw.at(3).add_rule(evil);

  const auto v = c.run_verification_round(5.0);
  std::vector<SwitchId> bad;
  for (const auto& [id, verdict] : v)
    if (!verdict.consistent()) bad.push_back(id);
  EXPECT_EQ(bad, std::vector<SwitchId>{3});
  EXPECT_EQ(c.data_chain().size(), 1u);
  EXPECT_TRUE(sw.at(3).isolated());
  EXPECT_TRUE(c.is_quarantined(3));
  EXPECT_EQ(c.isolation_orders(), 1u);
  // Neighbours drop ingress from the isolated switch.
  EXPECT_EQ(sw.at(2).peek({2, 1, 0x0A000201, 17}), Action::drop());
  EXPECT_EQ(sw.at(4).peek({1, 1, 0x0A000201, 17}), Action::drop());
  EXPECT_THROW(c.isolate_switch(3, 6.0), AlreadyIsolated);

  // Later rounds skip the isolated switch and succeed.
  const auto v2 = c.run_verification_round(10.0);
  EXPECT_EQ(v2.size(), 3u);
  EXPECT_EQ(c.data_chain().size(), 2u);

  c.reinstate_switch(3, 15.0);
  EXPECT_FALSE(sw.at(3).isolated());
  EXPECT_EQ(flow_table_hash(sw.at(3)), c.expected_digest(3));
  EXPECT_EQ(sw.at(2).peek({2, 1, 0x0A000201, 17}), Action::forward(2));
  EXPECT_THROW(c.reinstate_switch(3, 16.0), NotIsolated);
  EXPECT_THROW(c.isolate_switch(9, 16.0), UnknownSwitch);
  ASSERT_EQ(c.isolation_log().size(), 2u);
  EXPECT_EQ(c.isolation_log()[1].action, "reinstate");
  EXPECT_FALSE(validate_chain(c.control_chain()));
  EXPECT_TRUE(c.controllers_consistent());
}

TEST(Verification, TapFlagsForwardingDeviation) {
  auto sw = line(2);
  ControllerCluster c(sw, routes(2), fast());
  std::map<SwitchId, std::vector<TapObservation>> taps;
  taps[1] = {{{3, 9, 0x0A000201, 17}, Action::forward(2)}};
  EXPECT_EQ(c.run_verification_round(5.0, &taps).size(), 2u);
  EXPECT_FALSE(sw.at(1).isolated());
  taps[1].push_back({{3, 9, 0x0A000201, 17}, Action::drop()});
  c.run_verification_round(10.0, &taps);
  EXPECT_TRUE(sw.at(1).isolated());
}

TEST(Verification, WorkIsCharged) {
  auto sw = line(3);
  ControllerCluster c(sw, routes(3), fast());
  c.run_verification_round(5.0);
  const WorkCosts w;
  EXPECT_DOUBLE_EQ(c.total_work(), 3 * w.verification + w.block_mined);
  EXPECT_EQ(c.blocks_persisted(), 3u);
}
