#include <gtest/gtest.h>

#include <set>

#include "coinforge/protocols.hpp"
#include "coinforge/scenarios.hpp"

using namespace coinforge;

namespace {

// Delivers every broadcast to every member instantly, in FIFO order.
struct CrusaderNet {
  std::vector<Crusader> parties;
  std::vector<std::tuple<PartyId, PartyId, CrusaderSend>> queue;

  explicit CrusaderNet(std::int64_t s) {
    std::vector<PartyId> members;
    for (std::int64_t i = 0; i < s; ++i) members.push_back(static_cast<PartyId>(i));
    for (std::int64_t i = 0; i < s; ++i) parties.emplace_back(members, crusader_fault_bound(s));
  }
  void post(PartyId from, const std::vector<CrusaderSend>& sends) {
    for (const auto& m : sends) {
      for (PartyId to = 0; to < parties.size(); ++to) queue.emplace_back(from, to, m);
    }
  }
  void run() {
    for (std::size_t i = 0; i < queue.size(); ++i) {
      auto [from, to, m] = queue[i];
      post(to, parties[to].on_message(from, m.channel, m.bit));
    }
  }
};

PublishGraph small_graph() {
  // Committee {0,1,2,3}; receivers 4 and 5 hear from two members each.
  PublishGraph g;
  g.committee = {0, 1, 2, 3};
  g.delta_cap = 2;
  g.adjacency = {{0, 1}, {1, 2}, {2, 3}, {0, 3}, {0, 1}, {2, 3}};
  return g;
}

}  // namespace

TEST(Crusader, CommonInputIsOutput) {
  for (std::uint8_t b : {0, 1}) {
    CrusaderNet net(4);
    for (PartyId p = 0; p < 4; ++p) net.post(p, net.parties[p].start(b));
    net.run();
    for (const auto& c : net.parties) EXPECT_EQ(c.output(), b);
  }
}

TEST(Crusader, SplitInputsGiveAgreeingOrBotOutputs) {
  CrusaderNet net(7);
  for (PartyId p = 0; p < 7; ++p) net.post(p, net.parties[p].start(p % 2));
  net.run();
  std::set<std::uint64_t> bits;
  for (const auto& c : net.parties) {
    ASSERT_TRUE(c.output().has_value());
    if (*c.output() != sim::kBot) bits.insert(*c.output());
  }
  EXPECT_LE(bits.size(), 1u);
}

TEST(Crusader, BuffersMessagesBeforeInput) {
  std::vector<PartyId> members = {0, 1, 2, 3};
  Crusader c(members, 1);
  EXPECT_TRUE(c.on_message(1, kCrusVal, 1).empty());
  EXPECT_TRUE(c.on_message(2, kCrusVal, 1).empty());
  const auto sent = c.start(1);
  // The own VAL only counts once it is delivered back.
  ASSERT_FALSE(sent.empty());
  EXPECT_EQ(sent.front().channel, kCrusVal);
  EXPECT_EQ(c.state()["val_count"][1], 2);
}

TEST(Crusader, IgnoresOutsidersAndBadValues) {
  Crusader c({0, 1, 2, 3}, 1);
  c.start(0);
  c.on_message(9, kCrusVal, 1);
  c.on_message(1, kCrusVal, 5);
  EXPECT_EQ(c.state()["val_count"][1], 0);
}

TEST(Crusader, RejectsTooManyFaults) {
  EXPECT_THROW(Crusader({0, 1, 2}, 1), std::invalid_argument);
  EXPECT_EQ(crusader_fault_bound(4), 1);
  EXPECT_EQ(crusader_fault_bound(9), 2);
  EXPECT_EQ(crusader_fault_bound(6), 1);
}

TEST(Crusader, ScriptedDigitsDecode) {
  // digit 7 = VAL(0), VAL(1), AUX(0); digit 8 = AUX(1)
  const auto m = scripted_behaviour(3, {0, 1}, 7 + 12 * 8, true);
  ASSERT_EQ(m.size(), 4u);
  EXPECT_EQ(m[0].to, 0u);
  EXPECT_EQ(m[2].channel, kCrusAux);
  EXPECT_EQ(m[2].bit, 0);
  EXPECT_EQ(m[3].to, 1u);
  EXPECT_EQ(m[3].bit, 1);
  EXPECT_EQ(m[3].delay, sim::kTicksPerUnit);
  EXPECT_EQ(behaviour_space_size(3), 1728u);
}

TEST(Crusader, SimulatedTrialsWithByzantineParty) {
  for (std::uint64_t code = 0; code < 200; ++code) {
    CrusaderScenario sc;
    sc.s = 4;
    sc.inputs = {std::uint8_t{0}, std::uint8_t{1}, static_cast<std::uint8_t>(code % 2), std::nullopt};
    sc.script = scripted_behaviour(3, {0, 1, 2}, code * 7, code % 3 == 0);
    sc.reactive = code % 2 == 1;
    const auto t = run_crusader_trial(sc, code);
    EXPECT_TRUE(t.validity);
    EXPECT_TRUE(t.weak_agreement);
    EXPECT_TRUE(t.liveness);
    EXPECT_LE(t.report.honest_messages, 64u);
  }
}

TEST(Publish, TopologyAndMembership) {
  auto topo = std::make_shared<const PublishTopology>(small_graph());
  EXPECT_TRUE(topo->is_member(2));
  EXPECT_FALSE(topo->is_member(4));
  EXPECT_TRUE(topo->adjacent(0, 4));
  EXPECT_FALSE(topo->adjacent(2, 4));
  EXPECT_EQ(topo->out_neighbors(0), (std::vector<PartyId>{0, 3, 4}));
}

TEST(Publish, ReceiverTalliesAndTies) {
  auto topo = std::make_shared<const PublishTopology>(small_graph());
  {
    PublishInstance r(topo, 4);
    EXPECT_FALSE(r.on_message(0, kPub, 1).output);
    EXPECT_FALSE(r.on_message(0, kPub, 1).output);  // repeat sender ignored
    EXPECT_EQ(r.on_message(1, kPub, 1).output, 1);
  }
  {
    // bot counts for both bits; with both at threshold the tie goes to 0
    PublishInstance r(topo, 4);
    r.on_message(0, kPub, sim::kBot);
    EXPECT_EQ(r.on_message(1, kPub, sim::kBot).output, 0);
  }
  {
    PublishInstance r(topo, 4);
    r.on_message(2, kPub, 1);
    r.on_message(3, kPub, 1);
    EXPECT_EQ(r.discarded(), 2u);
    EXPECT_FALSE(r.output().has_value());
  }
}

TEST(Publish, MembersOutputInputAndIgnorePub) {
  auto topo = std::make_shared<const PublishTopology>(small_graph());
  PublishInstance m(topo, 1);
  EXPECT_TRUE(m.is_member());
  const auto step = m.set_input(1);
  EXPECT_EQ(step.output, 1);
  EXPECT_FALSE(step.crusader.empty());
  EXPECT_TRUE(m.on_message(0, kPub, 0).crusader.empty());
  EXPECT_EQ(m.output(), 1);
}

TEST(Publish, SimulatedCommonInputReachesReliableReceivers) {
  const auto g = gen_publish_graph({0, 2, 4, 6, 8, 10, 12, 14, 15}, 0, 16, 2, 6, 3, VerifyMode::exhaustive());
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    PublishScenario sc;
    sc.graph = g;
    sc.inputs.assign(9, 1);
    sc.corrupt_on_publish = {static_cast<PartyId>(2 * (seed % 7)), 15};
    const auto t = run_publish_trial(sc, seed);
    EXPECT_TRUE(t.clause1);
    EXPECT_TRUE(t.clause2);
    EXPECT_EQ(t.common_input, 1);
  }
}

TEST(BenOr, MajorityAfterQuorum) {
  BenOrMember m({0, 1, 2, 3, 4, 5, 6}, 2);
  EXPECT_FALSE(m.on_bit(0, 1));
  EXPECT_FALSE(m.on_bit(1, 0));
  EXPECT_FALSE(m.on_bit(1, 1));  // repeat
  EXPECT_FALSE(m.on_bit(2, 1));
  EXPECT_FALSE(m.on_bit(3, 0));
  EXPECT_EQ(m.on_bit(4, 0), 0);  // two ones, three zeros
  EXPECT_FALSE(m.on_bit(5, 1));  // already output
}

TEST(BenOr, TieGoesToZero) {
  BenOrMember m({0, 1, 2, 3}, 0);
  m.on_bit(0, 1);
  m.on_bit(1, 1);
  m.on_bit(2, 0);
  EXPECT_EQ(m.on_bit(3, 0), 0);
}

TEST(BenOr, ForcedBitNeedsSupermajorityOfHonestDraws) {
  // s = 7, t = 2: a bit is forced when drawn by at least 5 honest members
  EXPECT_EQ(benor_forced_bit({1, 1, 1, 1, 1}, 7, 2), 1);
  EXPECT_EQ(benor_forced_bit({1, 1, 1, 1, 0}, 7, 2), std::nullopt);
  EXPECT_EQ(benor_forced_bit({0, 0, 0, 0, 0, 1, 1}, 7, 2), 0);
  // s = 4, t = 1: need 3
  EXPECT_EQ(benor_forced_bit({1, 1, 0}, 4, 1), std::nullopt);
  EXPECT_EQ(benor_forced_bit({1, 1, 1}, 4, 1), 1);
}
