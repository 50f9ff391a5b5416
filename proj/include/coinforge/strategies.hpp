#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "coinforge/combinatorics.hpp"
#include "coinforge/protocols.hpp"
#include "coinforge/simnet.hpp"

namespace coinforge {

struct StrategySpec {
  std::string name = "fifo";
  std::uint64_t seed = 0;
  /// committee_targeter: committees to make bad, in order. Empty means all.
  std::vector<std::int64_t> committees;
  /// committee_targeter: stop after this many corruptions instead of
  /// faulting on overdraw.
  std::optional<std::int64_t> limit;
  /// publish_delayer: fraction of receivers whose Publish traffic waits
  /// the full unit.
  double fraction = 0.0;
};

/// What a strategy may know about the protocol it attacks.
struct StrategyEnv {
  const CommitteeLayout* layout = nullptr;
  std::vector<std::shared_ptr<const PublishTopology>> topologies;
  double alpha = 1.0 / 3.0;
  /// benor_biaser corrupts this many parties.
  std::int64_t corruptions = 0;
};

const std::vector<std::string>& strategy_names();

/// Throws std::invalid_argument for unknown names or missing environment.
std::unique_ptr<sim::Adversary> make_strategy(const StrategySpec& spec, const StrategyEnv& env = {});

/// Constant delay (fifo), uniform random delays, and optionally the full
/// unit for Publish envelopes to a random subset of receivers.
class DelayStrategy : public sim::Adversary {
 public:
  DelayStrategy(std::string name, bool random, std::uint64_t seed, double fraction);

  std::string name() const override { return name_; }
  void on_start(sim::AdversaryContext& ctx) override;
  sim::Ticks schedule(const sim::EnvelopeMeta& env, sim::AdversaryContext& ctx) override;
  sim::CoinDecision on_coin(const sim::CoinQuery& query, sim::AdversaryContext& ctx) override;

 protected:
  sim::Ticks base_delay();

  std::string name_;
  bool random_;
  std::uint64_t seed_;
  double fraction_;
  Rng rng_{0};
  std::vector<std::uint8_t> delayed_;
};

/// Corrupts enough members of the named committees to make them bad, then
/// plays against the protocol: bad coins output the bit opposing the
/// revealed majority, corrupted crusader members echo the flipped bit,
/// corrupted Publish senders send it to their neighbours, and every
/// corrupted party broadcasts it as its majority.
class CommitteeTargeter : public DelayStrategy {
 public:
  CommitteeTargeter(StrategySpec spec, StrategyEnv env, bool random_delays);

  void on_start(sim::AdversaryContext& ctx) override;
  sim::CoinDecision on_coin(const sim::CoinQuery& query, sim::AdversaryContext& ctx) override;
  void on_byzantine_receive(const sim::EnvelopeMeta& env, const sim::Payload& payload,
                            sim::AdversaryContext& ctx) override;

 private:
  std::uint8_t push_bit(sim::AdversaryContext& ctx, std::uint32_t session) const;

  StrategySpec spec_;
  StrategyEnv env_;
  std::set<std::tuple<PartyId, std::uint32_t, std::uint32_t>> acted_;
  std::set<std::pair<PartyId, std::uint32_t>> majority_sent_;
};

/// Full-information attack on a standalone Ben-Or coin: waits until every
/// honest bit is on the wire, lets the minority bits and the corrupted
/// parties' opposing bits arrive first and holds the majority bits back.
class BenOrBiaser : public sim::Adversary {
 public:
  explicit BenOrBiaser(std::int64_t corruptions) : corruptions_(corruptions) {}

  std::string name() const override { return "benor_biaser"; }
  bool requires_full_information() const override { return true; }
  void on_start(sim::AdversaryContext& ctx) override;
  sim::Ticks schedule(const sim::EnvelopeMeta& env, sim::AdversaryContext& ctx) override;
  void on_sent(const sim::EnvelopeMeta& env, sim::AdversaryContext& ctx) override;

 private:
  std::int64_t corruptions_;
  std::vector<std::int8_t> bits_;
  std::int64_t seen_ = 0;
  bool fired_ = false;
};

}  // namespace coinforge
