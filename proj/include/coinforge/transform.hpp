#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "coinforge/combinatorics.hpp"
#include "coinforge/params.hpp"
#include "coinforge/protocols.hpp"
#include "coinforge/simnet.hpp"
#include "coinforge/strong_coin.hpp"

namespace coinforge {

/// Everything a run of the transformation shares across parties and trials.
struct TransformSetup {
  CoinParams params;
  DerivedParams derived;
  CommitteeLayout layout;
  std::vector<std::shared_ptr<const PublishTopology>> topologies;
  CoinKind coin = CoinKind::kIdeal;
  /// Ben-Or committees wait for s - benor_t_local bits.
  std::int64_t benor_t_local = 0;
  /// Parallel instances (bits of a multivalued coin).
  std::uint32_t sessions = 1;

  static std::shared_ptr<const TransformSetup> make(const CoinParams& params, const CommitteeBundle& bundle,
                                                    CoinKind coin = CoinKind::kIdeal,
                                                    std::uint32_t sessions = 1,
                                                    std::optional<std::int64_t> benor_t_local = {});

  std::int64_t n() const { return derived.n; }
  std::int64_t q() const { return derived.q; }
  std::int64_t s() const { return derived.s; }
};

/// Committees plus graphs generated from the derived parameters.
CommitteeBundle generate_bundle(const CoinParams& params, std::uint64_t seed, VerifyMode mode,
                                const Limits& limits = {});

/// One party running `sessions` parallel instances of the transformation.
class TransformParty : public sim::Process {
 public:
  TransformParty(std::shared_ptr<const TransformSetup> setup, PartyId self, std::uint32_t coin_id);

  void start(sim::Context& ctx) override;
  void receive(const sim::Envelope& env, sim::Context& ctx) override;
  void local(const sim::LocalEvent& ev, sim::Context& ctx) override;
  nlohmann::json state() const override;

  std::optional<std::uint8_t> session_output(std::uint32_t session) const {
    return sessions_.at(session).output;
  }
  /// Ben-Or bit this party drew for committee j, if it is a member.
  std::optional<std::uint8_t> drawn(std::uint32_t session, std::int64_t j) const;
  std::uint64_t discarded() const;

 private:
  struct Session {
    std::vector<PublishInstance> publish;
    std::vector<std::optional<BenOrMember>> benor;
    std::int64_t v[2] = {0, 0};
    std::int64_t w[2] = {0, 0};
    bool majority_sent = false;
    std::vector<std::uint8_t> maj_heard;
    std::optional<std::uint8_t> output;
  };

  void coin_output(sim::Context& ctx, std::uint32_t session, std::uint32_t j, std::uint8_t b);
  void apply(sim::Context& ctx, std::uint32_t session, std::uint32_t j, const PublishStep& step);
  void publish_output(sim::Context& ctx, std::uint32_t session, std::uint8_t b);
  void maybe_finish(sim::Context& ctx);

  std::shared_ptr<const TransformSetup> setup_;
  PartyId self_;
  std::uint32_t coin_id_;
  std::vector<std::uint32_t> my_committees_;
  std::vector<Session> sessions_;
  bool finished_ = false;
};

/// Harness-side truth of one session: the strong-coin outcome of every
/// committee and the induced global bit b*, when it is defined.
struct SessionTruth {
  std::vector<bool> fair;
  std::vector<std::uint8_t> bits;
  std::int64_t ones = 0;
  bool all_fair = false;
  bool margin = false;
  /// Defined when every committee coin is fair and |X - q/2| >= 5z'sqrt(q)/8.
  std::optional<std::uint8_t> bstar;
};

struct TransformTrial {
  sim::TrialReport report;
  std::vector<SessionTruth> truth;
  /// Common honest output per session; empty when honest parties differ or
  /// some honest party has no output.
  std::vector<std::optional<std::uint8_t>> session_values;
  std::string event_log;
  std::uint64_t discarded = 0;

  /// Every honest party output b* in every session.
  bool common_uniform() const;
};

struct TrialOptions {
  bool record_events = false;
  bool full_information = false;
  /// Corruption budget; defaults to floor((alpha - epsilon) n).
  std::optional<std::int64_t> t;
};

TransformTrial run_transform_trial(const std::shared_ptr<const TransformSetup>& setup,
                                   sim::Adversary& adversary, std::uint64_t seed,
                                   const TrialOptions& options = {});

// ---------------------------------------------------------------------------
// Multivalued coin and leader election

/// Per-bit fairness at which ell parallel bits are jointly delta-fair.
double per_bit_delta(double delta, std::int64_t ell);

/// Session 0 is the most significant bit.
std::uint64_t concat_bits(const std::vector<std::uint8_t>& bits);

/// (value mod n) + 1; parties are numbered from 1 here.
std::int64_t elect_leader(std::uint64_t value, std::int64_t n);

void to_json(nlohmann::json& j, const SessionTruth& t);

}  // namespace coinforge
