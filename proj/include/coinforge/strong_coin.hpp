#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "coinforge/combinatorics.hpp"
#include "coinforge/simnet.hpp"

namespace coinforge {

enum class CoinKind { kIdeal, kBenOr };

std::string to_string(CoinKind kind);
CoinKind parse_coin_kind(const std::string& text);

/// Ideal delta-fair coin, one instance per (session, committee).
///
/// The first activation draws g ~ Bern(delta) and a uniform b*, both of
/// which the adversary sees. Fair instances give every member b* at a time
/// of the adversary's choosing (at most R units after activation). Unfair
/// instances let the adversary assign each member's bit. Bad committees
/// (at least alpha*s corrupted members) are fully adversarial and may
/// withhold outputs.
class IdealCoin : public sim::Functionality {
 public:
  struct Record {
    bool fair = true;
    std::uint8_t bit = 0;
    std::vector<std::pair<PartyId, std::uint8_t>> delivered;
  };

  IdealCoin(std::vector<std::vector<PartyId>> committees, double alpha, double delta, double R);

  void set_id(std::uint32_t id) { id_ = id; }
  void activate(PartyId party, std::uint32_t session, std::uint32_t instance,
                sim::Simulation& sim) override;

  const std::map<std::pair<std::uint32_t, std::uint32_t>, Record>& records() const { return records_; }
  std::optional<Record> record(std::uint32_t session, std::uint32_t instance) const;

 private:
  std::vector<std::vector<PartyId>> committees_;
  double alpha_;
  double delta_;
  double R_;
  std::uint32_t id_ = 0;
  std::map<std::pair<std::uint32_t, std::uint32_t>, Record> records_;
};

// ---------------------------------------------------------------------------
// Standalone coin runs: every party is a member of one committee [n].

struct CoinTrialConfig {
  CoinKind kind = CoinKind::kIdeal;
  std::int64_t n = 4;
  /// Corruption budget of the run.
  std::int64_t t = 0;
  /// Ben-Or waits for n - t_local bits.
  std::int64_t t_local = 0;
  double delta = 1.0;
  double R = 1.0;
  double alpha = 1.0 / 3.0;
  bool full_information = false;
  bool record_events = false;
};

struct CoinTruth {
  /// Ideal: the instance was fair. Ben-Or: some bit was forced by the
  /// honest draws.
  bool fair = false;
  std::optional<std::uint8_t> bit;
  std::vector<std::uint8_t> honest_draws;
};

struct CoinTrial {
  sim::TrialReport report;
  CoinTruth truth;
  std::string event_log;

  /// Every honest party output the ground-truth bit of a fair instance.
  bool common_uniform() const;
};

CoinTrial run_coin_trial(const CoinTrialConfig& config, sim::Adversary& adversary, std::uint64_t seed);

void to_json(nlohmann::json& j, const CoinTruth& t);

}  // namespace coinforge
