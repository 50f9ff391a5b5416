#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "coinforge/combinatorics.hpp"
#include "coinforge/protocols.hpp"
#include "coinforge/simnet.hpp"

namespace coinforge {

enum class DelayMode { kFifo, kRandom };

DelayMode parse_delay_mode(const std::string& text);
std::string to_string(DelayMode mode);

// ---------------------------------------------------------------------------
// Standalone crusader agreement among s parties.

/// A message a byzantine party injects at time zero.
struct ScriptedMessage {
  PartyId from = 0;
  PartyId to = 0;
  std::uint8_t channel = kCrusVal;
  std::uint8_t bit = 0;
  sim::Ticks delay = 1;
};

struct CrusaderScenario {
  std::int64_t s = 4;
  /// Per party; empty entries are byzantine (corrupted before the start).
  std::vector<std::optional<std::uint8_t>> inputs;
  std::vector<ScriptedMessage> script;
  DelayMode delays = DelayMode::kRandom;
  /// Byzantine parties also echo, with the opposite bit, everything they
  /// receive (to every honest party).
  bool reactive = false;
  bool record_events = false;
};

struct CrusaderTrial {
  sim::TrialReport report;
  std::vector<std::optional<std::uint64_t>> honest_outputs;
  bool validity = true;
  bool weak_agreement = true;
  bool liveness = true;
  std::string event_log;
};

CrusaderTrial run_crusader_trial(const CrusaderScenario& scenario, std::uint64_t seed);

/// The structured byzantine space for one byzantine party: for every honest
/// recipient a VAL set in {none, 0, 1, both} and an AUX in {none, 0, 1},
/// each sent early (1 tick) or at the deadline. `code` enumerates
/// [0, behaviour_space_size(honest)).
std::uint64_t behaviour_space_size(std::int64_t honest);
std::vector<ScriptedMessage> scripted_behaviour(PartyId byzantine, const std::vector<PartyId>& honest,
                                                std::uint64_t code, bool late);

// ---------------------------------------------------------------------------
// Standalone Publish(Q, d).

struct PublishScenario {
  PublishGraph graph;
  /// Input of each committee member, in committee order.
  std::vector<std::uint8_t> inputs;
  /// Members corrupted the moment they publish; their undelivered messages
  /// are dropped and they send bot to their neighbours instead.
  std::vector<PartyId> corrupt_on_publish;
  DelayMode delays = DelayMode::kRandom;
  /// Receivers whose Publish traffic waits the full unit.
  double delayed_fraction = 0.0;
  bool record_events = false;
};

struct PublishTrial {
  sim::TrialReport report;
  std::vector<std::optional<std::uint8_t>> outputs;
  /// Parties with more than delta_cap/2 uncorrupted graph neighbours.
  std::vector<PartyId> reliable;
  std::optional<std::uint8_t> common_input;
  /// Every honest reliable party output (clause 1).
  bool clause1 = true;
  /// With a common input, every honest reliable party output it (clause 2).
  bool clause2 = true;
  std::int64_t honest_with_common = 0;
  std::string event_log;
};

PublishTrial run_publish_trial(const PublishScenario& scenario, std::uint64_t seed);

void to_json(nlohmann::json& j, const CrusaderTrial& t);
void to_json(nlohmann::json& j, const PublishTrial& t);

}  // namespace coinforge
