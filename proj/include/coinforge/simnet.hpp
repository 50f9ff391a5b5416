#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "coinforge/combinatorics.hpp"
#include "coinforge/rng.hpp"

namespace coinforge::sim {

/// Virtual time. One unit (the delivery deadline for honest-sent messages)
/// is 2^20 ticks, so the clock is a dyadic rational.
using Ticks = std::int64_t;
inline constexpr Ticks kTicksPerUnit = Ticks{1} << 20;

inline double to_units(Ticks t) { return static_cast<double>(t) / static_cast<double>(kTicksPerUnit); }
inline Ticks from_units(double u) { return static_cast<Ticks>(u * static_cast<double>(kTicksPerUnit)); }

/// Identifies one protocol instance: `session` separates parallel top-level
/// runs, `instance` is the committee index, `channel` the sub-protocol.
struct Tag {
  std::uint32_t session = 0;
  std::uint32_t instance = 0;
  std::uint8_t channel = 0;
  /// Whether the instance tag travels on the wire (adds tag bits).
  bool on_wire = true;

  friend bool operator==(const Tag&, const Tag&) = default;
};

inline constexpr std::uint64_t kBot = 2;

enum class PayloadKind : std::uint8_t { kBit, kBitOrBot, kOpaque };

struct Payload {
  PayloadKind kind = PayloadKind::kBit;
  std::uint64_t value = 0;
  std::uint32_t bits = 1;

  static Payload bit(std::uint64_t b) { return {PayloadKind::kBit, b & 1U, 1}; }
  /// 0, 1 or kBot; two bits on the wire.
  static Payload ternary(std::uint64_t v) { return {PayloadKind::kBitOrBot, v, 2}; }
  static Payload opaque(std::uint64_t v, std::uint32_t bits) { return {PayloadKind::kOpaque, v, bits}; }

  friend bool operator==(const Payload&, const Payload&) = default;
};

/// Everything about an envelope except its contents; this is what the
/// adversary sees on the public transcript.
struct EnvelopeMeta {
  std::uint64_t id = 0;
  PartyId sender = 0;
  PartyId recipient = 0;
  Tag tag;
  Ticks sent_at = 0;
  Ticks deliver_at = 0;
  std::optional<Ticks> delivered_at;
  std::uint32_t size_bits = 1;
  bool honest_sender = true;
  bool dropped = false;
  bool forced = false;
};

struct Envelope {
  const EnvelopeMeta& meta;
  const Payload& payload;

  PartyId sender() const { return meta.sender; }
  const Tag& tag() const { return meta.tag; }
};

/// Delivered by a functionality (e.g. an ideal coin) to one party.
struct LocalEvent {
  std::uint32_t source = 0;
  std::uint32_t session = 0;
  std::uint32_t instance = 0;
  std::uint64_t value = 0;
};

class StrategyViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Simulation;

/// The party-facing API used by protocol code.
class Context {
 public:
  Context(Simulation& sim, PartyId self) : sim_(sim), self_(self) {}

  PartyId self() const { return self_; }
  std::int64_t n() const;
  Ticks now() const;
  Rng& rng();

  void send(PartyId to, Tag tag, Payload payload);
  void send_to(const std::vector<PartyId>& recipients, Tag tag, Payload payload);
  /// Every party, including the sender itself.
  void send_all(Tag tag, Payload payload);
  /// First call wins; later calls are ignored.
  void output(std::uint64_t value);
  void activate(std::uint32_t functionality, std::uint32_t session, std::uint32_t instance);

 private:
  Simulation& sim_;
  PartyId self_;
};

class Process {
 public:
  virtual ~Process() = default;
  virtual void start(Context& ctx) = 0;
  virtual void receive(const Envelope& env, Context& ctx) = 0;
  virtual void local(const LocalEvent& /*ev*/, Context& /*ctx*/) {}
  /// Internal state handed to the adversary on corruption (no erasures).
  virtual nlohmann::json state() const { return nlohmann::json::object(); }
};

// ---------------------------------------------------------------------------
// Adversary

struct AdversaryAction {
  enum class Kind { kCorrupt, kDropUndelivered, kInject, kReschedule };

  Kind kind = Kind::kCorrupt;
  PartyId party = 0;  // corrupt / drop target, or inject sender
  PartyId to = 0;
  Tag tag;
  Payload payload;
  Ticks delay = 1;
  std::uint64_t envelope = 0;

  static AdversaryAction corrupt(PartyId p) { return {Kind::kCorrupt, p, 0, {}, {}, 1, 0}; }
  static AdversaryAction drop_undelivered_from(PartyId p) {
    return {Kind::kDropUndelivered, p, 0, {}, {}, 1, 0};
  }
  static AdversaryAction inject(PartyId from, PartyId to, Tag tag, Payload payload, Ticks delay) {
    return {Kind::kInject, from, to, tag, payload, delay, 0};
  }
  /// Moves an undelivered envelope to `delay` ticks from now (still capped
  /// by its deadline).
  static AdversaryAction reschedule(std::uint64_t envelope, Ticks delay) {
    return {Kind::kReschedule, 0, 0, {}, {}, delay, envelope};
  }
};

struct CoinOutcome {
  bool fair = true;
  std::uint8_t bit = 0;
};

struct CoinQuery {
  std::uint32_t session = 0;
  std::uint32_t instance = 0;
  PartyId member = 0;
  bool fair = true;
  /// Revealed at activation when the instance is fair.
  std::optional<std::uint8_t> fair_bit;
  /// The committee holds at least alpha*s corrupted members.
  bool committee_bad = false;
  Ticks max_delay = kTicksPerUnit;
};

struct CoinDecision {
  Ticks delay = 1;
  /// Must stay empty for fair instances of good committees.
  std::optional<std::uint8_t> bit;
  /// Only bad committees may withhold outputs.
  bool withhold = false;
};

class AdversaryContext;

class Adversary {
 public:
  virtual ~Adversary() = default;
  virtual std::string name() const = 0;
  virtual bool requires_full_information() const { return false; }

  virtual void on_start(AdversaryContext& /*ctx*/) {}
  /// Delay for a freshly sent envelope. Values are clamped to
  /// [1, kTicksPerUnit]; anything later is force-delivered at the deadline.
  virtual Ticks schedule(const EnvelopeMeta& env, AdversaryContext& ctx) = 0;
  /// After an envelope sent by the current handler has been queued.
  virtual void on_sent(const EnvelopeMeta& /*env*/, AdversaryContext& /*ctx*/) {}
  virtual void on_deliver(const EnvelopeMeta& /*env*/, AdversaryContext& /*ctx*/) {}
  /// An envelope arrived at a corrupted party; its payload is visible.
  virtual void on_byzantine_receive(const EnvelopeMeta& /*env*/, const Payload& /*payload*/,
                                    AdversaryContext& /*ctx*/) {}
  virtual CoinDecision on_coin(const CoinQuery& query, AdversaryContext& ctx);
  virtual void on_output(PartyId /*party*/, std::uint64_t /*value*/, AdversaryContext& /*ctx*/) {}
};

/// The adversary's view of and handle on the running simulation.
class AdversaryContext {
 public:
  explicit AdversaryContext(Simulation& sim) : sim_(sim) {}

  Ticks now() const;
  std::int64_t n() const;
  std::int64_t t() const;
  std::int64_t budget_remaining() const;
  bool is_corrupted(PartyId p) const;
  const std::vector<PartyId>& corrupted() const;
  bool full_information() const;
  Rng& rng();

  const std::vector<EnvelopeMeta>& transcript() const;
  /// Contents are visible in full-information mode, or when the sender or
  /// recipient is corrupted.
  std::optional<Payload> try_payload(const EnvelopeMeta& env) const;
  /// As try_payload, but reading a hidden payload is a strategy violation.
  Payload payload(const EnvelopeMeta& env) const;
  nlohmann::json party_state(PartyId p) const;
  std::optional<CoinOutcome> coin_outcome(std::uint32_t session, std::uint32_t instance) const;

  void act(const AdversaryAction& action);
  void corrupt(PartyId p) { act(AdversaryAction::corrupt(p)); }
  void drop_undelivered_from(PartyId p) { act(AdversaryAction::drop_undelivered_from(p)); }
  void inject(PartyId from, PartyId to, Tag tag, Payload payload, Ticks delay = 1) {
    act(AdversaryAction::inject(from, to, tag, payload, delay));
  }
  void reschedule(std::uint64_t envelope, Ticks delay) { act(AdversaryAction::reschedule(envelope, delay)); }

 private:
  Simulation& sim_;
};

// ---------------------------------------------------------------------------
// Functionalities

class Functionality {
 public:
  virtual ~Functionality() = default;
  virtual void activate(PartyId party, std::uint32_t session, std::uint32_t instance,
                        Simulation& sim) = 0;
};

// ---------------------------------------------------------------------------

struct SimConfig {
  std::int64_t n = 1;
  std::int64_t t = 0;
  bool full_information = false;
  std::uint64_t seed = 0;
  /// Bits added to every on-wire tagged message.
  std::uint32_t tag_bits = 0;
  std::uint64_t max_events = 100'000'000;
  std::uint64_t max_actions_per_callback = 100'000;
  bool stop_when_all_output = false;
  bool record_events = false;
  std::vector<std::string> channel_names;
};

struct EventRecord {
  Ticks time = 0;
  std::uint64_t seq = 0;
  std::string kind;
  std::optional<std::uint64_t> envelope_id;
  std::optional<PartyId> party;
  nlohmann::json detail;
};

struct TrialReport {
  std::uint64_t seed = 0;
  std::int64_t n = 0;
  std::vector<std::optional<std::uint64_t>> outputs;
  std::vector<std::optional<Ticks>> output_times;
  std::vector<bool> honest;
  bool agreed = false;
  std::optional<std::uint64_t> output_value;
  bool all_honest_output = false;
  /// Last honest output time divided by the largest honest-sender delay.
  double latency = 0.0;
  Ticks last_output_ticks = 0;
  Ticks normalizer_ticks = kTicksPerUnit;
  std::map<std::string, std::uint64_t> msg_count_by_bucket;
  std::map<std::string, std::uint64_t> honest_by_channel;
  std::map<std::string, std::uint64_t> byzantine_by_channel;
  std::uint64_t honest_messages = 0;
  std::uint64_t honest_bits = 0;
  std::uint64_t byzantine_messages = 0;
  std::vector<std::pair<PartyId, Ticks>> corruptions;
  std::uint64_t forced_deliveries = 0;
  std::uint64_t dropped = 0;
  std::uint64_t step_budget_hits = 0;
  std::uint64_t events = 0;
  bool eventual_delivery = true;
  nlohmann::json ground_truth = nlohmann::json::object();

  std::vector<PartyId> honest_parties() const;
};

void to_json(nlohmann::json& j, const TrialReport& r);
void to_json(nlohmann::json& j, const EventRecord& e);

/// Discrete-event executor. One instance runs exactly one trial.
class Simulation {
 public:
  Simulation(SimConfig config, std::vector<std::unique_ptr<Process>> parties,
             Adversary& adversary);
  ~Simulation();

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  std::uint32_t add_functionality(std::unique_ptr<Functionality> f);
  Functionality& functionality(std::uint32_t id) { return *functionalities_.at(id); }

  /// Runs to quiescence (or until every honest party output, if so
  /// configured). Strategy faults surface as StrategyViolation.
  TrialReport run();

  // -- used by Context ------------------------------------------------------
  const SimConfig& config() const { return config_; }
  Ticks now() const { return now_; }
  Rng& party_rng(PartyId p) { return party_rngs_[p]; }
  void send(PartyId from, PartyId to, Tag tag, Payload payload);
  void output(PartyId party, std::uint64_t value);
  void activate(PartyId party, std::uint32_t functionality, std::uint32_t session,
                std::uint32_t instance);

  // -- used by functionalities ---------------------------------------------
  bool is_corrupted(PartyId p) const { return corrupted_flag_[p] != 0; }
  Rng& harness_rng() { return harness_rng_; }
  void schedule_local(PartyId party, Ticks delay, LocalEvent ev);
  /// Lets the adversary decide a coin output; enforces the fairness rules.
  CoinDecision query_coin(const CoinQuery& query);
  /// Records a coin outcome; the adversary may read it from now on.
  void reveal_coin(std::uint32_t session, std::uint32_t instance, CoinOutcome outcome);
  /// A functionality delay that counts as `rounds` message delays when
  /// normalizing latency.
  void note_functionality_delay(Ticks delay, double rounds);
  nlohmann::json& ground_truth() { return ground_truth_; }

  // -- used by AdversaryContext --------------------------------------------
  /// Applies now, or after the running party handler returns.
  void submit(const AdversaryAction& action);
  const std::vector<EnvelopeMeta>& transcript() const { return meta_; }
  const Payload& payload_of(std::uint64_t id) const { return payloads_[id]; }
  const std::vector<PartyId>& corrupted_list() const { return corrupted_; }
  Rng& adversary_rng() { return adversary_rng_; }
  nlohmann::json party_state(PartyId p) const;
  std::optional<CoinOutcome> coin_outcome(std::uint32_t session, std::uint32_t instance) const;

  const std::vector<EventRecord>& events() const { return log_; }
  /// Newline-delimited JSON of the event log (requires record_events).
  std::string event_log_ndjson() const;

 private:
  struct QueueEntry {
    Ticks time;
    std::uint64_t seq;
    bool local;
    std::uint64_t index;
    bool operator>(const QueueEntry& o) const {
      return time != o.time ? time > o.time : seq > o.seq;
    }
  };
  struct PendingLocal {
    PartyId party;
    LocalEvent event;
  };

  template <typename F>
  void in_callback(F&& f);
  template <typename F>
  void in_handler(F&& f);
  void flush_deferred();
  void apply(const AdversaryAction& action);
  void deliver(std::uint64_t id);
  void run_local(std::uint64_t index);
  void record(std::string kind, std::optional<std::uint64_t> env, std::optional<PartyId> party,
              nlohmann::json detail = nlohmann::json::object());
  std::uint64_t enqueue_envelope(PartyId from, PartyId to, Tag tag, Payload payload, bool honest,
                                 std::optional<Ticks> forced_delay);
  std::string channel_name(std::uint8_t channel) const;
  TrialReport build_report();

  SimConfig config_;
  std::vector<std::unique_ptr<Process>> parties_;
  Adversary& adversary_;
  AdversaryContext adversary_ctx_;
  std::vector<std::unique_ptr<Functionality>> functionalities_;

  std::vector<EnvelopeMeta> meta_;
  std::vector<Payload> payloads_;
  std::vector<std::vector<std::uint64_t>> undelivered_by_sender_;
  std::vector<PendingLocal> locals_;
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> queue_;

  std::vector<std::uint8_t> corrupted_flag_;
  std::vector<PartyId> corrupted_;
  std::vector<std::pair<PartyId, Ticks>> corruption_log_;
  std::vector<std::optional<std::uint64_t>> outputs_;
  std::vector<std::optional<Ticks>> output_times_;
  std::map<std::pair<std::uint32_t, std::uint32_t>, CoinOutcome> revealed_coins_;

  std::vector<Rng> party_rngs_;
  Rng adversary_rng_;
  Rng harness_rng_;

  Ticks now_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t current_seq_ = 0;
  std::uint64_t events_ = 0;
  int handler_depth_ = 0;
  std::uint64_t actions_this_callback_ = 0;
  std::uint64_t step_budget_hits_ = 0;
  std::vector<std::uint64_t> sent_in_handler_;
  std::vector<AdversaryAction> deferred_;
  Ticks max_message_delay_ = 0;
  double max_functionality_delay_ = 0.0;
  std::uint64_t forced_ = 0;
  std::uint64_t dropped_ = 0;
  std::int64_t honest_without_output_ = 0;
  nlohmann::json ground_truth_ = nlohmann::json::object();
  std::vector<EventRecord> log_;
  bool started_ = false;
};

}  // namespace coinforge::sim
