#include "coinforge/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace coinforge::sim {
namespace {

constexpr std::uint64_t kPartyStream = 0x7061727479ULL;
constexpr std::uint64_t kAdversaryStream = 0x616476ULL;
constexpr std::uint64_t kHarnessStream = 0x6861726eULL;

}  // namespace

// ---------------------------------------------------------------------------
// Context

std::int64_t Context::n() const { return sim_.config().n; }
Ticks Context::now() const { return sim_.now(); }
Rng& Context::rng() { return sim_.party_rng(self_); }

void Context::send(PartyId to, Tag tag, Payload payload) { sim_.send(self_, to, tag, payload); }

void Context::send_to(const std::vector<PartyId>& recipients, Tag tag, Payload payload) {
  for (PartyId to : recipients) sim_.send(self_, to, tag, payload);
}

void Context::send_all(Tag tag, Payload payload) {
  const auto n = static_cast<PartyId>(sim_.config().n);
  for (PartyId to = 0; to < n; ++to) sim_.send(self_, to, tag, payload);
}

void Context::output(std::uint64_t value) { sim_.output(self_, value); }

void Context::activate(std::uint32_t functionality, std::uint32_t session, std::uint32_t instance) {
  sim_.activate(self_, functionality, session, instance);
}

// ---------------------------------------------------------------------------
// Adversary defaults

CoinDecision Adversary::on_coin(const CoinQuery& query, AdversaryContext& /*ctx*/) {
  return CoinDecision{query.max_delay, std::nullopt, false};
}

Ticks AdversaryContext::now() const { return sim_.now(); }
std::int64_t AdversaryContext::n() const { return sim_.config().n; }
std::int64_t AdversaryContext::t() const { return sim_.config().t; }
std::int64_t AdversaryContext::budget_remaining() const {
  return sim_.config().t - static_cast<std::int64_t>(sim_.corrupted_list().size());
}
bool AdversaryContext::is_corrupted(PartyId p) const { return sim_.is_corrupted(p); }
const std::vector<PartyId>& AdversaryContext::corrupted() const { return sim_.corrupted_list(); }
bool AdversaryContext::full_information() const { return sim_.config().full_information; }
Rng& AdversaryContext::rng() { return sim_.adversary_rng(); }
const std::vector<EnvelopeMeta>& AdversaryContext::transcript() const { return sim_.transcript(); }

std::optional<Payload> AdversaryContext::try_payload(const EnvelopeMeta& env) const {
  if (sim_.config().full_information || sim_.is_corrupted(env.sender) ||
      sim_.is_corrupted(env.recipient)) {
    return sim_.payload_of(env.id);
  }
  return std::nullopt;
}

Payload AdversaryContext::payload(const EnvelopeMeta& env) const {
  auto p = try_payload(env);
  if (!p) throw StrategyViolation("reading the payload of a secure channel between honest parties");
  return *p;
}

nlohmann::json AdversaryContext::party_state(PartyId p) const { return sim_.party_state(p); }

std::optional<CoinOutcome> AdversaryContext::coin_outcome(std::uint32_t session,
                                                          std::uint32_t instance) const {
  return sim_.coin_outcome(session, instance);
}

void AdversaryContext::act(const AdversaryAction& action) { sim_.submit(action); }

// ---------------------------------------------------------------------------
// Simulation

Simulation::Simulation(SimConfig config, std::vector<std::unique_ptr<Process>> parties,
                       Adversary& adversary)
    : config_(std::move(config)),
      parties_(std::move(parties)),
      adversary_(adversary),
      adversary_ctx_(*this),
      adversary_rng_(derive_seed(config_.seed, kAdversaryStream)),
      harness_rng_(derive_seed(config_.seed, kHarnessStream)) {
  if (config_.n < 1 || static_cast<std::int64_t>(parties_.size()) != config_.n) {
    throw std::invalid_argument("simulation needs exactly n parties");
  }
  if (config_.t < 0 || config_.t > config_.n) throw std::invalid_argument("bad corruption budget");
  const auto n = static_cast<std::size_t>(config_.n);
  undelivered_by_sender_.resize(n);
  corrupted_flag_.assign(n, 0);
  outputs_.assign(n, std::nullopt);
  output_times_.assign(n, std::nullopt);
  party_rngs_.reserve(n);
  for (std::size_t p = 0; p < n; ++p) party_rngs_.emplace_back(derive_seed(config_.seed, kPartyStream, p));
  honest_without_output_ = config_.n;
}

Simulation::~Simulation() = default;

std::uint32_t Simulation::add_functionality(std::unique_ptr<Functionality> f) {
  functionalities_.push_back(std::move(f));
  return static_cast<std::uint32_t>(functionalities_.size() - 1);
}

template <typename F>
void Simulation::in_callback(F&& f) {
  actions_this_callback_ = 0;
  f();
}

template <typename F>
void Simulation::in_handler(F&& f) {
  ++handler_depth_;
  f();
  --handler_depth_;
  if (handler_depth_ > 0) return;
  flush_deferred();
  auto sent = std::exchange(sent_in_handler_, {});
  for (std::uint64_t id : sent) {
    const EnvelopeMeta m = meta_[id];
    in_callback([&] { adversary_.on_sent(m, adversary_ctx_); });
  }
}

void Simulation::flush_deferred() {
  auto pending = std::exchange(deferred_, {});
  for (const auto& a : pending) apply(a);
}

void Simulation::submit(const AdversaryAction& action) {
  if (++actions_this_callback_ > config_.max_actions_per_callback) {
    ++step_budget_hits_;
    return;
  }
  if (handler_depth_ > 0) {
    deferred_.push_back(action);
  } else {
    apply(action);
  }
}

void Simulation::apply(const AdversaryAction& action) {
  if (action.kind == AdversaryAction::Kind::kReschedule) {
    if (action.envelope >= meta_.size()) throw StrategyViolation("rescheduling an unknown envelope");
    auto& m = meta_[action.envelope];
    if (m.delivered_at || m.dropped || m.sender == m.recipient) return;
    Ticks at = now_ + std::max<Ticks>(action.delay, 1);
    const Ticks deadline = m.sent_at + kTicksPerUnit;
    if (at > deadline) at = deadline;
    m.deliver_at = at;
    queue_.push(QueueEntry{at, ++seq_, false, m.id});
    record("reschedule", m.id, std::nullopt, {{"deliver_at", to_units(at)}});
    return;
  }
  const PartyId p = action.party;
  if (p >= static_cast<PartyId>(config_.n)) throw StrategyViolation("action names a party outside [0, n)");
  switch (action.kind) {
    case AdversaryAction::Kind::kCorrupt: {
      if (corrupted_flag_[p]) return;
      if (static_cast<std::int64_t>(corrupted_.size()) >= config_.t) {
        throw StrategyViolation("corruption budget exceeded");
      }
      corrupted_flag_[p] = 1;
      corrupted_.push_back(p);
      corruption_log_.emplace_back(p, now_);
      if (!outputs_[p]) --honest_without_output_;
      record("corrupt", std::nullopt, p);
      return;
    }
    case AdversaryAction::Kind::kDropUndelivered: {
      if (!corrupted_flag_[p]) throw StrategyViolation("dropping a message of an honest sender");
      for (std::uint64_t id : undelivered_by_sender_[p]) {
        auto& m = meta_[id];
        if (m.delivered_at || m.dropped) continue;
        m.dropped = true;
        ++dropped_;
        record("drop", id, std::nullopt);
      }
      undelivered_by_sender_[p].clear();
      return;
    }
    case AdversaryAction::Kind::kReschedule:
      return;
    case AdversaryAction::Kind::kInject: {
      if (!corrupted_flag_[p]) throw StrategyViolation("injecting a message from an honest party");
      if (action.to >= static_cast<PartyId>(config_.n)) {
        throw StrategyViolation("injected message names a recipient outside [0, n)");
      }
      enqueue_envelope(p, action.to, action.tag, action.payload, false, action.delay);
      return;
    }
  }
}

std::uint64_t Simulation::enqueue_envelope(PartyId from, PartyId to, Tag tag, Payload payload,
                                           bool honest, std::optional<Ticks> forced_delay) {
  EnvelopeMeta m;
  m.id = meta_.size();
  m.sender = from;
  m.recipient = to;
  m.tag = tag;
  m.sent_at = now_;
  m.size_bits = payload.bits + (tag.on_wire ? config_.tag_bits : 0);
  m.honest_sender = honest;

  Ticks delay = 0;
  if (from != to) {
    if (forced_delay) {
      delay = *forced_delay;
    } else {
      in_callback([&] { delay = adversary_.schedule(m, adversary_ctx_); });
    }
    if (delay < 1) delay = 1;
    if (delay > kTicksPerUnit) {
      delay = kTicksPerUnit;
      m.forced = true;
      ++forced_;
    }
  }
  m.deliver_at = now_ + delay;

  meta_.push_back(m);
  payloads_.push_back(payload);
  undelivered_by_sender_[from].push_back(m.id);
  const std::uint64_t seq = ++seq_;
  queue_.push(QueueEntry{m.deliver_at, seq, false, m.id});
  if (honest && handler_depth_ > 0) sent_in_handler_.push_back(m.id);
  if (config_.record_events) {
    record("send", m.id, std::nullopt,
           {{"from", from}, {"to", to}, {"channel", channel_name(tag.channel)},
            {"instance", tag.instance}, {"session", tag.session}, {"deliver_at", to_units(m.deliver_at)},
            {"queue_seq", seq}, {"honest_sender", honest}});
  }
  return m.id;
}

void Simulation::send(PartyId from, PartyId to, Tag tag, Payload payload) {
  if (to >= static_cast<PartyId>(config_.n)) throw SimulationError("recipient outside [0, n)");
  if (corrupted_flag_[from]) return;
  enqueue_envelope(from, to, tag, payload, true, std::nullopt);
}

void Simulation::output(PartyId party, std::uint64_t value) {
  if (outputs_[party]) return;
  outputs_[party] = value;
  output_times_[party] = now_;
  if (!corrupted_flag_[party]) --honest_without_output_;
  record("output", std::nullopt, party, {{"value", value}});
  in_callback([&] { adversary_.on_output(party, value, adversary_ctx_); });
}

void Simulation::activate(PartyId party, std::uint32_t functionality, std::uint32_t session,
                          std::uint32_t instance) {
  functionalities_.at(functionality)->activate(party, session, instance, *this);
}

void Simulation::schedule_local(PartyId party, Ticks delay, LocalEvent ev) {
  locals_.push_back(PendingLocal{party, ev});
  queue_.push(QueueEntry{now_ + std::max<Ticks>(delay, 0), ++seq_, true, locals_.size() - 1});
}

CoinDecision Simulation::query_coin(const CoinQuery& query) {
  CoinDecision d;
  in_callback([&] { d = adversary_.on_coin(query, adversary_ctx_); });
  if (!query.committee_bad) {
    if (d.withhold) throw StrategyViolation("withholding the coin of a committee that is not bad");
    if (query.fair && d.bit) throw StrategyViolation("choosing the output of a fair coin instance");
  }
  d.delay = std::clamp<Ticks>(d.delay, 0, query.max_delay);
  return d;
}

void Simulation::reveal_coin(std::uint32_t session, std::uint32_t instance, CoinOutcome outcome) {
  revealed_coins_[{session, instance}] = outcome;
}

void Simulation::note_functionality_delay(Ticks delay, double rounds) {
  if (rounds <= 0) rounds = 1;
  max_functionality_delay_ = std::max(max_functionality_delay_, static_cast<double>(delay) / rounds);
}

std::optional<CoinOutcome> Simulation::coin_outcome(std::uint32_t session,
                                                    std::uint32_t instance) const {
  auto it = revealed_coins_.find({session, instance});
  if (it == revealed_coins_.end()) return std::nullopt;
  return it->second;
}

nlohmann::json Simulation::party_state(PartyId p) const {
  if (p >= static_cast<PartyId>(config_.n) || !corrupted_flag_[p]) {
    throw StrategyViolation("reading the state of an honest party");
  }
  return parties_[p]->state();
}

void Simulation::deliver(std::uint64_t id) {
  if (meta_[id].dropped || meta_[id].delivered_at || meta_[id].deliver_at != now_) return;
  meta_[id].delivered_at = now_;
  const EnvelopeMeta m = meta_[id];
  const Payload payload = payloads_[id];
  if (m.honest_sender && m.sender != m.recipient) {
    max_message_delay_ = std::max(max_message_delay_, now_ - m.sent_at);
  }
  if (config_.record_events) record("deliver", id, std::nullopt, {{"to", m.recipient}});
  if (corrupted_flag_[m.recipient]) {
    in_callback([&] { adversary_.on_byzantine_receive(m, payload, adversary_ctx_); });
    return;
  }
  Context ctx(*this, m.recipient);
  in_handler([&] { parties_[m.recipient]->receive(Envelope{m, payload}, ctx); });
  in_callback([&] { adversary_.on_deliver(m, adversary_ctx_); });
}

void Simulation::run_local(std::uint64_t index) {
  const PendingLocal pending = locals_[index];
  if (corrupted_flag_[pending.party]) return;
  if (config_.record_events) {
    record("local", std::nullopt, pending.party,
           {{"source", pending.event.source}, {"instance", pending.event.instance},
            {"value", pending.event.value}});
  }
  Context ctx(*this, pending.party);
  in_handler([&] { parties_[pending.party]->local(pending.event, ctx); });
}

void Simulation::record(std::string kind, std::optional<std::uint64_t> env,
                        std::optional<PartyId> party, nlohmann::json detail) {
  if (!config_.record_events) return;
  log_.push_back(EventRecord{now_, current_seq_, std::move(kind), env, party, std::move(detail)});
}

std::string Simulation::channel_name(std::uint8_t channel) const {
  if (channel < config_.channel_names.size()) return config_.channel_names[channel];
  return "ch" + std::to_string(channel);
}

TrialReport Simulation::run() {
  if (started_) throw SimulationError("a simulation runs once");
  started_ = true;
  if (adversary_.requires_full_information() && !config_.full_information) {
    throw StrategyViolation("strategy " + adversary_.name() +
                            " needs full information but channels are secure");
  }

  in_callback([&] { adversary_.on_start(adversary_ctx_); });
  for (PartyId p = 0; p < static_cast<PartyId>(config_.n); ++p) {
    if (corrupted_flag_[p]) continue;
    Context ctx(*this, p);
    in_handler([&] { parties_[p]->start(ctx); });
  }

  while (!queue_.empty()) {
    if (config_.stop_when_all_output && honest_without_output_ <= 0) break;
    const QueueEntry e = queue_.top();
    queue_.pop();
    now_ = e.time;
    current_seq_ = e.seq;
    if (++events_ > config_.max_events) throw SimulationError("event limit exceeded");
    if (e.local) {
      run_local(e.index);
    } else {
      deliver(e.index);
    }
  }
  return build_report();
}

TrialReport Simulation::build_report() {
  TrialReport r;
  r.seed = config_.seed;
  r.n = config_.n;
  r.outputs = outputs_;
  r.output_times = output_times_;
  r.honest.resize(outputs_.size());
  r.all_honest_output = true;
  std::optional<std::uint64_t> common;
  bool agreed = true;
  for (std::size_t p = 0; p < outputs_.size(); ++p) {
    r.honest[p] = corrupted_flag_[p] == 0;
    if (!r.honest[p]) continue;
    if (!outputs_[p]) {
      r.all_honest_output = false;
      agreed = false;
      continue;
    }
    r.last_output_ticks = std::max(r.last_output_ticks, *output_times_[p]);
    if (!common) {
      common = outputs_[p];
    } else if (*common != *outputs_[p]) {
      agreed = false;
    }
  }
  r.agreed = agreed && r.all_honest_output;
  if (r.agreed) r.output_value = common;

  const auto fdelay = static_cast<Ticks>(std::ceil(max_functionality_delay_));
  r.normalizer_ticks = std::max(max_message_delay_, fdelay);
  if (r.normalizer_ticks <= 0) r.normalizer_ticks = kTicksPerUnit;
  r.latency = static_cast<double>(r.last_output_ticks) / static_cast<double>(r.normalizer_ticks);

  for (const auto& m : meta_) {
    const std::string ch = channel_name(m.tag.channel);
    if (m.honest_sender) {
      ++r.honest_messages;
      r.honest_bits += m.size_bits;
      ++r.honest_by_channel[ch];
      const auto kind = payloads_[m.id].kind;
      const char* bucket = kind == PayloadKind::kOpaque                     ? "opaque"
                           : (m.tag.on_wire && config_.tag_bits > 0)        ? "tagged"
                                                                            : "1-bit";
      ++r.msg_count_by_bucket[bucket];
      if (!m.dropped) {
        if (!m.delivered_at && queue_.empty()) r.eventual_delivery = false;
        if (m.delivered_at && *m.delivered_at - m.sent_at > kTicksPerUnit) r.eventual_delivery = false;
      }
    } else {
      ++r.byzantine_messages;
      ++r.byzantine_by_channel[ch];
    }
  }
  r.corruptions = corruption_log_;
  r.forced_deliveries = forced_;
  r.dropped = dropped_;
  r.step_budget_hits = step_budget_hits_;
  r.events = events_;
  r.ground_truth = ground_truth_;
  return r;
}

std::string Simulation::event_log_ndjson() const {
  std::ostringstream out;
  for (const auto& e : log_) {
    nlohmann::json j = e;
    out << j.dump() << '\n';
  }
  return out.str();
}

std::vector<PartyId> TrialReport::honest_parties() const {
  std::vector<PartyId> out;
  for (std::size_t p = 0; p < honest.size(); ++p) {
    if (honest[p]) out.push_back(static_cast<PartyId>(p));
  }
  return out;
}

void to_json(nlohmann::json& j, const EventRecord& e) {
  j = {{"time", to_units(e.time)}, {"seq", e.seq}, {"kind", e.kind}};
  if (e.envelope_id) j["envelope_id"] = *e.envelope_id;
  if (e.party) j["party"] = *e.party;
  j["detail"] = e.detail;
}

void to_json(nlohmann::json& j, const TrialReport& r) {
  nlohmann::json outputs = nlohmann::json::array();
  nlohmann::json times = nlohmann::json::array();
  for (std::size_t p = 0; p < r.outputs.size(); ++p) {
    outputs.push_back(r.outputs[p] ? nlohmann::json(*r.outputs[p]) : nlohmann::json(nullptr));
    times.push_back(r.output_times[p] ? nlohmann::json(to_units(*r.output_times[p]))
                                      : nlohmann::json(nullptr));
  }
  nlohmann::json corruptions = nlohmann::json::array();
  for (const auto& [p, t] : r.corruptions) corruptions.push_back({{"party", p}, {"time", to_units(t)}});
  j = {{"seed", r.seed},
       {"n", r.n},
       {"outputs", outputs},
       {"output_times", times},
       {"honest", r.honest},
       {"agreed", r.agreed},
       {"all_honest_output", r.all_honest_output},
       {"output_value", r.output_value ? nlohmann::json(*r.output_value) : nlohmann::json(nullptr)},
       {"latency", r.latency},
       {"normalizer", to_units(r.normalizer_ticks)},
       {"msg_count_by_bucket", r.msg_count_by_bucket},
       {"honest_by_channel", r.honest_by_channel},
       {"byzantine_by_channel", r.byzantine_by_channel},
       {"honest_messages", r.honest_messages},
       {"honest_bits", r.honest_bits},
       {"byzantine_messages", r.byzantine_messages},
       {"corruptions", corruptions},
       {"forced_deliveries", r.forced_deliveries},
       {"dropped", r.dropped},
       {"step_budget_hits", r.step_budget_hits},
       {"events", r.events},
       {"eventual_delivery", r.eventual_delivery},
       {"ground_truth", r.ground_truth}};
}

}  // namespace coinforge::sim
