#include "coinforge/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "coinforge/rng.hpp"

namespace coinforge {

DelayMode parse_delay_mode(const std::string& text) {
  if (text == "fifo") return DelayMode::kFifo;
  if (text == "random") return DelayMode::kRandom;
  throw std::invalid_argument("unknown delay mode: " + text);
}

std::string to_string(DelayMode mode) { return mode == DelayMode::kFifo ? "fifo" : "random"; }

namespace {

sim::Ticks pick_delay(DelayMode mode, Rng& rng) {
  if (mode == DelayMode::kFifo) return sim::kTicksPerUnit;
  return 1 + static_cast<sim::Ticks>(rng.uniform(sim::kTicksPerUnit));
}

class CrusaderParty : public sim::Process {
 public:
  CrusaderParty(std::vector<PartyId> members, std::int64_t t, std::uint8_t input)
      : crusader_(std::move(members), t), input_(input) {}

  void start(sim::Context& ctx) override { emit(ctx, crusader_.start(input_)); }

  void receive(const sim::Envelope& env, sim::Context& ctx) override {
    emit(ctx, crusader_.on_message(env.sender(), env.tag().channel, env.payload.value));
  }

  nlohmann::json state() const override { return crusader_.state(); }

 private:
  void emit(sim::Context& ctx, const std::vector<CrusaderSend>& sends) {
    for (const auto& m : sends) {
      ctx.send_to(crusader_.members(), sim::Tag{0, 0, m.channel, false}, sim::Payload::bit(m.bit));
    }
    if (crusader_.output()) ctx.output(*crusader_.output());
  }

  Crusader crusader_;
  std::uint8_t input_;
};

class CrusaderAdversary : public sim::Adversary {
 public:
  CrusaderAdversary(const CrusaderScenario& scenario) : scenario_(scenario) {}

  std::string name() const override { return "crusader_script"; }

  void on_start(sim::AdversaryContext& ctx) override {
    for (std::size_t p = 0; p < scenario_.inputs.size(); ++p) {
      if (!scenario_.inputs[p]) ctx.corrupt(static_cast<PartyId>(p));
    }
    for (const auto& m : scenario_.script) {
      ctx.inject(m.from, m.to, sim::Tag{0, 0, m.channel, false}, sim::Payload::bit(m.bit), m.delay);
    }
  }

  sim::Ticks schedule(const sim::EnvelopeMeta& /*env*/, sim::AdversaryContext& ctx) override {
    return pick_delay(scenario_.delays, ctx.rng());
  }

  void on_byzantine_receive(const sim::EnvelopeMeta& env, const sim::Payload& payload,
                            sim::AdversaryContext& ctx) override {
    if (!scenario_.reactive || payload.value > 1) return;
    const PartyId p = env.recipient;
    for (PartyId r = 0; r < static_cast<PartyId>(ctx.n()); ++r) {
      if (ctx.is_corrupted(r)) continue;
      ctx.inject(p, r, sim::Tag{0, 0, env.tag.channel, false}, sim::Payload::bit(1 - payload.value),
                 pick_delay(scenario_.delays, ctx.rng()));
    }
  }

 private:
  const CrusaderScenario& scenario_;
};

}  // namespace

CrusaderTrial run_crusader_trial(const CrusaderScenario& scenario, std::uint64_t seed) {
  const std::int64_t s = scenario.s;
  if (static_cast<std::int64_t>(scenario.inputs.size()) != s) {
    throw std::invalid_argument("one input slot per crusader party");
  }
  std::vector<PartyId> members(static_cast<std::size_t>(s));
  for (std::size_t i = 0; i < members.size(); ++i) members[i] = static_cast<PartyId>(i);
  const std::int64_t t = crusader_fault_bound(s);

  std::vector<std::unique_ptr<sim::Process>> parties;
  std::int64_t byzantine = 0;
  for (std::int64_t i = 0; i < s; ++i) {
    const auto& in = scenario.inputs[static_cast<std::size_t>(i)];
    byzantine += in ? 0 : 1;
    parties.push_back(std::make_unique<CrusaderParty>(members, t, in.value_or(0)));
  }
  if (byzantine > t) throw std::invalid_argument("more byzantine parties than crusader tolerates");

  sim::SimConfig sc;
  sc.n = s;
  sc.t = t;
  sc.seed = seed;
  sc.record_events = scenario.record_events;
  sc.channel_names = channel_names();
  CrusaderAdversary adversary(scenario);
  sim::Simulation simulation(sc, std::move(parties), adversary);

  CrusaderTrial trial;
  trial.report = simulation.run();
  std::optional<std::uint8_t> common;
  bool unanimous = true;
  for (std::int64_t i = 0; i < s; ++i) {
    const auto& in = scenario.inputs[static_cast<std::size_t>(i)];
    if (!in) continue;
    if (common && *common != *in) unanimous = false;
    if (!common) common = in;
  }
  std::optional<std::uint64_t> seen_bit;
  for (std::int64_t i = 0; i < s; ++i) {
    if (!trial.report.honest[i]) continue;
    const auto out = trial.report.outputs[i];
    trial.honest_outputs.push_back(out);
    if (!out) {
      trial.liveness = false;
      continue;
    }
    if (unanimous && common && *out != *common) trial.validity = false;
    if (*out != sim::kBot) {
      if (seen_bit && *seen_bit != *out) trial.weak_agreement = false;
      seen_bit = out;
    }
  }
  if (scenario.record_events) trial.event_log = simulation.event_log_ndjson();
  return trial;
}

std::uint64_t behaviour_space_size(std::int64_t honest) {
  std::uint64_t size = 1;
  for (std::int64_t i = 0; i < honest; ++i) size *= 12;
  return size;
}

std::vector<ScriptedMessage> scripted_behaviour(PartyId byzantine, const std::vector<PartyId>& honest,
                                                std::uint64_t code, bool late) {
  std::vector<ScriptedMessage> out;
  const sim::Ticks delay = late ? sim::kTicksPerUnit : 1;
  for (PartyId r : honest) {
    const std::uint64_t digit = code % 12;
    code /= 12;
    const std::uint64_t vals = digit % 4;  // bit 0: VAL(0), bit 1: VAL(1)
    const std::uint64_t aux = digit / 4;   // 0 none, 1 AUX(0), 2 AUX(1)
    if (vals & 1U) out.push_back({byzantine, r, kCrusVal, 0, delay});
    if (vals & 2U) out.push_back({byzantine, r, kCrusVal, 1, delay});
    if (aux > 0) out.push_back({byzantine, r, kCrusAux, static_cast<std::uint8_t>(aux - 1), delay});
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

class PublishParty : public sim::Process {
 public:
  PublishParty(std::shared_ptr<const PublishTopology> topo, PartyId self, std::optional<std::uint8_t> input)
      : instance_(std::move(topo), self), self_(self), input_(input) {}

  void start(sim::Context& ctx) override {
    if (instance_.is_member() && input_) apply(ctx, instance_.set_input(*input_));
  }

  void receive(const sim::Envelope& env, sim::Context& ctx) override {
    apply(ctx, instance_.on_message(env.sender(), env.tag().channel, env.payload.value));
  }

  nlohmann::json state() const override { return instance_.state(); }

 private:
  void apply(sim::Context& ctx, const PublishStep& step) {
    const auto& topo = instance_.topology();
    for (const auto& m : step.crusader) {
      ctx.send_to(topo.graph().committee, sim::Tag{0, 0, m.channel, false}, sim::Payload::bit(m.bit));
    }
    if (step.publish) {
      ctx.send_to(topo.out_neighbors(self_), sim::Tag{0, 0, kPub, false}, sim::Payload::ternary(*step.publish));
    }
    if (step.output) ctx.output(*step.output);
  }

  PublishInstance instance_;
  PartyId self_;
  std::optional<std::uint8_t> input_;
};

class PublishAttacker : public sim::Adversary {
 public:
  PublishAttacker(const PublishScenario& scenario, std::shared_ptr<const PublishTopology> topo)
      : scenario_(scenario), topo_(std::move(topo)) {}

  std::string name() const override { return "publish_attacker"; }

  void on_start(sim::AdversaryContext& ctx) override {
    delayed_.assign(static_cast<std::size_t>(ctx.n()), 0);
    std::vector<PartyId> all(static_cast<std::size_t>(ctx.n()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<PartyId>(i);
    const auto count = static_cast<std::size_t>(
        std::llround(scenario_.delayed_fraction * static_cast<double>(ctx.n())));
    for (PartyId p : ctx.rng().sample_without_replacement(all, count)) delayed_[p] = 1;
  }

  sim::Ticks schedule(const sim::EnvelopeMeta& env, sim::AdversaryContext& ctx) override {
    if (env.tag.channel == kPub && delayed_[env.recipient]) return sim::kTicksPerUnit;
    return pick_delay(scenario_.delays, ctx.rng());
  }

  void on_sent(const sim::EnvelopeMeta& env, sim::AdversaryContext& ctx) override {
    if (env.tag.channel != kPub || ctx.is_corrupted(env.sender)) return;
    const auto& targets = scenario_.corrupt_on_publish;
    if (std::find(targets.begin(), targets.end(), env.sender) == targets.end()) return;
    ctx.corrupt(env.sender);
    ctx.drop_undelivered_from(env.sender);
    for (PartyId v : topo_->out_neighbors(env.sender)) {
      ctx.inject(env.sender, v, sim::Tag{0, 0, kPub, false}, sim::Payload::ternary(sim::kBot),
                 pick_delay(scenario_.delays, ctx.rng()));
    }
  }

 private:
  const PublishScenario& scenario_;
  std::shared_ptr<const PublishTopology> topo_;
  std::vector<std::uint8_t> delayed_;
};

}  // namespace

PublishTrial run_publish_trial(const PublishScenario& scenario, std::uint64_t seed) {
  auto topo = std::make_shared<const PublishTopology>(scenario.graph);
  const auto& committee = scenario.graph.committee;
  const auto n = static_cast<std::int64_t>(scenario.graph.adjacency.size());
  if (scenario.inputs.size() != committee.size()) {
    throw std::invalid_argument("one input per committee member");
  }
  std::vector<std::optional<std::uint8_t>> input_of(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < committee.size(); ++i) input_of[committee[i]] = scenario.inputs[i] & 1U;

  std::vector<std::unique_ptr<sim::Process>> parties;
  for (std::int64_t i = 0; i < n; ++i) {
    parties.push_back(std::make_unique<PublishParty>(topo, static_cast<PartyId>(i), input_of[i]));
  }
  sim::SimConfig sc;
  sc.n = n;
  sc.t = static_cast<std::int64_t>(scenario.corrupt_on_publish.size());
  sc.seed = seed;
  sc.record_events = scenario.record_events;
  sc.channel_names = channel_names();
  PublishAttacker adversary(scenario, topo);
  sim::Simulation simulation(sc, std::move(parties), adversary);

  PublishTrial trial;
  trial.report = simulation.run();
  for (const auto& o : trial.report.outputs) {
    trial.outputs.push_back(o ? std::optional<std::uint8_t>(static_cast<std::uint8_t>(*o)) : std::nullopt);
  }
  std::vector<PartyId> corrupted;
  for (const auto& [p, when] : trial.report.corruptions) corrupted.push_back(p);
  trial.reliable = reliable_receivers(scenario.graph, corrupted);

  // Inputs of the members that stayed honest.
  bool unanimous = true;
  for (std::size_t i = 0; i < committee.size(); ++i) {
    if (!trial.report.honest[committee[i]]) continue;
    const std::uint8_t b = scenario.inputs[i] & 1U;
    if (trial.common_input && *trial.common_input != b) unanimous = false;
    if (!trial.common_input) trial.common_input = b;
  }
  if (!unanimous) trial.common_input.reset();

  for (PartyId p : trial.reliable) {
    if (!trial.report.honest[p]) continue;
    const auto& out = trial.outputs[p];
    if (!out) {
      trial.clause1 = false;
      trial.clause2 = false;
      continue;
    }
    if (trial.common_input && *out != *trial.common_input) trial.clause2 = false;
  }
  if (trial.common_input) {
    for (std::int64_t i = 0; i < n; ++i) {
      if (trial.report.honest[i] && trial.outputs[i] == trial.common_input) ++trial.honest_with_common;
    }
  }
  if (scenario.record_events) trial.event_log = simulation.event_log_ndjson();
  return trial;
}

void to_json(nlohmann::json& j, const CrusaderTrial& t) {
  nlohmann::json outs = nlohmann::json::array();
  for (const auto& o : t.honest_outputs) {
    if (!o) {
      outs.push_back(nullptr);
    } else if (*o == sim::kBot) {
      outs.push_back("bot");
    } else {
      outs.push_back(*o);
    }
  }
  j = {{"report", t.report},
       {"honest_outputs", outs},
       {"validity", t.validity},
       {"weak_agreement", t.weak_agreement},
       {"liveness", t.liveness}};
}

void to_json(nlohmann::json& j, const PublishTrial& t) {
  j = {{"report", t.report},
       {"reliable", t.reliable},
       {"common_input", t.common_input ? nlohmann::json(*t.common_input) : nlohmann::json(nullptr)},
       {"clause1", t.clause1},
       {"clause2", t.clause2},
       {"honest_with_common", t.honest_with_common}};
}

}  // namespace coinforge
