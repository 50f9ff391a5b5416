#include "coinforge/strong_coin.hpp"

#include <stdexcept>

#include "coinforge/params.hpp"
#include "coinforge/protocols.hpp"

namespace coinforge {

std::string to_string(CoinKind kind) { return kind == CoinKind::kIdeal ? "ideal" : "benor"; }

CoinKind parse_coin_kind(const std::string& text) {
  if (text == "ideal") return CoinKind::kIdeal;
  if (text == "benor") return CoinKind::kBenOr;
  throw std::invalid_argument("unknown coin kind: " + text);
}

IdealCoin::IdealCoin(std::vector<std::vector<PartyId>> committees, double alpha, double delta, double R)
    : committees_(std::move(committees)), alpha_(alpha), delta_(delta), R_(R) {
  if (!(delta_ >= 0.0 && delta_ <= 1.0)) throw std::invalid_argument("coin fairness must lie in [0, 1]");
  if (!(R_ > 0.0)) throw std::invalid_argument("coin latency bound must be positive");
}

std::optional<IdealCoin::Record> IdealCoin::record(std::uint32_t session, std::uint32_t instance) const {
  auto it = records_.find({session, instance});
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

void IdealCoin::activate(PartyId party, std::uint32_t session, std::uint32_t instance,
                         sim::Simulation& sim) {
  const auto& members = committees_.at(instance);
  auto [it, fresh] = records_.try_emplace({session, instance});
  Record& rec = it->second;
  if (fresh) {
    rec.fair = sim.harness_rng().bernoulli(delta_);
    rec.bit = sim.harness_rng().bit() ? 1 : 0;
    sim.reveal_coin(session, instance, sim::CoinOutcome{rec.fair, rec.bit});
  }

  std::int64_t corrupted = 0;
  for (PartyId m : members) corrupted += sim.is_corrupted(m) ? 1 : 0;
  sim::CoinQuery query;
  query.session = session;
  query.instance = instance;
  query.member = party;
  query.fair = rec.fair;
  if (rec.fair) query.fair_bit = rec.bit;
  query.committee_bad =
      corrupted >= bad_member_threshold(alpha_, static_cast<std::int64_t>(members.size()));
  query.max_delay = static_cast<sim::Ticks>(R_ * static_cast<double>(sim::kTicksPerUnit));

  const sim::CoinDecision decision = sim.query_coin(query);
  if (decision.withhold) return;
  std::uint8_t bit = rec.bit;
  if (!rec.fair || query.committee_bad) {
    if (decision.bit) {
      bit = *decision.bit & 1U;
    } else if (!rec.fair) {
      bit = sim.harness_rng().bit() ? 1 : 0;
    }
  }
  rec.delivered.emplace_back(party, bit);
  sim.note_functionality_delay(decision.delay, R_);
  sim.schedule_local(party, decision.delay, sim::LocalEvent{id_, session, instance, bit});
}

// ---------------------------------------------------------------------------

namespace {

class CoinParty : public sim::Process {
 public:
  CoinParty(CoinKind kind, std::vector<PartyId> members, std::int64_t t_local, std::uint32_t coin_id)
      : kind_(kind), coin_id_(coin_id) {
    if (kind_ == CoinKind::kBenOr) benor_.emplace(std::move(members), t_local);
  }

  void start(sim::Context& ctx) override {
    if (kind_ == CoinKind::kIdeal) {
      ctx.activate(coin_id_, 0, 0);
      return;
    }
    const auto b = benor_->draw(ctx.rng());
    ctx.send_to(benor_->members(), sim::Tag{0, 0, kCoin, false}, sim::Payload::bit(b));
  }

  void receive(const sim::Envelope& env, sim::Context& ctx) override {
    if (!benor_ || env.tag().channel != kCoin) return;
    if (auto out = benor_->on_bit(env.sender(), env.payload.value)) ctx.output(*out);
  }

  void local(const sim::LocalEvent& ev, sim::Context& ctx) override {
    if (ev.source == coin_id_) ctx.output(ev.value);
  }

  nlohmann::json state() const override {
    return benor_ ? benor_->state() : nlohmann::json::object();
  }

  std::optional<std::uint8_t> drawn() const { return benor_ ? benor_->drawn() : std::nullopt; }

 private:
  CoinKind kind_;
  std::uint32_t coin_id_;
  std::optional<BenOrMember> benor_;
};

}  // namespace

bool CoinTrial::common_uniform() const {
  return report.agreed && truth.fair && truth.bit && report.output_value &&
         *report.output_value == *truth.bit;
}

CoinTrial run_coin_trial(const CoinTrialConfig& config, sim::Adversary& adversary, std::uint64_t seed) {
  std::vector<PartyId> members(static_cast<std::size_t>(config.n));
  for (std::size_t i = 0; i < members.size(); ++i) members[i] = static_cast<PartyId>(i);

  std::vector<std::unique_ptr<sim::Process>> parties;
  std::vector<CoinParty*> views;
  for (std::int64_t i = 0; i < config.n; ++i) {
    auto p = std::make_unique<CoinParty>(config.kind, members, config.t_local, 0);
    views.push_back(p.get());
    parties.push_back(std::move(p));
  }

  sim::SimConfig sc;
  sc.n = config.n;
  sc.t = config.t;
  sc.full_information = config.full_information;
  sc.seed = seed;
  sc.record_events = config.record_events;
  sc.channel_names = channel_names();
  sim::Simulation simulation(sc, std::move(parties), adversary);
  auto coin = std::make_unique<IdealCoin>(std::vector<std::vector<PartyId>>{members}, config.alpha,
                                          config.delta, config.R);
  IdealCoin* coin_view = coin.get();
  coin_view->set_id(simulation.add_functionality(std::move(coin)));

  CoinTrial trial;
  trial.report = simulation.run();
  if (config.kind == CoinKind::kIdeal) {
    if (auto rec = coin_view->record(0, 0)) {
      trial.truth.fair = rec->fair;
      trial.truth.bit = rec->bit;
    }
  } else {
    for (std::size_t i = 0; i < views.size(); ++i) {
      if (trial.report.honest[i] && views[i]->drawn()) trial.truth.honest_draws.push_back(*views[i]->drawn());
    }
    trial.truth.bit = benor_forced_bit(trial.truth.honest_draws, config.n, config.t_local);
    trial.truth.fair = trial.truth.bit.has_value();
  }
  trial.report.ground_truth = trial.truth;
  if (config.record_events) trial.event_log = simulation.event_log_ndjson();
  return trial;
}

void to_json(nlohmann::json& j, const CoinTruth& t) {
  j = {{"fair", t.fair}, {"bit", t.bit ? nlohmann::json(*t.bit) : nlohmann::json(nullptr)}};
  if (!t.honest_draws.empty()) j["honest_draws"] = t.honest_draws;
}

}  // namespace coinforge
