#include "coinforge/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "coinforge/params.hpp"

namespace coinforge {

const std::vector<std::string>& strategy_names() {
  static const std::vector<std::string> names = {"fifo",           "random_delay",       "publish_delayer",
                                                 "committee_targeter", "targeter_delayer", "benor_biaser"};
  return names;
}

std::unique_ptr<sim::Adversary> make_strategy(const StrategySpec& spec, const StrategyEnv& env) {
  const auto& name = spec.name;
  if (name == "fifo") return std::make_unique<DelayStrategy>(name, false, spec.seed, 0.0);
  if (name == "random_delay") return std::make_unique<DelayStrategy>(name, true, spec.seed, 0.0);
  if (name == "publish_delayer") {
    if (!(spec.fraction >= 0.0 && spec.fraction <= 1.0)) {
      throw std::invalid_argument("publish_delayer fraction must lie in [0, 1]");
    }
    return std::make_unique<DelayStrategy>(name, true, spec.seed, spec.fraction);
  }
  if (name == "committee_targeter" || name == "targeter_delayer") {
    if (!env.layout || env.topologies.size() != env.layout->committees.size()) {
      throw std::invalid_argument(name + " needs the committee layout and publish graphs");
    }
    return std::make_unique<CommitteeTargeter>(spec, env, name == "targeter_delayer");
  }
  if (name == "benor_biaser") return std::make_unique<BenOrBiaser>(env.corruptions);
  throw std::invalid_argument("unknown strategy: " + name);
}

// ---------------------------------------------------------------------------

DelayStrategy::DelayStrategy(std::string name, bool random, std::uint64_t seed, double fraction)
    : name_(std::move(name)), random_(random), seed_(seed), fraction_(fraction) {}

void DelayStrategy::on_start(sim::AdversaryContext& ctx) {
  rng_ = Rng(derive_seed(seed_, ctx.rng().next()));
  delayed_.assign(static_cast<std::size_t>(ctx.n()), 0);
  const auto count = static_cast<std::size_t>(std::llround(fraction_ * static_cast<double>(ctx.n())));
  std::vector<PartyId> all(static_cast<std::size_t>(ctx.n()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<PartyId>(i);
  for (PartyId p : rng_.sample_without_replacement(all, count)) delayed_[p] = 1;
}

sim::Ticks DelayStrategy::base_delay() {
  if (!random_) return sim::kTicksPerUnit;
  return 1 + static_cast<sim::Ticks>(rng_.uniform(sim::kTicksPerUnit));
}

sim::Ticks DelayStrategy::schedule(const sim::EnvelopeMeta& env, sim::AdversaryContext& /*ctx*/) {
  if (env.tag.channel == kPub && !delayed_.empty() && delayed_[env.recipient]) return sim::kTicksPerUnit;
  return base_delay();
}

sim::CoinDecision DelayStrategy::on_coin(const sim::CoinQuery& query, sim::AdversaryContext& /*ctx*/) {
  sim::CoinDecision d;
  d.delay = random_ ? static_cast<sim::Ticks>(rng_.uniform(static_cast<std::uint64_t>(query.max_delay) + 1))
                    : query.max_delay;
  return d;
}

// ---------------------------------------------------------------------------

CommitteeTargeter::CommitteeTargeter(StrategySpec spec, StrategyEnv env, bool random_delays)
    : DelayStrategy(spec.name, random_delays, spec.seed, random_delays ? spec.fraction : 0.0),
      spec_(std::move(spec)),
      env_(std::move(env)) {}

void CommitteeTargeter::on_start(sim::AdversaryContext& ctx) {
  DelayStrategy::on_start(ctx);
  const auto& committees = env_.layout->committees;
  std::vector<std::int64_t> targets = spec_.committees;
  if (targets.empty()) {
    for (std::size_t j = 0; j < committees.size(); ++j) targets.push_back(static_cast<std::int64_t>(j));
  }
  for (auto j : targets) {
    if (j < 0 || j >= static_cast<std::int64_t>(committees.size())) {
      throw std::invalid_argument("committee_targeter names a committee outside [0, q)");
    }
  }
  auto need_of = [&](std::int64_t j) {
    const auto& members = committees[j];
    std::int64_t have = 0;
    for (PartyId m : members) have += ctx.is_corrupted(m) ? 1 : 0;
    return std::max<std::int64_t>(
        0, bad_member_threshold(env_.alpha, static_cast<std::int64_t>(members.size())) - have);
  };
  auto corrupt_members = [&](std::int64_t j, std::int64_t count) {
    for (PartyId m : committees[j]) {
      if (count <= 0) break;
      if (ctx.is_corrupted(m)) continue;
      ctx.corrupt(m);
      --count;
    }
  };

  if (!spec_.limit) {
    for (auto j : targets) corrupt_members(j, need_of(j));
    return;
  }
  // With a limit: cheapest committee first, spending any remainder on the
  // next one.
  const std::int64_t cap = std::min(*spec_.limit, ctx.t());
  std::vector<std::int64_t> open = targets;
  while (!open.empty()) {
    const std::int64_t left = cap - static_cast<std::int64_t>(ctx.corrupted().size());
    if (left <= 0) break;
    auto best = std::min_element(open.begin(), open.end(),
                                 [&](auto a, auto b) { return need_of(a) < need_of(b); });
    const std::int64_t j = *best;
    open.erase(best);
    corrupt_members(j, std::min(need_of(j), left));
  }
}

std::uint8_t CommitteeTargeter::push_bit(sim::AdversaryContext& ctx, std::uint32_t session) const {
  std::int64_t ones = 0;
  std::int64_t zeros = 0;
  for (std::size_t j = 0; j < env_.layout->committees.size(); ++j) {
    auto out = ctx.coin_outcome(session, static_cast<std::uint32_t>(j));
    if (!out || !out->fair) continue;
    (out->bit ? ones : zeros) += 1;
  }
  return ones > zeros ? 0 : 1;
}

sim::CoinDecision CommitteeTargeter::on_coin(const sim::CoinQuery& query, sim::AdversaryContext& ctx) {
  sim::CoinDecision d = DelayStrategy::on_coin(query, ctx);
  if (query.committee_bad || !query.fair) d.bit = push_bit(ctx, query.session);
  return d;
}

void CommitteeTargeter::on_byzantine_receive(const sim::EnvelopeMeta& env, const sim::Payload& /*payload*/,
                                             sim::AdversaryContext& ctx) {
  const PartyId p = env.recipient;
  const auto session = env.tag.session;
  const auto j = env.tag.instance;
  const std::uint8_t push = push_bit(ctx, session);

  if (majority_sent_.insert({p, session}).second) {
    for (PartyId r = 0; r < static_cast<PartyId>(ctx.n()); ++r) {
      if (r == p || ctx.is_corrupted(r)) continue;
      ctx.inject(p, r, sim::Tag{session, 0, kMaj, true}, sim::Payload::bit(push), 1);
    }
  }
  if (!is_crusader_channel(env.tag.channel) && env.tag.channel != kCoin) return;
  if (j >= env_.topologies.size() || !acted_.insert({p, session, j}).second) return;
  const auto& topo = *env_.topologies[j];
  if (!topo.is_member(p)) return;

  auto outcome = ctx.coin_outcome(session, j);
  const std::uint8_t flipped = outcome && outcome->fair ? static_cast<std::uint8_t>(1 - outcome->bit) : push;
  for (PartyId m : topo.graph().committee) {
    if (m == p || ctx.is_corrupted(m)) continue;
    ctx.inject(p, m, sim::Tag{session, j, kCrusVal, true}, sim::Payload::bit(flipped), 1);
    ctx.inject(p, m, sim::Tag{session, j, kCrusAux, true}, sim::Payload::bit(flipped), 1);
  }
  for (PartyId v : topo.out_neighbors(p)) {
    if (ctx.is_corrupted(v)) continue;
    ctx.inject(p, v, sim::Tag{session, j, kPub, true}, sim::Payload::ternary(flipped), 1);
  }
}

// ---------------------------------------------------------------------------

void BenOrBiaser::on_start(sim::AdversaryContext& ctx) {
  bits_.assign(static_cast<std::size_t>(ctx.n()), -1);
  std::vector<PartyId> all(static_cast<std::size_t>(ctx.n()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<PartyId>(i);
  const auto count = static_cast<std::size_t>(std::min(corruptions_, ctx.t()));
  for (PartyId p : ctx.rng().sample_without_replacement(all, count)) ctx.corrupt(p);
}

sim::Ticks BenOrBiaser::schedule(const sim::EnvelopeMeta& /*env*/, sim::AdversaryContext& /*ctx*/) {
  return sim::kTicksPerUnit;
}

void BenOrBiaser::on_sent(const sim::EnvelopeMeta& env, sim::AdversaryContext& ctx) {
  if (fired_ || env.tag.channel != kCoin || !env.honest_sender) return;
  if (bits_[env.sender] < 0) {
    bits_[env.sender] = static_cast<std::int8_t>(ctx.payload(env).value);
    ++seen_;
  }
  const std::int64_t honest = ctx.n() - static_cast<std::int64_t>(ctx.corrupted().size());
  if (seen_ < honest) return;
  fired_ = true;

  std::int64_t ones = 0;
  for (auto b : bits_) ones += b == 1 ? 1 : 0;
  const std::uint8_t majority = 2 * ones > honest ? 1 : 0;

  std::vector<std::uint64_t> minority;
  for (const auto& m : ctx.transcript()) {
    if (m.tag.channel != kCoin || !m.honest_sender || m.delivered_at || m.sender == m.recipient) continue;
    if (ctx.payload(m).value != majority) minority.push_back(m.id);
  }
  for (auto id : minority) ctx.reschedule(id, 1);
  const std::vector<PartyId> corrupted = ctx.corrupted();
  for (PartyId p : corrupted) {
    for (PartyId r = 0; r < static_cast<PartyId>(ctx.n()); ++r) {
      if (ctx.is_corrupted(r)) continue;
      ctx.inject(p, r, sim::Tag{0, 0, kCoin, false}, sim::Payload::bit(1 - majority), 1);
    }
  }
}

}  // namespace coinforge
