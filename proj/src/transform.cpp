#include "coinforge/transform.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coinforge {

namespace {
constexpr std::uint64_t kGraphSeedStream = 0x6772617068ULL;
}

CommitteeBundle generate_bundle(const CoinParams& params, std::uint64_t seed, VerifyMode mode,
                                const Limits& limits) {
  const DerivedParams dp = derive_params(params);
  CommitteeSpec spec{dp.n, dp.q, dp.s, params.alpha, params.epsilon, dp.c};
  CommitteeBundle bundle;
  bundle.layout = gen_committees(spec, seed, mode, limits);
  bundle.graphs = gen_publish_graphs(bundle.layout, dp.d, dp.delta_cap,
                                     derive_seed(seed, kGraphSeedStream), mode, limits);
  return bundle;
}

std::shared_ptr<const TransformSetup> TransformSetup::make(const CoinParams& params,
                                                           const CommitteeBundle& bundle, CoinKind coin,
                                                           std::uint32_t sessions,
                                                           std::optional<std::int64_t> benor_t_local) {
  auto setup = std::make_shared<TransformSetup>();
  setup->params = params;
  setup->derived = derive_params(params);
  const auto& dp = setup->derived;
  if (bundle.layout.n != dp.n || bundle.layout.q != dp.q || bundle.layout.s != dp.s) {
    throw std::invalid_argument("committee layout does not match the derived parameters");
  }
  if (static_cast<std::int64_t>(bundle.graphs.size()) != dp.q) {
    throw std::invalid_argument("expected one publish graph per committee");
  }
  if (sessions < 1 || sessions > 64) throw std::invalid_argument("sessions must lie in [1, 64]");
  setup->layout = bundle.layout;
  for (const auto& g : bundle.graphs) {
    if (g.delta_cap != dp.delta_cap || static_cast<std::int64_t>(g.adjacency.size()) != dp.n) {
      throw std::invalid_argument("publish graph does not match the derived parameters");
    }
    setup->topologies.push_back(std::make_shared<const PublishTopology>(g));
  }
  setup->coin = coin;
  setup->sessions = sessions;
  setup->benor_t_local = benor_t_local.value_or(crusader_fault_bound(dp.s));
  return setup;
}

// ---------------------------------------------------------------------------

TransformParty::TransformParty(std::shared_ptr<const TransformSetup> setup, PartyId self,
                               std::uint32_t coin_id)
    : setup_(std::move(setup)), self_(self), coin_id_(coin_id) {
  const auto q = static_cast<std::size_t>(setup_->q());
  for (std::size_t j = 0; j < q; ++j) {
    if (setup_->topologies[j]->is_member(self_)) my_committees_.push_back(static_cast<std::uint32_t>(j));
  }
  sessions_.resize(setup_->sessions);
  for (auto& sess : sessions_) {
    sess.publish.reserve(q);
    for (std::size_t j = 0; j < q; ++j) sess.publish.emplace_back(setup_->topologies[j], self_);
    sess.benor.resize(q);
    if (setup_->coin == CoinKind::kBenOr) {
      for (auto j : my_committees_) sess.benor[j].emplace(setup_->layout.committees[j], setup_->benor_t_local);
    }
    sess.maj_heard.assign(static_cast<std::size_t>(setup_->n()), 0);
  }
}

void TransformParty::start(sim::Context& ctx) {
  for (std::uint32_t sid = 0; sid < sessions_.size(); ++sid) {
    for (auto j : my_committees_) {
      if (setup_->coin == CoinKind::kIdeal) {
        ctx.activate(coin_id_, sid, j);
      } else {
        auto& coin = *sessions_[sid].benor[j];
        const auto b = coin.draw(ctx.rng());
        ctx.send_to(coin.members(), sim::Tag{sid, j, kCoin, true}, sim::Payload::bit(b));
      }
    }
  }
}

void TransformParty::local(const sim::LocalEvent& ev, sim::Context& ctx) {
  if (ev.source != coin_id_ || ev.session >= sessions_.size()) return;
  coin_output(ctx, ev.session, ev.instance, static_cast<std::uint8_t>(ev.value & 1U));
}

void TransformParty::receive(const sim::Envelope& env, sim::Context& ctx) {
  const auto& tag = env.tag();
  if (tag.session >= sessions_.size()) return;
  auto& sess = sessions_[tag.session];
  const std::uint64_t value = env.payload.value;

  if (tag.channel == kMaj) {
    if (value > 1 || sess.maj_heard[env.sender()]) return;
    sess.maj_heard[env.sender()] = 1;
    ++sess.w[value];
    if (!sess.output && sess.w[0] + sess.w[1] == setup_->derived.output_threshold) {
      sess.output = sess.w[0] >= sess.w[1] ? 0 : 1;
      maybe_finish(ctx);
    }
    return;
  }
  if (tag.instance >= sess.publish.size()) return;
  if (tag.channel == kCoin) {
    auto& coin = sess.benor[tag.instance];
    if (!coin) return;
    if (auto b = coin->on_bit(env.sender(), value)) coin_output(ctx, tag.session, tag.instance, *b);
    return;
  }
  const PublishStep step = sess.publish[tag.instance].on_message(env.sender(), tag.channel, value);
  apply(ctx, tag.session, tag.instance, step);
}

void TransformParty::coin_output(sim::Context& ctx, std::uint32_t session, std::uint32_t j, std::uint8_t b) {
  const PublishStep step = sessions_[session].publish.at(j).set_input(b);
  apply(ctx, session, j, step);
}

void TransformParty::apply(sim::Context& ctx, std::uint32_t session, std::uint32_t j,
                           const PublishStep& step) {
  const auto& topo = *setup_->topologies[j];
  for (const auto& m : step.crusader) {
    ctx.send_to(topo.graph().committee, sim::Tag{session, j, m.channel, true}, sim::Payload::bit(m.bit));
  }
  if (step.publish) {
    ctx.send_to(topo.out_neighbors(self_), sim::Tag{session, j, kPub, true},
                sim::Payload::ternary(*step.publish));
  }
  if (step.output) publish_output(ctx, session, *step.output);
}

void TransformParty::publish_output(sim::Context& ctx, std::uint32_t session, std::uint8_t b) {
  auto& sess = sessions_[session];
  ++sess.v[b];
  if (!sess.majority_sent && sess.v[0] + sess.v[1] == setup_->derived.live_threshold) {
    sess.majority_sent = true;
    const std::uint8_t maj = sess.v[0] >= sess.v[1] ? 0 : 1;
    ctx.send_all(sim::Tag{session, 0, kMaj, setup_->sessions > 1}, sim::Payload::bit(maj));
  }
}

void TransformParty::maybe_finish(sim::Context& ctx) {
  if (finished_) return;
  std::vector<std::uint8_t> bits;
  for (const auto& sess : sessions_) {
    if (!sess.output) return;
    bits.push_back(*sess.output);
  }
  finished_ = true;
  ctx.output(concat_bits(bits));
}

std::optional<std::uint8_t> TransformParty::drawn(std::uint32_t session, std::int64_t j) const {
  const auto& coin = sessions_.at(session).benor.at(static_cast<std::size_t>(j));
  return coin ? coin->drawn() : std::nullopt;
}

std::uint64_t TransformParty::discarded() const {
  std::uint64_t total = 0;
  for (const auto& sess : sessions_) {
    for (const auto& p : sess.publish) total += p.discarded();
  }
  return total;
}

nlohmann::json TransformParty::state() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& sess : sessions_) {
    nlohmann::json j;
    j["v"] = {sess.v[0], sess.v[1]};
    j["w"] = {sess.w[0], sess.w[1]};
    j["majority_sent"] = sess.majority_sent;
    j["output"] = sess.output ? nlohmann::json(*sess.output) : nlohmann::json(nullptr);
    nlohmann::json pubs = nlohmann::json::object();
    for (auto c : my_committees_) pubs[std::to_string(c)] = sess.publish[c].state();
    j["committees"] = pubs;
    out.push_back(j);
  }
  return {{"sessions", out}};
}

// ---------------------------------------------------------------------------

bool TransformTrial::common_uniform() const {
  if (!report.all_honest_output) return false;
  for (std::size_t sid = 0; sid < truth.size(); ++sid) {
    if (!truth[sid].bstar || !session_values[sid] || *session_values[sid] != *truth[sid].bstar) return false;
  }
  return true;
}

TransformTrial run_transform_trial(const std::shared_ptr<const TransformSetup>& setup,
                                   sim::Adversary& adversary, std::uint64_t seed,
                                   const TrialOptions& options) {
  const auto n = setup->n();
  std::vector<std::unique_ptr<sim::Process>> parties;
  std::vector<TransformParty*> views;
  for (std::int64_t i = 0; i < n; ++i) {
    auto p = std::make_unique<TransformParty>(setup, static_cast<PartyId>(i), 0);
    views.push_back(p.get());
    parties.push_back(std::move(p));
  }

  sim::SimConfig sc;
  sc.n = n;
  sc.t = options.t.value_or(max_corruptions(setup->params));
  sc.full_information = options.full_information;
  sc.seed = seed;
  sc.tag_bits = tag_bits_for(setup->q());
  sc.record_events = options.record_events;
  sc.channel_names = channel_names();
  sim::Simulation simulation(sc, std::move(parties), adversary);
  auto coin = std::make_unique<IdealCoin>(setup->layout.committees, setup->params.alpha,
                                          setup->params.delta, setup->params.R);
  IdealCoin* coin_view = coin.get();
  coin_view->set_id(simulation.add_functionality(std::move(coin)));

  TransformTrial trial;
  trial.report = simulation.run();
  const auto& report = trial.report;
  const auto q = setup->q();
  const double margin = 5.0 * setup->derived.z_prime * std::sqrt(static_cast<double>(q)) / 4.0;

  for (std::uint32_t sid = 0; sid < setup->sessions; ++sid) {
    SessionTruth st;
    st.fair.assign(static_cast<std::size_t>(q), false);
    st.bits.assign(static_cast<std::size_t>(q), 0);
    for (std::int64_t j = 0; j < q; ++j) {
      if (setup->coin == CoinKind::kIdeal) {
        if (auto rec = coin_view->record(sid, static_cast<std::uint32_t>(j))) {
          st.fair[j] = rec->fair;
          st.bits[j] = rec->bit;
        }
      } else {
        std::vector<std::uint8_t> draws;
        for (PartyId m : setup->layout.committees[j]) {
          if (!report.honest[m]) continue;
          if (auto b = views[m]->drawn(sid, j)) draws.push_back(*b);
        }
        auto forced = benor_forced_bit(draws, setup->s(), setup->benor_t_local);
        st.fair[j] = forced.has_value();
        st.bits[j] = forced.value_or(0);
      }
      st.ones += st.bits[j];
    }
    st.all_fair = std::all_of(st.fair.begin(), st.fair.end(), [](bool f) { return f; });
    const std::int64_t gap = 2 * st.ones - q;
    if (gap == 0) throw std::logic_error("q is odd, so the committee vote cannot tie");
    st.margin = static_cast<double>(std::llabs(gap)) >= margin;
    if (st.all_fair && st.margin) st.bstar = gap > 0 ? 1 : 0;
    trial.truth.push_back(st);

    std::optional<std::uint8_t> common;
    bool ok = true;
    for (std::int64_t i = 0; i < n && ok; ++i) {
      if (!report.honest[i]) continue;
      auto out = views[i]->session_output(sid);
      if (!out || (common && *common != *out)) ok = false;
      if (!common) common = out;
    }
    trial.session_values.push_back(ok ? common : std::nullopt);
  }
  for (auto* v : views) trial.discarded += v->discarded();

  nlohmann::json truth = nlohmann::json::array();
  for (const auto& st : trial.truth) truth.push_back(st);
  trial.report.ground_truth = {{"sessions", truth}, {"common_uniform", trial.common_uniform()}};
  if (options.record_events) trial.event_log = simulation.event_log_ndjson();
  return trial;
}

// ---------------------------------------------------------------------------

double per_bit_delta(double delta, std::int64_t ell) {
  if (ell < 1) throw std::invalid_argument("ell must be at least 1");
  return 1.0 - (1.0 - delta) / static_cast<double>(ell);
}

std::uint64_t concat_bits(const std::vector<std::uint8_t>& bits) {
  std::uint64_t value = 0;
  for (auto b : bits) value = (value << 1) | (b & 1U);
  return value;
}

std::int64_t elect_leader(std::uint64_t value, std::int64_t n) {
  if (n < 1) throw std::invalid_argument("n must be positive");
  return static_cast<std::int64_t>(value % static_cast<std::uint64_t>(n)) + 1;
}

void to_json(nlohmann::json& j, const SessionTruth& t) {
  j = {{"fair", t.fair},
       {"bits", t.bits},
       {"ones", t.ones},
       {"all_fair", t.all_fair},
       {"margin", t.margin},
       {"bstar", t.bstar ? nlohmann::json(*t.bstar) : nlohmann::json(nullptr)}};
}

}  // namespace coinforge
