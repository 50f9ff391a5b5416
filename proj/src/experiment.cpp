#include "coinforge/experiment.hpp"

#include <algorithm>
#include <fstream>

#include "coinforge/protocols.hpp"
#include "coinforge/rng.hpp"
#include "coinforge/strategies.hpp"
#include "coinforge/strong_coin.hpp"

namespace coinforge {

namespace {
constexpr std::uint64_t kTrialStream = 0x747269616cULL;
constexpr std::uint64_t kCommitteeStream = 0x636f6d6dULL;
constexpr std::uint64_t kGraphStream = 0x6772617068ULL;
constexpr std::uint64_t kScenarioStream = 0x7363656eULL;
}  // namespace

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t index) {
  return derive_seed(seed, kTrialStream, index);
}

CommitteeBundle load_bundle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open layout file: " + path);
  try {
    nlohmann::json j;
    in >> j;
    if (j.contains("result") && j.contains("config_digest")) j = j.at("result");
    return j.get<CommitteeBundle>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed layout file " + path + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("malformed layout file " + path + ": " + e.what());
  }
}

void save_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << j.dump(2) << '\n';
}

CommitteeBundle bundle_for(const ExperimentConfig& cfg) {
  if (cfg.layout) return load_bundle(*cfg.layout);
  return generate_bundle(cfg.params, cfg.seed, parse_verify_mode(cfg.verify));
}

std::int64_t transform_budget(const CoinParams& p) { return p.t > 0 ? p.t : max_corruptions(p); }

Polynomial coin_message_poly(CoinKind kind) {
  return kind == CoinKind::kIdeal ? Polynomial::constant(0.0) : Polynomial::monomial(2.0);
}

FairnessRun run_fairness(const ExperimentConfig& cfg, const CommitteeBundle* bundle) {
  FairnessRun run;
  const CoinKind kind = parse_coin_kind(cfg.coin);
  std::function<TrialOutcome(std::uint64_t)> one;
  double bound = 0.0;

  std::shared_ptr<const TransformSetup> setup;
  if (cfg.protocol == "transform") {
    validate_for_simulation(cfg.params);
    CommitteeBundle owned;
    if (!bundle) {
      owned = bundle_for(cfg);
      bundle = &owned;
    }
    setup = TransformSetup::make(cfg.params, *bundle, kind, cfg.ell, cfg.t_local);
    run.audited = true;
    run.caps = transform_caps(setup->derived, coin_message_poly(kind), cfg.params.R, cfg.ell);
    bound = fairness_bound(cfg.params, setup->q());
    StrategyEnv env;
    env.layout = &setup->layout;
    env.topologies = setup->topologies;
    env.alpha = cfg.params.alpha;
    env.corruptions = transform_budget(cfg.params);
    make_strategy(cfg.strategy, env);  // reject bad names before any trial runs
    one = [&, env](std::uint64_t i) {
      const std::uint64_t seed = trial_seed(cfg.seed, i);
      auto adversary = make_strategy(cfg.strategy, env);
      TrialOptions options;
      options.full_information = cfg.full_information;
      options.t = transform_budget(cfg.params);
      const TransformTrial trial = run_transform_trial(setup, *adversary, seed, options);
      bool defined = true;
      for (const auto& s : trial.truth) defined = defined && s.bstar.has_value();
      TrialOutcome out = outcome_of(trial.report, defined, trial.common_uniform());
      out.seed = seed;
      const AuditResult audit = audit_transcript(trial.report, run.caps);
      run.max_honest_messages = std::max(run.max_honest_messages, trial.report.honest_messages);
      if (!audit.pass) {
        ++run.audit_failures;
        if (!run.first_audit_failure) {
          run.first_audit_failure = audit;
          run.first_audit_failure_seed = seed;
        }
      }
      return out;
    };
  } else {
    validate(cfg.params);
    CoinTrialConfig cc;
    cc.kind = kind;
    cc.n = cfg.params.n;
    cc.t = cfg.params.t;
    cc.t_local = cfg.t_local ? *cfg.t_local : crusader_fault_bound(cfg.params.n);
    cc.delta = cfg.params.delta;
    cc.R = cfg.params.R;
    cc.alpha = cfg.params.alpha;
    cc.full_information = cfg.full_information;
    bound = cfg.params.delta;
    StrategyEnv env;
    env.alpha = cfg.params.alpha;
    env.corruptions = cfg.params.t;
    make_strategy(cfg.strategy, env);
    one = [&, cc, env](std::uint64_t i) {
      const std::uint64_t seed = trial_seed(cfg.seed, i);
      auto adversary = make_strategy(cfg.strategy, env);
      const CoinTrial trial = run_coin_trial(cc, *adversary, seed);
      TrialOutcome out = outcome_of(trial.report, trial.truth.fair, trial.common_uniform());
      out.seed = seed;
      run.max_honest_messages = std::max(run.max_honest_messages, trial.report.honest_messages);
      return out;
    };
  }
  run.estimate = estimate_fairness(one, cfg.trials, bound, cfg.confidence, &run.rows);
  return run;
}

// ---------------------------------------------------------------------------

void CrusaderBatch::add(const CrusaderTrial& trial, std::int64_t s) {
  ++trials;
  const bool msgs_ok = trial.report.honest_messages <= static_cast<std::uint64_t>(4 * s * s);
  validity_failures += trial.validity ? 0 : 1;
  agreement_failures += trial.weak_agreement ? 0 : 1;
  liveness_failures += trial.liveness ? 0 : 1;
  message_cap_failures += msgs_ok ? 0 : 1;
  if (!(trial.validity && trial.weak_agreement && trial.liveness && msgs_ok) && !first_failure_seed) {
    first_failure_seed = trial.report.seed;
  }
  max_latency = std::max(max_latency, trial.report.latency);
  max_honest_messages = std::max(max_honest_messages, trial.report.honest_messages);
}

namespace {

std::vector<std::uint8_t> inputs_for(const std::string& pattern, std::size_t count, Rng& rng) {
  std::vector<std::uint8_t> in(count, 0);
  for (std::size_t i = 0; i < count; ++i) {
    if (pattern == "common0") {
      in[i] = 0;
    } else if (pattern == "common1") {
      in[i] = 1;
    } else if (pattern == "split") {
      in[i] = static_cast<std::uint8_t>(i % 2);
    } else if (pattern == "random") {
      in[i] = rng.bit() ? 1 : 0;
    } else {
      throw ConfigError("inputs must be common0, common1, split or random");
    }
  }
  return in;
}

}  // namespace

CrusaderBatch run_crusader_batch(const ExperimentConfig& cfg) {
  const std::int64_t s = cfg.params.n;
  const std::int64_t byz = cfg.params.t;
  if (s < 1 || byz < 0 || byz > crusader_fault_bound(s)) {
    throw ConfigError("crusader needs 0 <= t < n/3");
  }
  const DelayMode delays = parse_delay_mode(cfg.delays);
  CrusaderBatch batch;
  std::vector<PartyId> honest;
  for (std::int64_t p = 0; p < s - byz; ++p) honest.push_back(static_cast<PartyId>(p));

  for (std::uint64_t i = 0; i < cfg.trials; ++i) {
    const std::uint64_t seed = trial_seed(cfg.seed, i);
    Rng rng(derive_seed(seed, kScenarioStream));
    CrusaderScenario sc;
    sc.s = s;
    sc.delays = delays;
    const auto in = inputs_for(cfg.inputs, honest.size(), rng);
    for (auto b : in) sc.inputs.emplace_back(b);
    for (std::int64_t p = s - byz; p < s; ++p) {
      sc.inputs.emplace_back(std::nullopt);
      const auto style = i % 3;
      if (style == 0) continue;
      const auto code = rng.uniform(behaviour_space_size(static_cast<std::int64_t>(honest.size())));
      const auto script = scripted_behaviour(static_cast<PartyId>(p), honest, code, rng.bit());
      sc.script.insert(sc.script.end(), script.begin(), script.end());
      sc.reactive = style == 2;
    }
    batch.add(run_crusader_trial(sc, seed), s);
  }
  return batch;
}

PublishGraph publish_graph_for(const ExperimentConfig& cfg) {
  validate(cfg.params);
  const DerivedParams dp = derive_params(cfg.params);
  std::vector<PartyId> all(static_cast<std::size_t>(dp.n));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<PartyId>(i);
  Rng rng(derive_seed(cfg.seed, kCommitteeStream));
  auto committee = rng.sample_without_replacement(all, static_cast<std::size_t>(dp.s));
  std::sort(committee.begin(), committee.end());
  return gen_publish_graph(committee, 0, dp.n, dp.d, dp.delta_cap, derive_seed(cfg.seed, kGraphStream),
                           parse_verify_mode(cfg.verify));
}

PublishBatch run_publish_batch(const ExperimentConfig& cfg) {
  const PublishGraph graph = publish_graph_for(cfg);
  const DerivedParams dp = derive_params(cfg.params);
  const auto s = static_cast<std::int64_t>(graph.committee.size());
  if (cfg.corruptions < 0 || cfg.corruptions > s) throw ConfigError("corruptions must lie in [0, s]");
  const DelayMode delays = parse_delay_mode(cfg.delays);

  PublishBatch batch;
  batch.n = dp.n;
  batch.d = dp.d;
  for (std::uint64_t i = 0; i < cfg.trials; ++i) {
    const std::uint64_t seed = trial_seed(cfg.seed, i);
    Rng rng(derive_seed(seed, kScenarioStream));
    PublishScenario sc;
    sc.graph = graph;
    sc.inputs = inputs_for(cfg.inputs, graph.committee.size(), rng);
    sc.corrupt_on_publish =
        rng.sample_without_replacement(graph.committee, static_cast<std::size_t>(cfg.corruptions));
    sc.delays = delays;
    sc.delayed_fraction = cfg.strategy.fraction;
    const PublishTrial trial = run_publish_trial(sc, seed);

    ++batch.trials;
    const auto reliable = static_cast<std::int64_t>(trial.reliable.size());
    bool ok = trial.clause1;
    batch.clause1_failures += trial.clause1 ? 0 : 1;
    if (trial.common_input) {
      batch.clause2_failures += trial.clause2 ? 0 : 1;
      const bool covered = reliable > dp.n - dp.d;
      batch.coverage_failures += covered ? 0 : 1;
      ok = ok && trial.clause2 && covered;
      if (batch.min_reliable < 0 || reliable < batch.min_reliable) batch.min_reliable = reliable;
    }
    if (!ok && !batch.first_failure_seed) batch.first_failure_seed = seed;
    batch.max_latency = std::max(batch.max_latency, trial.report.latency);
  }
  return batch;
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const FairnessRun& r) {
  j = {{"estimate", r.estimate}, {"max_honest_messages", r.max_honest_messages}};
  if (r.audited) {
    j["audit"] = {{"caps",
                   {{"crusader", r.caps.crusader},
                    {"publish", r.caps.publish},
                    {"majority", r.caps.majority},
                    {"coin", r.caps.coin},
                    {"total", r.caps.total()},
                    {"latency", r.caps.latency}}},
                  {"failures", r.audit_failures}};
    if (r.first_audit_failure) {
      j["audit"]["first_failure"] = *r.first_audit_failure;
      j["audit"]["first_failure_seed"] = *r.first_audit_failure_seed;
    }
  }
}

void to_json(nlohmann::json& j, const CrusaderBatch& b) {
  j = {{"trials", b.trials},
       {"pass", b.pass()},
       {"validity_failures", b.validity_failures},
       {"agreement_failures", b.agreement_failures},
       {"liveness_failures", b.liveness_failures},
       {"message_cap_failures", b.message_cap_failures},
       {"max_latency", b.max_latency},
       {"max_honest_messages", b.max_honest_messages}};
  j["first_failure_seed"] = b.first_failure_seed ? nlohmann::json(*b.first_failure_seed) : nlohmann::json(nullptr);
}

void to_json(nlohmann::json& j, const PublishBatch& b) {
  j = {{"n", b.n},
       {"d", b.d},
       {"trials", b.trials},
       {"pass", b.pass()},
       {"clause1_failures", b.clause1_failures},
       {"clause2_failures", b.clause2_failures},
       {"coverage_failures", b.coverage_failures},
       {"min_reliable", b.min_reliable},
       {"max_latency", b.max_latency}};
  j["first_failure_seed"] = b.first_failure_seed ? nlohmann::json(*b.first_failure_seed) : nlohmann::json(nullptr);
}

}  // namespace coinforge
