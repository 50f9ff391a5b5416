// One line per acceptance criterion: "[PASS] 5 crusader ..." or "[FAIL] ...".
// Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "coinforge/analysis.hpp"
#include "coinforge/combinatorics.hpp"
#include "coinforge/experiment.hpp"
#include "coinforge/params.hpp"
#include "coinforge/protocols.hpp"
#include "coinforge/rng.hpp"
#include "coinforge/scenarios.hpp"
#include "coinforge/strategies.hpp"
#include "coinforge/strong_coin.hpp"
#include "oracles/params_oracle.hpp"
#include "oracles/subsets.hpp"

using namespace coinforge;

namespace {

// Pinned tolerances and sizes.
constexpr std::int64_t kAntiConcentrationNMax = 64;
constexpr double kAntiConcentrationSeconds = 1.0;
constexpr int kParamSweep = 2000;
constexpr double kZPrimeRelTol = 1e-12;
constexpr int kCommitteeSeeds = 100;
constexpr std::uint64_t kCommitteeResamples = 100;
constexpr std::uint64_t kCrusaderRandomTrials = 10'000;
constexpr double kCrusaderLatency = 3.0;
constexpr std::uint64_t kPublishTrialsPerPattern = 1'000;
constexpr std::uint64_t kTransformTrials = 10'000;
constexpr std::uint64_t kCoinTrials = 10'000;
constexpr double kConfidence = 0.99;
constexpr std::int64_t kCostN = 1'000'000;
constexpr std::uint64_t kReplayTrials = 300;

struct Audit {
  std::uint64_t trials = 0;
  std::uint64_t failures = 0;
  // "criterion:term" -> count
  std::map<std::string, std::uint64_t> by_term;
  int source = 0;
  void add(const AuditResult& a) {
    ++trials;
    if (!a.pass) {
      ++failures;
      ++by_term[std::to_string(source) + ":" + a.failed_term];
    }
  }
};

// Trials from criteria 5 through 8, audited as they run.
Audit g_audit;

int g_failed = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail, double seconds) {
  std::printf("[%s] %2d %-22s %s (%.2fs)\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
  g_failed += pass ? 0 : 1;
}

template <typename F>
void criterion(int id, const std::string& name, F body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool pass = false;
  try {
    pass = body(detail);
  } catch (const std::exception& e) {
    detail += std::string(" threw: ") + e.what();
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(id, name, pass, detail, s);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// n=16, q=9 committees of 13, exhaustively verified.
CoinParams small_transform() {
  CoinParams p;
  p.n = 16;
  p.z = 0.3;
  p.epsilon = 1.0 / 12;
  p.alpha = 1.0 / 3;
  p.delta = 1.0;
  p.R = 1.0;
  p.overrides.q = 9;
  p.overrides.s = 13;
  return p;
}

ExperimentConfig crusader_config() {
  ExperimentConfig c;
  c.params.n = 4;
  c.params.t = 1;
  c.trials = kCrusaderRandomTrials;
  c.inputs = "random";
  c.delays = "random";
  c.seed = 5;
  return c;
}

ExperimentConfig publish_config(const std::string& inputs, std::int64_t corruptions) {
  ExperimentConfig c;
  c.params.n = 16;
  c.params.z = 0.3;
  c.params.epsilon = 1.0 / 12;
  c.params.overrides.q = 9;
  c.params.overrides.s = 9;
  c.params.overrides.d = 2;
  c.inputs = inputs;
  c.corruptions = corruptions;
  c.trials = kPublishTrialsPerPattern;
  c.strategy.fraction = 0.3;
  c.seed = 11;
  return c;
}

ExperimentConfig transform_config(const std::string& strategy) {
  ExperimentConfig c;
  c.params = small_transform();
  c.strategy.name = strategy;
  c.strategy.seed = 3;
  c.trials = kTransformTrials;
  c.confidence = kConfidence;
  c.seed = 21;
  return c;
}

std::string dump(const nlohmann::json& j) { return j.dump(2); }

}  // namespace

int main() {
  criterion(1, "anti-concentration", [](std::string& d) {
    const auto t0 = std::chrono::steady_clock::now();
    const AntiConcentrationResult r = verify_lemma4(kAntiConcentrationNMax);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    d = std::to_string(r.pairs_checked) + " pairs, " + std::to_string(r.failures.size()) + " failures, " +
        fmt("%.3fs", s);
    return r.pass && r.failures.empty() && s < kAntiConcentrationSeconds;
  });

  criterion(2, "parameter formulas", [](std::string& d) {
    Rng rng(0xacce97);
    int mismatches = 0, near = 0, even = 0;
    for (int i = 0; i < kParamSweep; ++i) {
      const CoinParams p = oracle::random_params(rng);
      const DerivedParams dp = derive_params(p);
      const oracle::Oracle o = oracle::derive(p);
      near += o.near_integer;
      even += dp.q % 2 == 1 ? 0 : 1;
      const bool zp = std::abs(dp.z_prime - static_cast<double>(o.z_prime)) <=
                      kZPrimeRelTol * std::max(1.0, dp.z_prime);
      const bool ok = dp.q == o.q && zp && dp.c == o.c && dp.s == o.s && dp.d == o.d &&
                      dp.delta_cap == o.delta_cap && dp.live_threshold == o.live &&
                      dp.output_threshold == o.out;
      mismatches += ok ? 0 : 1;
    }
    d = std::to_string(kParamSweep) + " samples, " + std::to_string(mismatches) + " mismatches, " +
        std::to_string(near) + " boundary hits, " + std::to_string(even) + " even q";
    return mismatches == 0 && near == 0 && even == 0;
  });

  criterion(3, "committee generator", [](std::string& d) {
    const CommitteeSpec spec{14, 9, 6, 1.0 / 3, 1.0 / 12, 3};
    Limits limits;
    limits.max_resamples = kCommitteeResamples;
    int accepted = 0, exhausted = 0, wrong = 0;
    for (int seed = 0; seed < kCommitteeSeeds; ++seed) {
      try {
        const CommitteeLayout l = gen_committees(spec, static_cast<std::uint64_t>(seed), VerifyMode::exhaustive(), limits);
        ++accepted;
        wrong += oracle::brute_committee_witness(l, spec.alpha, spec.epsilon, spec.c) ? 1 : 0;
      } catch (const GenerationExhausted&) {
        ++exhausted;
      }
    }
    // Averaged over the 364 sets B, nine committees hold 9*140/364 > 3 bad
    // ones, so some B always reaches c = 3.
    d = std::to_string(accepted) + "/" + std::to_string(kCommitteeSeeds) + " seeds accepted, " +
        std::to_string(exhausted) + " exhausted, " + std::to_string(wrong) +
        " accepted layouts wrong; 9*140 > 3*364 rules out every layout";
    return accepted == kCommitteeSeeds && wrong == 0;
  });

  criterion(4, "publish graph generator", [](std::string& d) {
    const ExperimentConfig cfg = publish_config("common1", 0);
    const DerivedParams dp = derive_params(cfg.params);
    const PublishGraph g = publish_graph_for(cfg);
    const VerifyResult r = verify_publish_graph(g, dp.d, VerifyMode::exhaustive());
    std::uint64_t sets = 0;
    oracle::for_each_subset(g.committee, 2, [&](const std::vector<PartyId>&) {
      ++sets;
      return true;
    });
    const bool brute = !oracle::brute_graph_witness(g, dp.d).has_value();
    // d > n
    const PublishGraph sparse = gen_publish_graph(g.committee, 0, 16, 17, 3, 1, VerifyMode::exhaustive());
    const VerifyResult rs = verify_publish_graph(sparse, 17, VerifyMode::exhaustive());
    // Delta = ceil(2s/3)
    const PublishGraph dense = gen_publish_graph(g.committee, 0, 16, 2, 6, 1, VerifyMode::exhaustive());
    const VerifyResult rd = verify_publish_graph(dense, 2, VerifyMode::exhaustive());
    d = "Delta=" + std::to_string(dp.delta_cap) + ", brute force over " + std::to_string(sets) +
        " sets B " + (brute ? "passes" : "fails") + ", verifier " + (r.pass ? "passes" : "fails") +
        (r.trivial ? " (trivial)" : "") + "; d>n trivial=" + std::to_string(rs.trivial) +
        " checked=" + std::to_string(rs.sets_checked) + "; dense trivial=" + std::to_string(rd.trivial) +
        " checked=" + std::to_string(rd.sets_checked);
    return sets == 36 && brute && r.pass && g.verified.kind == VerifyKind::kExhaustive && rs.pass &&
           rs.trivial && rs.sets_checked == 0 && rd.pass && rd.trivial && rd.sets_checked == 0;
  });

  criterion(5, "crusader agreement", [](std::string& d) {
    g_audit.source = 5;
    const std::int64_t s = 4;
    const std::vector<PartyId> honest = {0, 1, 2};
    AuditCaps caps;
    caps.crusader = 4.0 * s * s;
    caps.latency = kCrusaderLatency;
    CrusaderBatch batch;
    auto run = [&](const CrusaderScenario& sc, std::uint64_t seed) {
      const CrusaderTrial t = run_crusader_trial(sc, seed);
      batch.add(t, s);
      g_audit.add(audit_transcript(t.report, caps));
    };

    // Structured space: every code, early and late, every input vector.
    const std::uint64_t codes = behaviour_space_size(3);
    std::uint64_t seed = 0;
    for (std::uint64_t code = 0; code < codes; ++code) {
      for (bool late : {false, true}) {
        for (unsigned in = 0; in < 8; ++in) {
          CrusaderScenario sc;
          sc.s = s;
          for (unsigned b = 0; b < 3; ++b) sc.inputs.emplace_back(static_cast<std::uint8_t>((in >> b) & 1U));
          sc.inputs.emplace_back(std::nullopt);
          sc.script = scripted_behaviour(3, honest, code, late);
          sc.delays = (code + in) % 2 ? DelayMode::kRandom : DelayMode::kFifo;
          run(sc, derive_seed(0x5c, seed++));
        }
      }
    }
    const std::uint64_t structured = batch.trials;

    // Random schedules: silent, scripted and reactive byzantine party.
    const ExperimentConfig cfg = crusader_config();
    for (std::uint64_t i = 0; i < cfg.trials; ++i) {
      const std::uint64_t ts = trial_seed(cfg.seed, i);
      Rng rng(ts);
      CrusaderScenario sc;
      sc.s = s;
      for (int b = 0; b < 3; ++b) sc.inputs.emplace_back(static_cast<std::uint8_t>(rng.bit() ? 1 : 0));
      sc.inputs.emplace_back(std::nullopt);
      if (i % 3 != 0) sc.script = scripted_behaviour(3, honest, rng.uniform(codes), rng.bit());
      sc.reactive = i % 3 == 2;
      run(sc, ts);
    }

    // Hand-scripted: the byzantine party backs a different bit at each
    // honest party, on split inputs, echoing the flip of everything it hears.
    for (unsigned in = 1; in < 7; ++in) {
      for (int target = 0; target < 3; ++target) {
        CrusaderScenario sc;
        sc.s = s;
        for (unsigned b = 0; b < 3; ++b) sc.inputs.emplace_back(static_cast<std::uint8_t>((in >> b) & 1U));
        sc.inputs.emplace_back(std::nullopt);
        for (PartyId h : honest) {
          const auto bit = static_cast<std::uint8_t>(h == static_cast<PartyId>(target) ? 0 : 1);
          for (auto ch : {kCrusVal, kCrusAux}) {
            ScriptedMessage m;
            m.from = 3;
            m.to = h;
            m.channel = ch;
            m.bit = bit;
            m.delay = ch == kCrusVal ? 1 : sim::kTicksPerUnit;
            sc.script.push_back(m);
          }
        }
        sc.reactive = true;
        sc.delays = DelayMode::kFifo;
        run(sc, derive_seed(0x4a, in * 3 + target));
      }
    }

    d = std::to_string(batch.trials) + " trials (" + std::to_string(structured) + " structured), failures v/a/l/m " +
        std::to_string(batch.validity_failures) + "/" + std::to_string(batch.agreement_failures) + "/" +
        std::to_string(batch.liveness_failures) + "/" + std::to_string(batch.message_cap_failures) +
        ", max latency " + fmt("%.3f", batch.max_latency) + ", max msgs " +
        std::to_string(batch.max_honest_messages) + " <= " + std::to_string(4 * s * s);
    return batch.trials >= 10'000 && batch.pass() && batch.max_latency <= kCrusaderLatency;
  });

  criterion(6, "publish", [](std::string& d) {
    g_audit.source = 6;
    std::uint64_t trials = 0, coverage = 0, clause1 = 0, clause2 = 0, split = 0;
    std::int64_t min_reliable = -1;
    std::int64_t n = 0, dd = 0;
    for (const std::string inputs : {"common0", "common1", "split"}) {
      for (std::int64_t corruptions = 0; corruptions < 3; ++corruptions) {
        ExperimentConfig cfg = publish_config(inputs, corruptions);
        cfg.seed = cfg.seed * 7 + static_cast<std::uint64_t>(corruptions);
        const PublishGraph graph = publish_graph_for(cfg);
        const DerivedParams dp = derive_params(cfg.params);
        n = dp.n;
        dd = dp.d;
        AuditCaps caps;
        // Publish opens with crusader agreement inside the committee.
        const auto s = static_cast<double>(graph.committee.size());
        caps.crusader = 4.0 * s * s;
        caps.publish = static_cast<double>(dp.n * graph.delta_cap);
        for (std::uint64_t i = 0; i < cfg.trials; ++i) {
          const std::uint64_t seed = trial_seed(cfg.seed, i);
          Rng rng(seed);
          PublishScenario sc;
          sc.graph = graph;
          for (std::size_t m = 0; m < graph.committee.size(); ++m) {
            sc.inputs.push_back(inputs == "common0" ? 0 : inputs == "common1" ? 1 : static_cast<std::uint8_t>(m % 2));
          }
          sc.corrupt_on_publish = rng.sample_without_replacement(graph.committee, static_cast<std::size_t>(corruptions));
          sc.delays = i % 2 ? DelayMode::kRandom : DelayMode::kFifo;
          sc.delayed_fraction = i % 3 ? cfg.strategy.fraction : 0.0;
          const PublishTrial t = run_publish_trial(sc, seed);
          g_audit.add(audit_transcript(t.report, caps));
          ++trials;
          clause1 += t.clause1 ? 0 : 1;
          if (t.common_input) {
            const auto reliable = static_cast<std::int64_t>(t.reliable.size());
            clause2 += t.clause2 ? 0 : 1;
            coverage += reliable > dp.n - dp.d ? 0 : 1;
            if (min_reliable < 0 || reliable < min_reliable) min_reliable = reliable;
          } else {
            ++split;
          }
        }
      }
    }
    d = std::to_string(trials) + " trials (" + std::to_string(split) + " split), min reliable " +
        std::to_string(min_reliable) + " > n-d=" + std::to_string(n - dd) + ", failures coverage/c1/c2 " +
        std::to_string(coverage) + "/" + std::to_string(clause1) + "/" + std::to_string(clause2);
    return trials >= 1000 && coverage == 0 && clause1 == 0 && clause2 == 0;
  });

  CommitteeBundle bundle;
  criterion(7, "honest transform", [&](std::string& d) {
    g_audit.source = 7;
    const ExperimentConfig cfg = transform_config("random_delay");
    bundle = generate_bundle(cfg.params, cfg.seed, VerifyMode::exhaustive());
    const FairnessRun run = run_fairness(cfg, &bundle);
    const FairnessEstimate& e = run.estimate;
    for (std::uint64_t i = 0; i < run.audit_failures; ++i) g_audit.add(AuditResult{false, "transform", {}, 0});
    for (std::uint64_t i = run.audit_failures; i < e.trials; ++i) g_audit.add(AuditResult{});
    const WilsonInterval w = wilson_interval(e.bit_counts[1], e.trials, kConfidence);
    const double latency_cap = cfg.params.R + 5.0;
    d = "layout " + to_string(bundle.layout.verified.kind) + ", agreed " + std::to_string(e.agreed_count) + "/" +
        std::to_string(e.trials) + ", ones " + std::to_string(e.bit_counts[1]) + " in [" + fmt("%.4f", w.lo) +
        ", " + fmt("%.4f", w.hi) + "], max latency " + fmt("%.3f", e.max_latency) + " <= " +
        fmt("%.0f", latency_cap);
    return bundle.layout.verified.kind == VerifyKind::kExhaustive && e.trials == kTransformTrials &&
           e.agreed_count == e.trials && e.live_count == e.trials && w.lo <= 0.5 && 0.5 <= w.hi &&
           e.max_latency <= latency_cap;
  });

  criterion(8, "targeted transform", [&](std::string& d) {
    g_audit.source = 8;
    ExperimentConfig cfg = transform_config("targeter_delayer");
    cfg.strategy.limit = max_corruptions(cfg.params);
    cfg.strategy.fraction = 0.3;
    const FairnessRun run = run_fairness(cfg, &bundle);
    const FairnessEstimate& e = run.estimate;
    for (std::uint64_t i = 0; i < run.audit_failures; ++i) g_audit.add(AuditResult{false, "transform", {}, 0});
    for (std::uint64_t i = run.audit_failures; i < e.trials; ++i) g_audit.add(AuditResult{});
    const double target = 1.0 - derive_params(cfg.params).z_prime;
    d = "corrupting " + std::to_string(*cfg.strategy.limit) + ", common " + std::to_string(e.common_count) + "/" +
        std::to_string(e.trials) + " = " + fmt("%.4f", e.rate) + " >= " + fmt("%.4f", target) + " - " +
        fmt("%.4f", e.interval.halfwidth) + ", live " + std::to_string(e.live_count);
    return e.trials == kTransformTrials && e.rate >= target - e.interval.halfwidth && e.live_count == e.trials;
  });

  criterion(9, "ideal coin calibration", [](std::string& d) {
    CoinTrialConfig cc;
    cc.kind = CoinKind::kIdeal;
    cc.n = 4;
    cc.delta = 0.5;
    std::uint64_t fair = 0;
    for (std::uint64_t i = 0; i < kCoinTrials; ++i) {
      auto adversary = make_strategy({"random_delay", i, {}, {}, 0.0});
      fair += run_coin_trial(cc, *adversary, trial_seed(31, i)).truth.fair ? 1 : 0;
    }
    const WilsonInterval w = wilson_interval(fair, kCoinTrials, kConfidence);
    d = std::to_string(fair) + "/" + std::to_string(kCoinTrials) + " fair, interval [" + fmt("%.4f", w.lo) + ", " +
        fmt("%.4f", w.hi) + "]";
    return w.lo <= 0.5 && 0.5 <= w.hi;
  });

  criterion(10, "transcript audit", [](std::string& d) {
    d = std::to_string(g_audit.trials) + " trials audited, " + std::to_string(g_audit.failures) + " failures";
    for (const auto& [term, count] : g_audit.by_term) d += " " + term + "=" + std::to_string(count);
    return g_audit.trials > 0 && g_audit.failures == 0;
  });

  criterion(11, "cost dominance", [](std::string& d) {
    bool ok = true;
    for (auto v : {CostVariant::kPerfect, CostVariant::kCrypto}) {
      const CostReport r = instantiate_section6(v, kCostN, 0.05, 0.99, 128.0);
      const CostTerm& top = r.dominant();
      double rest = 0.0;
      for (const auto& t : r.breakdown) rest = t.name == top.name ? rest : std::max(rest, t.bits());
      d += std::string(to_string(v)) + ": " + top.name + fmt(" %.3g bits", top.bits()) + fmt(" vs %.3g; ", rest);
      ok = ok && top.name == "strong_coin";
    }
    return ok;
  });

  criterion(12, "determinism", [&](std::string& d) {
    // Each scenario is rebuilt from its recorded config before the rerun.
    int differing = 0, compared = 0;
    auto replay = [](const ExperimentConfig& c) { return config_from_json(config_to_json(c, true)); };
    auto same = [&](const std::function<std::string(const ExperimentConfig&)>& f, const ExperimentConfig& c) {
      ++compared;
      differing += f(c) == f(replay(c)) ? 0 : 1;
    };
    ExperimentConfig t7 = transform_config("random_delay");
    t7.trials = kReplayTrials;
    ExperimentConfig t8 = transform_config("targeter_delayer");
    t8.trials = kReplayTrials;
    t8.strategy.limit = max_corruptions(t8.params);
    t8.strategy.fraction = 0.3;
    auto fairness = [](const ExperimentConfig& c) {
      const CommitteeBundle b = generate_bundle(c.params, c.seed, VerifyMode::exhaustive());
      const FairnessRun r = run_fairness(c, &b);
      return dump(nlohmann::json(b)) + dump(nlohmann::json(r)) + trials_csv(r.rows);
    };
    same(fairness, t7);
    same(fairness, t8);
    ExperimentConfig cr = crusader_config();
    cr.trials = 3000;
    same([](const ExperimentConfig& c) { return dump(nlohmann::json(run_crusader_batch(c))); }, cr);
    same([](const ExperimentConfig& c) { return dump(nlohmann::json(run_publish_batch(c))); },
         publish_config("common1", 2));
    same([](const ExperimentConfig& c) { return dump(nlohmann::json(derive_params(c.params))); }, t7);
    d = std::to_string(compared) + " scenarios replayed, " + std::to_string(differing) + " differ";
    return differing == 0;
  });

  std::printf("%d criteria failed\n", g_failed);
  return g_failed;
}
