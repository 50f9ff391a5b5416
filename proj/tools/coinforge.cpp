// Command-line runner: parameter derivation, layout generation and
// verification, protocol simulation and analysis.

#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <map>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "coinforge/analysis.hpp"
#include "coinforge/config.hpp"
#include "coinforge/experiment.hpp"
#include "coinforge/params.hpp"
#include "coinforge/strategies.hpp"
#include "coinforge/transform.hpp"

using namespace coinforge;
using nlohmann::json;

namespace {

constexpr int kPass = 0;
constexpr int kPropertyFailure = 2;
constexpr int kConfigError = 3;

// Flags mirror the config keys one to one; a flag that is given wins.
struct Flags {
  std::optional<std::string> config;
  std::optional<std::int64_t> n, t, q, c, s, d, delta_cap, t_local, corruptions, limit;
  std::optional<double> z, k, epsilon, alpha, delta, R, confidence, fraction;
  std::optional<std::uint64_t> trials, seed, strategy_seed;
  std::optional<std::uint32_t> ell;
  std::optional<std::string> strategy, protocol, coin, verify, delays, inputs, layout, out, csv, events;
  std::vector<std::int64_t> committees;
  bool full_information = false;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON config document");
  cmd->add_option("--n", f.n, "number of parties");
  cmd->add_option("--t", f.t, "corruption budget");
  cmd->add_option("--z", f.z, "failure allowance");
  cmd->add_option("--k", f.k, "committee count exponent");
  cmd->add_option("--epsilon", f.epsilon);
  cmd->add_option("--alpha", f.alpha);
  cmd->add_option("--delta", f.delta, "strong-coin fairness");
  cmd->add_option("--R", f.R, "strong-coin latency");
  cmd->add_option("--q", f.q, "override committee count");
  cmd->add_option("--c", f.c, "override bad-committee bound");
  cmd->add_option("--s", f.s, "override committee size");
  cmd->add_option("--d", f.d, "override Publish miss bound");
  cmd->add_option("--delta-cap", f.delta_cap, "override Publish in-degree");
  cmd->add_option("--strategy", f.strategy, "adversary strategy");
  cmd->add_option("--strategy-seed", f.strategy_seed);
  cmd->add_option("--committees", f.committees, "committees to target")->delimiter(',');
  cmd->add_option("--limit", f.limit, "targeter corruption limit");
  cmd->add_option("--fraction", f.fraction, "fraction of delayed receivers");
  cmd->add_option("--protocol", f.protocol, "transform | strong");
  cmd->add_option("--coin", f.coin, "ideal | benor");
  cmd->add_option("--t-local", f.t_local, "Ben-Or wait slack");
  cmd->add_option("--ell", f.ell, "parallel bits");
  cmd->add_option("--trials", f.trials);
  cmd->add_option("--confidence", f.confidence);
  cmd->add_option("--seed", f.seed);
  cmd->add_flag("--full-information", f.full_information, "adversary reads honest payloads");
  cmd->add_option("--verify", f.verify, "exhaustive | none | sampled:<trials>");
  cmd->add_option("--delays", f.delays, "fifo | random");
  cmd->add_option("--inputs", f.inputs, "common0 | common1 | split | random");
  cmd->add_option("--corruptions", f.corruptions);
  cmd->add_option("--layout", f.layout, "committee bundle file");
  cmd->add_option("--out", f.out, "machine-readable output");
  cmd->add_option("--csv", f.csv, "per-trial CSV");
  cmd->add_option("--events", f.events, "NDJSON event log");
}

template <typename T>
void take(const std::optional<T>& flag, T& slot) {
  if (flag) slot = *flag;
}

ExperimentConfig resolve(const Flags& f) {
  ExperimentConfig c;
  bool seeded = false;
  if (f.config) {
    c = load_config(*f.config);
    std::ifstream in(*f.config);
    json raw;
    in >> raw;
    seeded = raw.contains("seed");
  }
  auto& p = c.params;
  take(f.n, p.n);
  take(f.t, p.t);
  take(f.z, p.z);
  take(f.k, p.k);
  take(f.epsilon, p.epsilon);
  take(f.alpha, p.alpha);
  take(f.delta, p.delta);
  take(f.R, p.R);
  if (f.q) p.overrides.q = f.q;
  if (f.c) p.overrides.c = f.c;
  if (f.s) p.overrides.s = f.s;
  if (f.d) p.overrides.d = f.d;
  if (f.delta_cap) p.overrides.delta_cap = f.delta_cap;
  take(f.strategy, c.strategy.name);
  take(f.strategy_seed, c.strategy.seed);
  if (!f.committees.empty()) c.strategy.committees = f.committees;
  if (f.limit) c.strategy.limit = f.limit;
  take(f.fraction, c.strategy.fraction);
  take(f.protocol, c.protocol);
  take(f.coin, c.coin);
  if (f.t_local) c.t_local = f.t_local;
  take(f.ell, c.ell);
  take(f.trials, c.trials);
  take(f.confidence, c.confidence);
  if (f.full_information) c.full_information = true;
  take(f.verify, c.verify);
  take(f.delays, c.delays);
  take(f.inputs, c.inputs);
  take(f.corruptions, c.corruptions);
  if (f.layout) c.layout = f.layout;
  if (f.out) c.out = f.out;
  if (f.csv) c.csv = f.csv;
  if (f.events) c.events = f.events;
  if (f.seed) {
    c.seed = *f.seed;
  } else if (!seeded) {
    if (const char* env = std::getenv("COINFORGE_SEED")) {
      try {
        c.seed = std::stoull(env);
      } catch (const std::exception&) {
        throw ConfigError("COINFORGE_SEED is not an unsigned integer");
      }
    }
  }
  // Re-validate the merged document.
  return config_from_json(config_to_json(c), ExperimentConfig{});
}

json envelope(const std::string& command, const ExperimentConfig& c, const json& result) {
  json j;
  j["command"] = command;
  j["config_digest"] = config_digest(c);
  j["seed"] = c.seed;
  j["config"] = config_to_json(c, false);
  if (c.layout) {
    std::ifstream in(*c.layout);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
    j["layout_digest"] = buf;
  }
  j["result"] = result;
  return j;
}

void emit(const std::string& command, const ExperimentConfig& c, const json& result) {
  if (c.out) save_json(*c.out, envelope(command, c, result));
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

std::string verdict(bool pass) { return pass ? "PASS" : "FAIL"; }

// ---------------------------------------------------------------------------

int cmd_derive(const ExperimentConfig& c) {
  const DerivedParams dp = derive_params(c.params);
  std::cout << format_table({{"n", std::to_string(dp.n)},
                             {"q", std::to_string(dp.q)},
                             {"z'", std::to_string(dp.z_prime)},
                             {"c", std::to_string(dp.c)},
                             {"s", std::to_string(dp.s)},
                             {"d", std::to_string(dp.d)},
                             {"Delta", std::to_string(dp.delta_cap)},
                             {"live_threshold", std::to_string(dp.live_threshold)},
                             {"output_threshold", std::to_string(dp.output_threshold)},
                             {"bad_member_threshold", std::to_string(bad_member_threshold(c.params.alpha, dp.s))},
                             {"max_corruptions", std::to_string(max_corruptions(c.params))},
                             {"overridden", dp.overridden ? "yes" : "no"}});
  emit("derive", c, dp);
  return kPass;
}

int cmd_gen_committees(const ExperimentConfig& c) {
  validate(c.params);
  const DerivedParams dp = derive_params(c.params);
  CommitteeSpec spec{dp.n, dp.q, dp.s, c.params.alpha, c.params.epsilon, dp.c};
  CommitteeBundle bundle;
  try {
    bundle.layout = gen_committees(spec, c.seed, parse_verify_mode(c.verify));
  } catch (const GenerationExhausted& e) {
    std::cout << "generation exhausted: " << e.what() << '\n';
    emit("gen-committees", c, json{{"pass", false}, {"error", e.what()}});
    return kPropertyFailure;
  }
  std::cout << format_table({{"committees", std::to_string(bundle.layout.q)},
                             {"size", std::to_string(bundle.layout.s)},
                             {"verified", to_string(bundle.layout.verified.kind)},
                             {"trivial", bundle.layout.verified.trivial ? "yes" : "no"},
                             {"resamples", std::to_string(bundle.layout.resamples)}});
  emit("gen-committees", c, bundle);
  return kPass;
}

int cmd_gen_graphs(const ExperimentConfig& c) {
  if (!c.layout) throw ConfigError("gen-graphs needs --layout");
  CommitteeBundle bundle = load_bundle(*c.layout);
  const DerivedParams dp = derive_params(c.params);
  if (bundle.layout.n != dp.n || bundle.layout.s != dp.s || bundle.layout.q != dp.q) {
    throw ConfigError("layout does not match the derived parameters");
  }
  try {
    bundle.graphs = gen_publish_graphs(bundle.layout, dp.d, dp.delta_cap, c.seed, parse_verify_mode(c.verify));
  } catch (const GenerationExhausted& e) {
    std::cout << "generation exhausted: " << e.what() << '\n';
    emit("gen-graphs", c, json{{"pass", false}, {"error", e.what()}});
    return kPropertyFailure;
  }
  std::uint64_t resamples = 0;
  for (const auto& g : bundle.graphs) resamples += g.resamples;
  std::cout << format_table({{"graphs", std::to_string(bundle.graphs.size())},
                             {"d", std::to_string(dp.d)},
                             {"Delta", std::to_string(dp.delta_cap)},
                             {"resamples", std::to_string(resamples)}});
  emit("gen-graphs", c, bundle);
  return kPass;
}

int cmd_verify(const ExperimentConfig& c) {
  if (!c.layout) throw ConfigError("verify needs --layout");
  const CommitteeBundle bundle = load_bundle(*c.layout);
  const DerivedParams dp = derive_params(c.params);
  const VerifyMode mode = parse_verify_mode(c.verify);
  json result;
  const VerifyResult committees =
      verify_committees(bundle.layout, c.params.alpha, c.params.epsilon, dp.c, mode, {}, c.seed);
  result["committees"] = committees;
  bool pass = committees.pass;
  json graphs = json::array();
  std::uint64_t graph_failures = 0;
  for (const auto& g : bundle.graphs) {
    const VerifyResult r = verify_publish_graph(g, dp.d, mode, {}, c.seed);
    graph_failures += r.pass ? 0 : 1;
    graphs.push_back(r);
  }
  pass = pass && graph_failures == 0;
  result["graphs"] = graphs;
  result["pass"] = pass;
  std::cout << format_table({{"committees", verdict(committees.pass)},
                             {"sets checked", std::to_string(committees.sets_checked)},
                             {"graphs", std::to_string(bundle.graphs.size())},
                             {"graph failures", std::to_string(graph_failures)},
                             {"result", verdict(pass)}});
  emit("verify", c, result);
  return pass ? kPass : kPropertyFailure;
}

int cmd_run_coin(const ExperimentConfig& c) {
  const CommitteeBundle bundle = bundle_for(c);
  const auto setup = TransformSetup::make(c.params, bundle, parse_coin_kind(c.coin), c.ell, c.t_local);
  StrategyEnv env;
  env.layout = &setup->layout;
  env.topologies = setup->topologies;
  env.alpha = c.params.alpha;
  env.corruptions = transform_budget(c.params);
  auto adversary = make_strategy(c.strategy, env);
  TrialOptions options;
  options.full_information = c.full_information;
  options.record_events = c.events.has_value();
  options.t = transform_budget(c.params);
  const TransformTrial trial = run_transform_trial(setup, *adversary, c.seed, options);
  const AuditCaps caps = transform_caps(setup->derived, coin_message_poly(setup->coin), c.params.R, c.ell);
  const AuditResult audit = audit_transcript(trial.report, caps);

  json result;
  result["report"] = trial.report;
  result["audit"] = audit;
  result["common_uniform"] = trial.common_uniform();
  std::optional<std::uint64_t> value;
  bool all_sessions = true;
  std::vector<std::uint8_t> bits;
  for (const auto& v : trial.session_values) {
    if (!v) all_sessions = false;
    else bits.push_back(*v);
  }
  if (all_sessions) value = concat_bits(bits);
  result["value"] = value ? json(*value) : json(nullptr);
  if (value) result["leader"] = elect_leader(*value, setup->n());
  if (c.events) write_text(*c.events, trial.event_log);

  const bool pass = trial.report.all_honest_output && trial.report.agreed && audit.pass;
  std::cout << format_table({{"live", trial.report.all_honest_output ? "yes" : "no"},
                             {"agreed", trial.report.agreed ? "yes" : "no"},
                             {"value", value ? std::to_string(*value) : "-"},
                             {"common uniform", trial.common_uniform() ? "yes" : "no"},
                             {"latency", std::to_string(trial.report.latency)},
                             {"honest messages", std::to_string(trial.report.honest_messages)},
                             {"corruptions", std::to_string(trial.report.corruptions.size())}})
            << audit_table(audit);
  emit("run-coin", c, result);
  return pass ? kPass : kPropertyFailure;
}

int cmd_run_crusader(const ExperimentConfig& c) {
  const CrusaderBatch batch = run_crusader_batch(c);
  std::cout << format_table({{"trials", std::to_string(batch.trials)},
                             {"validity failures", std::to_string(batch.validity_failures)},
                             {"agreement failures", std::to_string(batch.agreement_failures)},
                             {"liveness failures", std::to_string(batch.liveness_failures)},
                             {"message cap failures", std::to_string(batch.message_cap_failures)},
                             {"max latency", std::to_string(batch.max_latency)},
                             {"max honest messages", std::to_string(batch.max_honest_messages)},
                             {"result", verdict(batch.pass())}});
  emit("run-crusader", c, batch);
  return batch.pass() ? kPass : kPropertyFailure;
}

int cmd_run_publish(const ExperimentConfig& c) {
  const PublishBatch batch = run_publish_batch(c);
  std::cout << format_table({{"trials", std::to_string(batch.trials)},
                             {"n - d", std::to_string(batch.n - batch.d)},
                             {"min reliable", std::to_string(batch.min_reliable)},
                             {"clause 1 failures", std::to_string(batch.clause1_failures)},
                             {"clause 2 failures", std::to_string(batch.clause2_failures)},
                             {"coverage failures", std::to_string(batch.coverage_failures)},
                             {"max latency", std::to_string(batch.max_latency)},
                             {"result", verdict(batch.pass())}});
  emit("run-publish", c, batch);
  return batch.pass() ? kPass : kPropertyFailure;
}

int cmd_estimate(const ExperimentConfig& c) {
  const FairnessRun run = run_fairness(c);
  std::cout << fairness_table(run.estimate);
  if (run.audited) {
    std::cout << format_table({{"audit failures", std::to_string(run.audit_failures)},
                               {"max honest messages", std::to_string(run.max_honest_messages)},
                               {"message cap", std::to_string(run.caps.total())}});
    if (run.first_audit_failure) std::cout << audit_table(*run.first_audit_failure);
  }
  if (c.csv) write_text(*c.csv, trials_csv(run.rows));
  emit("estimate-fairness", c, run);
  return run.estimate.pass && run.audit_failures == 0 ? kPass : kPropertyFailure;
}

int cmd_anti_concentration(const ExperimentConfig& c, std::int64_t n_max) {
  const AntiConcentrationResult r = verify_lemma4(n_max);
  std::cout << format_table({{"n max", std::to_string(r.n_max)},
                             {"pairs checked", std::to_string(r.pairs_checked)},
                             {"failures", std::to_string(r.failures.size())},
                             {"worst ratio", std::to_string(r.worst_ratio)},
                             {"result", verdict(r.pass)}});
  emit("verify-lemma4", c, r);
  return r.pass ? kPass : kPropertyFailure;
}

struct CostFlags {
  std::optional<std::string> variant;
  std::string messages = "1:2:0";
  std::string message_bits = "1:0:1";
  double delta_prime = 0.99;
  double kappa = 128.0;
};

int cmd_cost(const ExperimentConfig& c, const CostFlags& cf) {
  CostReport report;
  try {
    if (cf.variant) {
      report = instantiate_section6(parse_cost_variant(*cf.variant), c.params.n, c.params.epsilon,
                                    cf.delta_prime, cf.kappa);
    } else {
      report = theorem1_cost(c.params, Polynomial::parse(cf.messages), Polynomial::parse(cf.message_bits));
    }
  } catch (const ParamError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  std::vector<std::pair<std::string, std::string>> rows;
  for (const auto& term : report.breakdown) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g bits", term.bits());
    rows.emplace_back(term.name, buf);
  }
  rows.emplace_back("dominant", report.dominant().name);
  std::cout << format_table(rows);
  emit("cost-report", c, report);
  return kPass;
}

int cmd_leader(const ExperimentConfig& c, std::optional<std::uint64_t> value) {
  json result;
  if (value) {
    result["value"] = *value;
    result["leader"] = elect_leader(*value, c.params.n);
    std::cout << "leader " << result["leader"].get<std::int64_t>() << '\n';
    emit("leader", c, result);
    return kPass;
  }
  ExperimentConfig multi = c;
  if (multi.ell == 1) {
    std::uint32_t bits = 0;
    while ((std::int64_t{1} << bits) < c.params.n) ++bits;
    multi.ell = std::max<std::uint32_t>(bits, 1);
  }
  return cmd_run_coin(multi);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coinforge: common-coin experiments"};
  app.require_subcommand(1);
  Flags flags;
  std::int64_t n_max = 64;
  CostFlags cost;
  std::optional<std::uint64_t> value;

  const std::pair<const char*, const char*> names[] = {
      {"derive", "print derived committee parameters"},
      {"gen-committees", "sample and verify a committee layout"},
      {"gen-graphs", "add verified Publish graphs to a layout"},
      {"verify", "re-verify a layout file"},
      {"run-coin", "one traced run of the transformation"},
      {"run-crusader", "batch of standalone crusader agreement runs"},
      {"run-publish", "batch of standalone Publish runs"},
      {"estimate-fairness", "fairness estimate with a confidence interval"},
      {"verify-lemma4", "exact binomial anti-concentration check"},
      {"cost-report", "message and bit cost breakdown"},
      {"leader", "map a coin value to a leader"}};
  std::map<std::string, CLI::App*> cmds;
  for (const auto& [name, help] : names) {
    auto* cmd = app.add_subcommand(name, help);
    add_flags(cmd, flags);
    cmds[name] = cmd;
  }
  cmds["verify-lemma4"]->add_option("--n-max", n_max);
  cmds["cost-report"]->add_option("--variant", cost.variant, "perfect | crypto");
  cmds["cost-report"]->add_option("--M", cost.messages, "coin messages, c:e:l terms");
  cmds["cost-report"]->add_option("--L", cost.message_bits, "coin message bits, c:e:l terms");
  cmds["cost-report"]->add_option("--delta-prime", cost.delta_prime);
  cmds["cost-report"]->add_option("--kappa", cost.kappa);
  cmds["leader"]->add_option("--value", value, "coin value to map to a leader");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  std::string name;
  for (const auto& [key, cmd] : cmds) {
    if (cmd->parsed()) name = key;
  }

  try {
    const ExperimentConfig c = resolve(flags);
    std::cout << "config " << config_digest(c) << "  seed " << c.seed << '\n';
    if (name == "derive") return cmd_derive(c);
    if (name == "gen-committees") return cmd_gen_committees(c);
    if (name == "gen-graphs") return cmd_gen_graphs(c);
    if (name == "verify") return cmd_verify(c);
    if (name == "run-coin") return cmd_run_coin(c);
    if (name == "run-crusader") return cmd_run_crusader(c);
    if (name == "run-publish") return cmd_run_publish(c);
    if (name == "estimate-fairness") return cmd_estimate(c);
    if (name == "verify-lemma4") return cmd_anti_concentration(c, n_max);
    if (name == "cost-report") return cmd_cost(c, cost);
    if (name == "leader") return cmd_leader(c, value);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ParamError& e) {
    std::cerr << "parameter error: " << e.what() << '\n';
    return kConfigError;
  } catch (const VerificationInfeasible& e) {
    std::cerr << "verification infeasible: " << e.what() << '\n';
    return kConfigError;
  } catch (const sim::StrategyViolation& e) {
    std::cerr << "strategy violation: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kConfigError;
  }
  return kConfigError;
}
