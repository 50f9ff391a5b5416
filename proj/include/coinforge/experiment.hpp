#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "coinforge/analysis.hpp"
#include "coinforge/config.hpp"
#include "coinforge/scenarios.hpp"
#include "coinforge/transform.hpp"

namespace coinforge {

/// Seed of trial `index` of an experiment.
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t index);

/// Reads a committee bundle; a missing or unreadable file is a ConfigError.
CommitteeBundle load_bundle(const std::string& path);
void save_json(const std::string& path, const nlohmann::json& j);

/// The layout file named by the config, or a freshly generated bundle.
CommitteeBundle bundle_for(const ExperimentConfig& cfg);

/// Corruption budget for transform runs: params.t, or floor((alpha-eps) n)
/// when t is left at zero.
std::int64_t transform_budget(const CoinParams& p);

/// Messages one committee coin sends, as a function of committee size.
Polynomial coin_message_poly(CoinKind kind);

struct FairnessRun {
  FairnessEstimate estimate;
  std::vector<TrialOutcome> rows;
  bool audited = false;
  AuditCaps caps;
  std::uint64_t audit_failures = 0;
  std::optional<AuditResult> first_audit_failure;
  std::optional<std::uint64_t> first_audit_failure_seed;
  std::uint64_t max_honest_messages = 0;
};

/// `trials` runs of the transformation (or of a single strong coin when
/// protocol is "strong"), summarized against the fairness bound.
FairnessRun run_fairness(const ExperimentConfig& cfg, const CommitteeBundle* bundle = nullptr);

struct CrusaderBatch {
  std::uint64_t trials = 0;
  std::uint64_t validity_failures = 0;
  std::uint64_t agreement_failures = 0;
  std::uint64_t liveness_failures = 0;
  std::uint64_t message_cap_failures = 0;
  std::optional<std::uint64_t> first_failure_seed;
  double max_latency = 0.0;
  std::uint64_t max_honest_messages = 0;

  bool pass() const {
    return validity_failures + agreement_failures + liveness_failures + message_cap_failures == 0;
  }
  void add(const CrusaderTrial& trial, std::int64_t s);
};

/// Crusader agreement among n parties, the last t byzantine. Trials rotate
/// through silent, scripted and reactive byzantine behaviour.
CrusaderBatch run_crusader_batch(const ExperimentConfig& cfg);

struct PublishBatch {
  std::int64_t n = 0;
  std::int64_t d = 0;
  std::uint64_t trials = 0;
  std::uint64_t clause1_failures = 0;
  std::uint64_t clause2_failures = 0;
  /// Common-input trials where at most n - d parties were reliable.
  std::uint64_t coverage_failures = 0;
  std::int64_t min_reliable = -1;
  std::optional<std::uint64_t> first_failure_seed;
  double max_latency = 0.0;

  bool pass() const { return clause1_failures + clause2_failures + coverage_failures == 0; }
};

/// Publish on one committee of s members drawn from n parties.
PublishBatch run_publish_batch(const ExperimentConfig& cfg);
PublishGraph publish_graph_for(const ExperimentConfig& cfg);

void to_json(nlohmann::json& j, const FairnessRun& r);
void to_json(nlohmann::json& j, const CrusaderBatch& b);
void to_json(nlohmann::json& j, const PublishBatch& b);

}  // namespace coinforge
