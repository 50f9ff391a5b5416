#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "coinforge/combinatorics.hpp"
#include "coinforge/params.hpp"
#include "coinforge/strategies.hpp"

namespace coinforge {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A full experiment description. Output paths are carried along but are
/// not part of the digest.
struct ExperimentConfig {
  CoinParams params;
  StrategySpec strategy;
  /// "transform" runs the whole coin, "strong" a single strong-coin committee.
  std::string protocol = "transform";
  std::string coin = "ideal";
  std::optional<std::int64_t> t_local;
  std::uint32_t ell = 1;
  std::uint64_t trials = 10'000;
  double confidence = 0.99;
  std::uint64_t seed = 0;
  bool full_information = false;
  /// "exhaustive", "none" or "sampled:<trials>".
  std::string verify = "exhaustive";
  std::string delays = "random";
  /// run-publish: "common0", "common1" or "split".
  std::string inputs = "common1";
  /// run-publish: members corrupted as they publish.
  std::int64_t corruptions = 0;
  std::optional<std::string> layout;
  std::optional<std::string> out;
  std::optional<std::string> csv;
  std::optional<std::string> events;
};

VerifyMode parse_verify_mode(const std::string& text);

/// Strict: unknown keys are a ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});
nlohmann::json config_to_json(const ExperimentConfig& c, bool include_paths = true);
ExperimentConfig load_config(const std::string& path);

std::uint64_t fnv1a64(const std::string& bytes);
/// FNV-1a of the canonical (sorted-key, compact) JSON, without paths.
std::string config_digest(const ExperimentConfig& c);

}  // namespace coinforge
