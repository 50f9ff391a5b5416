#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "coinforge/params.hpp"
#include "coinforge/simnet.hpp"

namespace coinforge {

// ---------------------------------------------------------------------------
// Anti-concentration of Binomial(n, 1/2): Pr[|X - n/2| < sigma] <= 8 sigma / (5 sqrt n)

struct AntiConcentrationFailure {
  std::int64_t n = 0;
  std::int64_t sigma = 0;
};

struct AntiConcentrationResult {
  bool pass = true;
  std::int64_t n_max = 0;
  std::uint64_t pairs_checked = 0;
  std::vector<AntiConcentrationFailure> failures;
  /// Largest Pr / bound ratio seen (for information only; floating).
  double worst_ratio = 0.0;
  std::int64_t worst_n = 0;
  std::int64_t worst_sigma = 0;
};

/// Exact check over every n in [1, n_max] and integer sigma in [0, n].
/// Compares 25 A^2 n <= 64 sigma^2 4^n in big integers, where A counts the
/// outcomes k with |2k - n| < 2 sigma.
AntiConcentrationResult verify_lemma4(std::int64_t n_max);

/// Single (n, sigma) pair, exact.
bool anti_concentration_holds(std::int64_t n, std::int64_t sigma);

// ---------------------------------------------------------------------------

struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
  double center = 0.0;
  double halfwidth = 0.5;
};

/// Wilson score interval for `successes` out of `trials` (two-sided).
WilsonInterval wilson_interval(std::uint64_t successes, std::uint64_t trials, double confidence = 0.99);

/// One trial as seen by the fairness estimator.
struct TrialOutcome {
  std::uint64_t seed = 0;
  bool live = false;
  bool agreed = false;
  /// Ground truth bit defined for this trial.
  bool defined = false;
  /// Every honest party output the ground truth bit.
  bool common = false;
  std::optional<std::uint64_t> value;
  double latency = 0.0;
  std::map<std::string, std::uint64_t> msgs_by_class;
};

TrialOutcome outcome_of(const sim::TrialReport& report, bool defined, bool common);

struct FairnessEstimate {
  std::uint64_t trials = 0;
  std::uint64_t live_count = 0;
  std::uint64_t agreed_count = 0;
  std::uint64_t common_count = 0;
  /// Trials without a ground-truth bit; they count as non-common.
  std::uint64_t undefined_count = 0;
  std::uint64_t bit_counts[2] = {0, 0};
  double rate = 0.0;
  double confidence = 0.99;
  WilsonInterval interval;
  /// 1 - (1 - delta) q - z; a bound <= 0 passes automatically.
  double bound = 0.0;
  bool vacuous = false;
  bool pass = false;
  double max_latency = 0.0;
};

FairnessEstimate summarize_fairness(const std::vector<TrialOutcome>& trials, double bound,
                                    double confidence = 0.99);

/// Runs `trials` independent trials and summarizes them.
FairnessEstimate estimate_fairness(const std::function<TrialOutcome(std::uint64_t index)>& run_trial,
                                   std::uint64_t trials, double bound, double confidence = 0.99,
                                   std::vector<TrialOutcome>* rows = nullptr);

double fairness_bound(const CoinParams& p, std::int64_t q);

// ---------------------------------------------------------------------------
// Transcript audit

struct AuditCaps {
  double crusader = 0.0;
  double publish = 0.0;
  double majority = 0.0;
  double coin = 0.0;
  /// Largest allowed normalized latency; negative disables the check.
  double latency = -1.0;
  double total() const { return crusader + publish + majority + coin; }
};

/// Caps for `sessions` parallel runs of the transformation: 4s^2 q crusader,
/// n Delta q Publish sends, n^2 majority broadcasts, q M(s) coin messages,
/// latency R + 5.
AuditCaps transform_caps(const DerivedParams& dp, const Polynomial& coin_messages, double R,
                         std::uint32_t sessions = 1);

struct AuditTerm {
  std::string name;
  double measured = 0.0;
  double cap = 0.0;
  bool pass = true;
};

struct AuditResult {
  bool pass = true;
  /// First violated term, empty on pass.
  std::string failed_term;
  std::vector<AuditTerm> terms;
  std::uint64_t byzantine_messages = 0;
};

AuditResult audit_transcript(const sim::TrialReport& report, const AuditCaps& caps);

// ---------------------------------------------------------------------------
// Output

void to_json(nlohmann::json& j, const AntiConcentrationResult& r);
void to_json(nlohmann::json& j, const WilsonInterval& w);
void to_json(nlohmann::json& j, const FairnessEstimate& e);
void to_json(nlohmann::json& j, const AuditResult& a);
void to_json(nlohmann::json& j, const TrialOutcome& t);

/// Two-column aligned plain-text table.
std::string format_table(const std::vector<std::pair<std::string, std::string>>& rows);
std::string fairness_table(const FairnessEstimate& e);
std::string audit_table(const AuditResult& a);

/// seed,live,agreed,defined,common,bit,latency,msgs_1bit,msgs_tagged,msgs_opaque
std::string trials_csv(const std::vector<TrialOutcome>& rows);

}  // namespace coinforge
