#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace coinforge {

using PartyId = std::uint32_t;

enum class VerifyKind { kUnverified, kSampled, kExhaustive };

struct VerifyMode {
  VerifyKind kind = VerifyKind::kExhaustive;
  std::uint64_t trials = 0;

  static VerifyMode exhaustive() { return {VerifyKind::kExhaustive, 0}; }
  static VerifyMode sampled(std::uint64_t trials) { return {VerifyKind::kSampled, trials}; }
  static VerifyMode none() { return {VerifyKind::kUnverified, 0}; }
};

/// How far a generated object was checked. `trivial` marks the cases where
/// the property holds without looking at the object (s = n, d > n, sets B
/// too small to reach the threshold).
struct Verification {
  VerifyKind kind = VerifyKind::kUnverified;
  std::uint64_t trials = 0;
  bool trivial = false;

  friend bool operator==(const Verification&, const Verification&) = default;
};

struct VerifyResult {
  bool pass = true;
  /// First violating B found; lexicographically smallest in exhaustive mode.
  std::vector<PartyId> witness;
  /// The witness came from the greedy heuristic rather than enumeration.
  bool heuristic_witness = false;
  bool trivial = false;
  std::uint64_t sets_checked = 0;
};

struct Limits {
  /// Maximum (B, committee) or (B, receiver) membership checks for
  /// exhaustive verification.
  std::uint64_t enumeration_budget = 10'000'000;
  std::uint64_t max_resamples = 1000;
};

class VerificationInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GenerationExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Committees

struct CommitteeSpec {
  std::int64_t n = 0;
  std::int64_t q = 0;
  std::int64_t s = 0;
  double alpha = 1.0 / 3.0;
  double epsilon = 0.0;
  std::int64_t c = 1;
};

struct CommitteeLayout {
  std::int64_t n = 0;
  std::int64_t q = 0;
  std::int64_t s = 0;
  std::vector<std::vector<PartyId>> committees;  // each sorted, size s
  Verification verified;
  std::uint64_t seed = 0;
  std::uint64_t resamples = 0;

  friend bool operator==(const CommitteeLayout&, const CommitteeLayout&) = default;
};

/// Sample-verify-resample until a layout passes `mode`. Throws
/// std::invalid_argument on c < 1 or inconsistent sizes,
/// VerificationInfeasible when exhaustive checking exceeds the budget and
/// GenerationExhausted after `limits.max_resamples` rejected samples.
CommitteeLayout gen_committees(const CommitteeSpec& spec, std::uint64_t seed, VerifyMode mode,
                               const Limits& limits = {});

VerifyResult verify_committees(const CommitteeLayout& layout, double alpha, double epsilon,
                               std::int64_t c, VerifyMode mode, const Limits& limits = {},
                               std::uint64_t sample_seed = 0);

/// Number of committees with at least alpha * s members in `corrupted`.
std::int64_t count_bad_committees(const CommitteeLayout& layout, double alpha,
                                  const std::vector<PartyId>& corrupted);

// ---------------------------------------------------------------------------
// Publish graphs

struct PublishGraph {
  std::int64_t committee_id = 0;
  std::vector<PartyId> committee;                 // the partite set Q, sorted
  std::vector<std::vector<PartyId>> adjacency;    // per receiver vertex v_j, sorted
  std::int64_t delta_cap = 0;
  Verification verified;
  std::uint64_t seed = 0;
  std::uint64_t resamples = 0;

  friend bool operator==(const PublishGraph&, const PublishGraph&) = default;
};

PublishGraph gen_publish_graph(const std::vector<PartyId>& committee, std::int64_t committee_id,
                               std::int64_t n, std::int64_t d, std::int64_t delta_cap,
                               std::uint64_t seed, VerifyMode mode, const Limits& limits = {});

VerifyResult verify_publish_graph(const PublishGraph& graph, std::int64_t d, VerifyMode mode,
                                  const Limits& limits = {}, std::uint64_t sample_seed = 0);

/// Receivers v_j with more than delta_cap/2 neighbours outside `corrupted`.
std::vector<PartyId> reliable_receivers(const PublishGraph& graph,
                                        const std::vector<PartyId>& corrupted);

// ---------------------------------------------------------------------------
// Failure bounds of the random constructions (union bound over all (B, D)
// or (B, C) pairs). Values are computed in log2-space.

struct FailureBound {
  double log2_value = 0.0;
  /// The bad event cannot occur at all (B empty, or d > n).
  bool impossible = false;

  double value() const;
};

FailureBound graph_failure_bound(std::int64_t s, std::int64_t n, std::int64_t d);
FailureBound committee_failure_bound(std::int64_t n, std::int64_t q, std::int64_t c, double alpha,
                                  double epsilon);

// ---------------------------------------------------------------------------

/// Committees plus one publish graph per committee; the on-disk document.
struct CommitteeBundle {
  CommitteeLayout layout;
  std::vector<PublishGraph> graphs;

  friend bool operator==(const CommitteeBundle&, const CommitteeBundle&) = default;
};

std::vector<PublishGraph> gen_publish_graphs(const CommitteeLayout& layout, std::int64_t d,
                                             std::int64_t delta_cap, std::uint64_t seed,
                                             VerifyMode mode, const Limits& limits = {});

void to_json(nlohmann::json& j, const Verification& v);
void from_json(const nlohmann::json& j, Verification& v);
void to_json(nlohmann::json& j, const VerifyResult& r);
void to_json(nlohmann::json& j, const CommitteeBundle& b);
void from_json(const nlohmann::json& j, CommitteeBundle& b);

std::string to_string(VerifyKind kind);

}  // namespace coinforge
