#include "coinforge/combinatorics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coinforge/params.hpp"
#include "coinforge/rng.hpp"

namespace coinforge {

namespace {

constexpr std::uint64_t kCommitteeStream = 0x636f6d6d;  // "comm"
constexpr std::uint64_t kGraphStream = 0x67726170;      // "grap"
constexpr std::uint64_t kSampleStream = 0x73616d70;     // "samp"

/// C(n, k) saturating at UINT64_MAX.
std::uint64_t binomial_saturating(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 acc = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    acc = acc * (n - k + i) / i;
    if (acc > UINT64_MAX) return UINT64_MAX;
  }
  return static_cast<std::uint64_t>(acc);
}

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  const unsigned __int128 r = static_cast<unsigned __int128>(a) * b;
  return r > UINT64_MAX ? UINT64_MAX : static_cast<std::uint64_t>(r);
}

/// Calls visit(subset) for every size-k subset of `universe` in
/// lexicographic order until visit returns false.
template <typename Visit>
void for_each_subset(const std::vector<PartyId>& universe, std::size_t k, Visit&& visit) {
  const std::size_t m = universe.size();
  if (k > m) return;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<PartyId> subset(k);
  while (true) {
    for (std::size_t i = 0; i < k; ++i) subset[i] = universe[idx[i]];
    if (!visit(subset)) return;
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == m - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

std::vector<PartyId> iota_parties(std::int64_t n) {
  std::vector<PartyId> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), PartyId{0});
  return all;
}

std::int64_t committee_corruption_bound(std::int64_t n, double alpha, double epsilon) {
  return std::max<std::int64_t>(0, snapped_floor((alpha - epsilon) * static_cast<double>(n)));
}

/// Ranks `items` by descending weight, ties broken by id, and keeps `count`.
std::vector<PartyId> top_by_weight(const std::vector<PartyId>& items,
                                   const std::vector<std::uint64_t>& weight, std::size_t count) {
  std::vector<PartyId> ranked = items;
  std::stable_sort(ranked.begin(), ranked.end(),
                   [&](PartyId a, PartyId b) { return weight[a] > weight[b]; });
  ranked.resize(std::min(count, ranked.size()));
  std::sort(ranked.begin(), ranked.end());
  return ranked;
}

class CommitteeChecker {
 public:
  CommitteeChecker(const CommitteeLayout& layout, std::int64_t threshold, std::int64_t c)
      : layout_(layout), threshold_(threshold), c_(c),
        member_(static_cast<std::size_t>(layout.q),
                std::vector<std::uint8_t>(static_cast<std::size_t>(layout.n), 0)) {
    for (std::size_t j = 0; j < layout.committees.size(); ++j) {
      for (PartyId p : layout.committees[j]) member_[j][p] = 1;
    }
  }

  std::int64_t bad_count(const std::vector<PartyId>& corrupted) const {
    std::int64_t bad = 0;
    for (const auto& row : member_) {
      std::int64_t hits = 0;
      for (PartyId p : corrupted) hits += row[p];
      if (hits >= threshold_) ++bad;
    }
    return bad;
  }

  bool violates(const std::vector<PartyId>& corrupted) const {
    return bad_count(corrupted) >= c_;
  }

 private:
  const CommitteeLayout& layout_;
  std::int64_t threshold_;
  std::int64_t c_;
  std::vector<std::vector<std::uint8_t>> member_;
};

class GraphChecker {
 public:
  GraphChecker(const PublishGraph& graph, std::int64_t d)
      : graph_(graph), d_(d), in_b_(graph.adjacency.size(), 0) {}

  /// Receivers with at least delta_cap/2 neighbours in `corrupted`.
  std::int64_t exposed(const std::vector<PartyId>& corrupted) {
    for (PartyId p : corrupted) in_b_[p] = 1;
    std::int64_t count = 0;
    for (const auto& nbrs : graph_.adjacency) {
      std::int64_t hits = 0;
      for (PartyId p : nbrs) hits += in_b_[p];
      if (2 * hits >= graph_.delta_cap) ++count;
    }
    for (PartyId p : corrupted) in_b_[p] = 0;
    return count;
  }

  bool violates(const std::vector<PartyId>& corrupted) { return exposed(corrupted) >= d_; }

 private:
  const PublishGraph& graph_;
  std::int64_t d_;
  std::vector<std::uint8_t> in_b_;
};

}  // namespace

std::string to_string(VerifyKind kind) {
  switch (kind) {
    case VerifyKind::kExhaustive: return "exhaustive";
    case VerifyKind::kSampled: return "sampled";
    case VerifyKind::kUnverified: return "unverified";
  }
  return "unverified";
}

// ---------------------------------------------------------------------------

std::int64_t count_bad_committees(const CommitteeLayout& layout, double alpha,
                                  const std::vector<PartyId>& corrupted) {
  CommitteeChecker checker(layout, bad_member_threshold(alpha, layout.s), 1);
  return checker.bad_count(corrupted);
}

VerifyResult verify_committees(const CommitteeLayout& layout, double alpha, double epsilon,
                               std::int64_t c, VerifyMode mode, const Limits& limits,
                               std::uint64_t sample_seed) {
  if (c < 1) throw std::invalid_argument("c must be at least 1");
  VerifyResult result;
  if (mode.kind == VerifyKind::kUnverified) return result;

  const std::int64_t b = committee_corruption_bound(layout.n, alpha, epsilon);
  const std::int64_t threshold = bad_member_threshold(alpha, layout.s);
  if (b < threshold) {
    // No committee can reach the threshold from b parties.
    result.trivial = true;
    return result;
  }

  CommitteeChecker checker(layout, threshold, c);
  const std::vector<PartyId> parties = iota_parties(layout.n);

  if (mode.kind == VerifyKind::kExhaustive) {
    const std::uint64_t checks = saturating_mul(
        binomial_saturating(static_cast<std::uint64_t>(layout.n), static_cast<std::uint64_t>(b)),
        static_cast<std::uint64_t>(layout.q));
    if (checks > limits.enumeration_budget) {
      throw VerificationInfeasible("verification infeasible, use sampled: C(" +
                                   std::to_string(layout.n) + ", " + std::to_string(b) +
                                   ") * q exceeds the enumeration budget");
    }
    for_each_subset(parties, static_cast<std::size_t>(b), [&](const std::vector<PartyId>& B) {
      ++result.sets_checked;
      if (checker.violates(B)) {
        result.pass = false;
        result.witness = B;
        return false;
      }
      return true;
    });
    return result;
  }

  // Sampled: the greedy set first, then uniform ones.
  std::vector<std::uint64_t> membership(static_cast<std::size_t>(layout.n), 0);
  for (const auto& committee : layout.committees) {
    for (PartyId p : committee) ++membership[p];
  }
  const std::vector<PartyId> greedy = top_by_weight(parties, membership, static_cast<std::size_t>(b));
  ++result.sets_checked;
  if (checker.violates(greedy)) {
    result.pass = false;
    result.witness = greedy;
    result.heuristic_witness = true;
    return result;
  }
  Rng rng(derive_seed(sample_seed, kSampleStream));
  for (std::uint64_t i = 0; i < mode.trials; ++i) {
    std::vector<PartyId> B = rng.sample_without_replacement(parties, static_cast<std::size_t>(b));
    std::sort(B.begin(), B.end());
    ++result.sets_checked;
    if (checker.violates(B)) {
      result.pass = false;
      result.witness = std::move(B);
      return result;
    }
  }
  return result;
}

CommitteeLayout gen_committees(const CommitteeSpec& spec, std::uint64_t seed, VerifyMode mode,
                               const Limits& limits) {
  if (spec.c < 1) throw std::invalid_argument("c must be at least 1");
  if (spec.n < 1 || spec.q < 1 || spec.s < 1 || spec.s > spec.n) {
    throw std::invalid_argument("committee spec requires n >= 1, q >= 1 and 1 <= s <= n");
  }
  if (spec.n > static_cast<std::int64_t>(UINT32_MAX)) {
    throw std::invalid_argument("n exceeds the party id range");
  }

  CommitteeLayout layout;
  layout.n = spec.n;
  layout.q = spec.q;
  layout.s = spec.s;
  layout.seed = seed;

  const std::vector<PartyId> parties = iota_parties(spec.n);
  if (spec.s == spec.n) {
    layout.committees.assign(static_cast<std::size_t>(spec.q), parties);
    layout.verified = {VerifyKind::kExhaustive, 0, true};
    return layout;
  }

  for (std::uint64_t attempt = 0;; ++attempt) {
    if (attempt > limits.max_resamples) {
      throw GenerationExhausted("no committee layout passed verification after " +
                                std::to_string(limits.max_resamples) + " resamples");
    }
    Rng rng(derive_seed(seed, kCommitteeStream, attempt));
    layout.committees.clear();
    for (std::int64_t j = 0; j < spec.q; ++j) {
      std::vector<PartyId> committee =
          rng.sample_without_replacement(parties, static_cast<std::size_t>(spec.s));
      std::sort(committee.begin(), committee.end());
      layout.committees.push_back(std::move(committee));
    }
    layout.resamples = attempt;
    const VerifyResult check =
        verify_committees(layout, spec.alpha, spec.epsilon, spec.c, mode, limits,
                          derive_seed(seed, kSampleStream, attempt));
    if (check.pass) {
      layout.verified = {mode.kind, mode.trials, check.trivial};
      return layout;
    }
  }
}

// ---------------------------------------------------------------------------

std::vector<PartyId> reliable_receivers(const PublishGraph& graph,
                                        const std::vector<PartyId>& corrupted) {
  std::vector<std::uint8_t> bad(graph.adjacency.size(), 0);
  for (PartyId p : corrupted) bad[p] = 1;
  std::vector<PartyId> out;
  for (std::size_t v = 0; v < graph.adjacency.size(); ++v) {
    std::int64_t honest = 0;
    for (PartyId p : graph.adjacency[v]) honest += bad[p] ? 0 : 1;
    if (2 * honest > graph.delta_cap) out.push_back(static_cast<PartyId>(v));
  }
  return out;
}

VerifyResult verify_publish_graph(const PublishGraph& graph, std::int64_t d, VerifyMode mode,
                                  const Limits& limits, std::uint64_t sample_seed) {
  if (d < 1) throw std::invalid_argument("d must be at least 1");
  VerifyResult result;
  if (mode.kind == VerifyKind::kUnverified) return result;

  const auto n = static_cast<std::int64_t>(graph.adjacency.size());
  const auto s = static_cast<std::int64_t>(graph.committee.size());
  const std::int64_t b = (s + 2) / 3 - 1;
  if (d > n || 2 * std::min(b, graph.delta_cap) < graph.delta_cap) {
    result.trivial = true;
    return result;
  }

  GraphChecker checker(graph, d);
  if (mode.kind == VerifyKind::kExhaustive) {
    const std::uint64_t checks = saturating_mul(
        binomial_saturating(static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(b)),
        static_cast<std::uint64_t>(n));
    if (checks > limits.enumeration_budget) {
      throw VerificationInfeasible("verification infeasible, use sampled: C(" + std::to_string(s) +
                                   ", " + std::to_string(b) +
                                   ") * n exceeds the enumeration budget");
    }
    for_each_subset(graph.committee, static_cast<std::size_t>(b),
                    [&](const std::vector<PartyId>& B) {
                      ++result.sets_checked;
                      if (checker.violates(B)) {
                        result.pass = false;
                        result.witness = B;
                        return false;
                      }
                      return true;
                    });
    return result;
  }

  std::vector<std::uint64_t> degree(graph.adjacency.size(), 0);
  for (const auto& nbrs : graph.adjacency) {
    for (PartyId p : nbrs) ++degree[p];
  }
  const std::vector<PartyId> greedy =
      top_by_weight(graph.committee, degree, static_cast<std::size_t>(b));
  ++result.sets_checked;
  if (checker.violates(greedy)) {
    result.pass = false;
    result.witness = greedy;
    result.heuristic_witness = true;
    return result;
  }
  Rng rng(derive_seed(sample_seed, kSampleStream));
  for (std::uint64_t i = 0; i < mode.trials; ++i) {
    std::vector<PartyId> B =
        rng.sample_without_replacement(graph.committee, static_cast<std::size_t>(b));
    std::sort(B.begin(), B.end());
    ++result.sets_checked;
    if (checker.violates(B)) {
      result.pass = false;
      result.witness = std::move(B);
      return result;
    }
  }
  return result;
}

PublishGraph gen_publish_graph(const std::vector<PartyId>& committee, std::int64_t committee_id,
                               std::int64_t n, std::int64_t d, std::int64_t delta_cap,
                               std::uint64_t seed, VerifyMode mode, const Limits& limits) {
  if (d < 1) throw std::invalid_argument("d must be at least 1");
  if (committee.empty()) throw std::invalid_argument("empty committee");
  if (delta_cap < 1 || delta_cap > static_cast<std::int64_t>(committee.size())) {
    throw std::invalid_argument("delta_cap must lie in [1, |Q|]");
  }

  PublishGraph graph;
  graph.committee_id = committee_id;
  graph.committee = committee;
  std::sort(graph.committee.begin(), graph.committee.end());
  graph.delta_cap = delta_cap;
  graph.seed = seed;

  for (std::uint64_t attempt = 0;; ++attempt) {
    if (attempt > limits.max_resamples) {
      throw GenerationExhausted("no publish graph passed verification after " +
                                std::to_string(limits.max_resamples) + " resamples");
    }
    Rng rng(derive_seed(seed, kGraphStream, attempt));
    graph.adjacency.clear();
    for (std::int64_t v = 0; v < n; ++v) {
      std::vector<PartyId> nbrs =
          rng.sample_without_replacement(graph.committee, static_cast<std::size_t>(delta_cap));
      std::sort(nbrs.begin(), nbrs.end());
      graph.adjacency.push_back(std::move(nbrs));
    }
    graph.resamples = attempt;
    const VerifyResult check =
        verify_publish_graph(graph, d, mode, limits, derive_seed(seed, kSampleStream, attempt));
    if (check.pass) {
      graph.verified = {mode.kind, mode.trials, check.trivial};
      return graph;
    }
  }
}

std::vector<PublishGraph> gen_publish_graphs(const CommitteeLayout& layout, std::int64_t d,
                                             std::int64_t delta_cap, std::uint64_t seed,
                                             VerifyMode mode, const Limits& limits) {
  std::vector<PublishGraph> graphs;
  graphs.reserve(layout.committees.size());
  for (std::size_t j = 0; j < layout.committees.size(); ++j) {
    graphs.push_back(gen_publish_graph(layout.committees[j], static_cast<std::int64_t>(j), layout.n,
                                       d, delta_cap, derive_seed(seed, kGraphStream, j), mode,
                                       limits));
  }
  return graphs;
}

// ---------------------------------------------------------------------------

double FailureBound::value() const { return impossible ? 0.0 : std::exp2(log2_value); }

namespace {

double log2_binomial(std::int64_t n, std::int64_t k) {
  return (std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
          std::lgamma(static_cast<double>(n - k) + 1.0)) /
         std::log(2.0);
}

}  // namespace

FailureBound graph_failure_bound(std::int64_t s, std::int64_t n, std::int64_t d) {
  FailureBound bound;
  const std::int64_t b = (s + 2) / 3 - 1;
  if (b <= 0 || d > n) {
    bound.impossible = true;
    return bound;
  }
  const double log2n = std::log2(static_cast<double>(n));
  const double dd = static_cast<double>(d);
  // C(s, b) * n^d * 2^(-s - d log2 n)
  bound.log2_value = log2_binomial(s, b) + dd * log2n - static_cast<double>(s) - dd * log2n;
  return bound;
}

FailureBound committee_failure_bound(std::int64_t n, std::int64_t q, std::int64_t c, double alpha,
                                  double epsilon) {
  FailureBound bound;
  const std::int64_t b = committee_corruption_bound(n, alpha, epsilon);
  if (b <= 0) {
    bound.impossible = true;
    return bound;
  }
  const double log2q = std::log2(static_cast<double>(q));
  const double cc = static_cast<double>(c);
  // C(n, b) * q^c * 2^(-n - c log2 q)
  bound.log2_value = log2_binomial(n, b) + cc * log2q - static_cast<double>(n) - cc * log2q;
  return bound;
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const Verification& v) {
  if (v.kind == VerifyKind::kSampled) {
    j = nlohmann::json{{"sampled", v.trials}};
  } else {
    j = to_string(v.kind);
  }
}

void from_json(const nlohmann::json& j, Verification& v) {
  v = {};
  if (j.is_object()) {
    v.kind = VerifyKind::kSampled;
    v.trials = j.at("sampled").get<std::uint64_t>();
  } else {
    const auto text = j.get<std::string>();
    if (text == "exhaustive") v.kind = VerifyKind::kExhaustive;
    else if (text == "unverified") v.kind = VerifyKind::kUnverified;
    else throw std::invalid_argument("unknown verification '" + text + "'");
  }
}

void to_json(nlohmann::json& j, const VerifyResult& r) {
  j = nlohmann::json{{"pass", r.pass},
                     {"trivial", r.trivial},
                     {"sets_checked", r.sets_checked}};
  if (!r.pass) {
    j["witness"] = r.witness;
    j["heuristic_witness"] = r.heuristic_witness;
  }
}

void to_json(nlohmann::json& j, const CommitteeBundle& b) {
  nlohmann::json graphs = nlohmann::json::array();
  for (const PublishGraph& g : b.graphs) {
    graphs.push_back({{"committee_id", g.committee_id},
                      {"delta_cap", g.delta_cap},
                      {"seed", g.seed},
                      {"resamples", g.resamples},
                      {"trivial", g.verified.trivial},
                      {"verified", g.verified},
                      {"adjacency", g.adjacency}});
  }
  j = nlohmann::json{{"n", b.layout.n},
                     {"q", b.layout.q},
                     {"s", b.layout.s},
                     {"seed", b.layout.seed},
                     {"resamples", b.layout.resamples},
                     {"trivial", b.layout.verified.trivial},
                     {"verified", b.layout.verified},
                     {"committees", b.layout.committees},
                     {"graphs", graphs}};
}

void from_json(const nlohmann::json& j, CommitteeBundle& b) {
  b = {};
  b.layout.n = j.at("n").get<std::int64_t>();
  b.layout.q = j.at("q").get<std::int64_t>();
  b.layout.s = j.at("s").get<std::int64_t>();
  b.layout.seed = j.at("seed").get<std::uint64_t>();
  b.layout.resamples = j.value("resamples", std::uint64_t{0});
  b.layout.verified = j.at("verified").get<Verification>();
  b.layout.verified.trivial = j.value("trivial", false);
  b.layout.committees = j.at("committees").get<std::vector<std::vector<PartyId>>>();
  if (static_cast<std::int64_t>(b.layout.committees.size()) != b.layout.q) {
    throw std::invalid_argument("layout lists " + std::to_string(b.layout.committees.size()) +
                                " committees but q = " + std::to_string(b.layout.q));
  }
  for (const auto& committee : b.layout.committees) {
    if (static_cast<std::int64_t>(committee.size()) != b.layout.s) {
      throw std::invalid_argument("committee size differs from s");
    }
    for (PartyId p : committee) {
      if (p >= static_cast<std::uint64_t>(b.layout.n)) {
        throw std::invalid_argument("committee member out of range");
      }
    }
  }
  if (j.contains("graphs")) {
    for (const auto& g : j.at("graphs")) {
      PublishGraph graph;
      graph.committee_id = g.at("committee_id").get<std::int64_t>();
      if (graph.committee_id < 0 || graph.committee_id >= b.layout.q) {
        throw std::invalid_argument("graph committee_id out of range");
      }
      graph.committee = b.layout.committees[static_cast<std::size_t>(graph.committee_id)];
      graph.delta_cap = g.at("delta_cap").get<std::int64_t>();
      graph.seed = g.value("seed", std::uint64_t{0});
      graph.resamples = g.value("resamples", std::uint64_t{0});
      graph.verified = g.at("verified").get<Verification>();
      graph.verified.trivial = g.value("trivial", false);
      graph.adjacency = g.at("adjacency").get<std::vector<std::vector<PartyId>>>();
      if (static_cast<std::int64_t>(graph.adjacency.size()) != b.layout.n) {
        throw std::invalid_argument("graph adjacency must list n receiver vertices");
      }
      b.graphs.push_back(std::move(graph));
    }
  }
}

}  // namespace coinforge
