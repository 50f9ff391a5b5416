#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "coinforge/combinatorics.hpp"
#include "coinforge/params.hpp"
#include "coinforge/rng.hpp"
#include "oracles/subsets.hpp"

using namespace coinforge;

namespace {

using oracle::brute_committee_witness;
using oracle::brute_graph_witness;
using oracle::overlap;
using oracle::range;

}  // namespace

TEST(Committees, FullCommitteesAreCopiesOfEveryone) {
  const auto l = gen_committees({14, 9, 14, 1.0 / 3, 1.0 / 12, 3}, 1, VerifyMode::exhaustive());
  ASSERT_EQ(l.committees.size(), 9u);
  for (const auto& q : l.committees) EXPECT_EQ(q, range(14));
  EXPECT_EQ(l.verified.kind, VerifyKind::kExhaustive);
  EXPECT_TRUE(l.verified.trivial);
}

TEST(Committees, RejectsZeroBound) {
  EXPECT_THROW(gen_committees({14, 9, 6, 1.0 / 3, 1.0 / 12, 0}, 1, VerifyMode::exhaustive()),
               std::invalid_argument);
}

TEST(Committees, GeneratedLayoutsAreWellFormedAndMatchBruteForce) {
  // |B| = 2 and two members make a committee bad: no pair may sit in three
  // committees.
  const CommitteeSpec spec{20, 5, 6, 1.0 / 3, 0.2333, 3};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto l = gen_committees(spec, seed, VerifyMode::exhaustive());
    ASSERT_EQ(static_cast<std::int64_t>(l.committees.size()), spec.q);
    for (const auto& q : l.committees) {
      ASSERT_EQ(static_cast<std::int64_t>(q.size()), spec.s);
      EXPECT_TRUE(std::is_sorted(q.begin(), q.end()));
      EXPECT_EQ(std::adjacent_find(q.begin(), q.end()), q.end());
      EXPECT_LT(q.back(), 20u);
    }
    EXPECT_FALSE(brute_committee_witness(l, spec.alpha, spec.epsilon, spec.c).has_value());
    EXPECT_TRUE(verify_committees(l, spec.alpha, spec.epsilon, spec.c, VerifyMode::exhaustive()).pass);
    EXPECT_TRUE(verify_committees(l, spec.alpha, spec.epsilon, spec.c, VerifyMode::sampled(500)).pass);
    EXPECT_EQ(l, gen_committees(spec, seed, VerifyMode::exhaustive()));
  }
}

TEST(Committees, HandBuiltViolationYieldsSmallestWitness) {
  CommitteeLayout l;
  l.n = 14;
  l.q = 9;
  l.s = 6;
  for (int i = 0; i < 9; ++i) {
    std::vector<PartyId> q;
    if (i < 3) q = {0, 1, 2, 3 + static_cast<PartyId>(i), 10, 11};
    else q = {static_cast<PartyId>(i), 11, 12, 13, 9, static_cast<PartyId>(i - 3 + 3)};
    std::sort(q.begin(), q.end());
    q.erase(std::unique(q.begin(), q.end()), q.end());
    while (q.size() < 6) {
      for (PartyId x = 4; q.size() < 6; ++x) {
        if (!std::count(q.begin(), q.end(), x)) q.push_back(x);
      }
      std::sort(q.begin(), q.end());
    }
    l.committees.push_back(q);
  }
  const auto brute = brute_committee_witness(l, 1.0 / 3, 1.0 / 12, 3);
  ASSERT_TRUE(brute.has_value());
  const auto r = verify_committees(l, 1.0 / 3, 1.0 / 12, 3, VerifyMode::exhaustive());
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.witness, *brute);
  EXPECT_FALSE(r.heuristic_witness);
  EXPECT_FALSE(verify_committees(l, 1.0 / 3, 1.0 / 12, 3, VerifyMode::sampled(200)).pass);
}

// With n=14, s=6, |B|=3 and threshold 2, a uniformly random B makes a fixed
// committee bad with probability (C(6,2)C(8,1) + C(6,3)) / C(14,3) = 140/364.
// Averaged over B, nine committees give 1260/364 > 3 bad ones, so some B
// always has at least 4 and no layout can keep every B below c = 3.
TEST(Committees, SmallInstanceHasNoPassingLayout) {
  const std::int64_t hits = 15 * 8 + 20;
  EXPECT_EQ(hits, 140);
  EXPECT_GT(9 * hits, 3 * 364);
  Limits limits;
  limits.max_resamples = 100;
  EXPECT_THROW(gen_committees({14, 9, 6, 1.0 / 3, 1.0 / 12, 3}, 7, VerifyMode::exhaustive(), limits),
               GenerationExhausted);
  // Every random layout also fails under brute force.
  CommitteeLayout l;
  l.n = 14;
  l.q = 9;
  l.s = 6;
  Rng rng(3);
  for (int i = 0; i < 9; ++i) {
    auto q = rng.sample_without_replacement(range(14), 6);
    std::sort(q.begin(), q.end());
    l.committees.push_back(q);
  }
  EXPECT_TRUE(brute_committee_witness(l, 1.0 / 3, 1.0 / 12, 3).has_value());
}

TEST(Committees, ExhaustiveBeyondBudgetIsInfeasible) {
  Limits limits;
  limits.enumeration_budget = 1000;
  EXPECT_THROW(gen_committees({40, 5, 12, 1.0 / 3, 1.0 / 12, 3}, 1, VerifyMode::exhaustive(), limits),
               VerificationInfeasible);
}

TEST(PublishGraphs, EnumeratedGraphsMatchBruteForce) {
  const std::vector<PartyId> committee = {0, 2, 3, 5, 7, 8, 11, 12, 15};
  // 16 receivers hold 16 C(delta, 2) neighbour pairs among 36, so d = 2
  // cannot be met at delta 3 or 4; these d leave room.
  for (auto [delta, d] : {std::pair<std::int64_t, std::int64_t>{3, 4}, {4, 6}}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto g = gen_publish_graph(committee, 0, 16, d, delta, seed, VerifyMode::exhaustive());
      ASSERT_EQ(g.adjacency.size(), 16u);
      for (const auto& adj : g.adjacency) {
        ASSERT_EQ(static_cast<std::int64_t>(adj.size()), delta);
        EXPECT_TRUE(std::is_sorted(adj.begin(), adj.end()));
        EXPECT_EQ(std::adjacent_find(adj.begin(), adj.end()), adj.end());
        for (auto m : adj) EXPECT_TRUE(std::binary_search(committee.begin(), committee.end(), m));
      }
      EXPECT_FALSE(brute_graph_witness(g, d).has_value());
      const auto r = verify_publish_graph(g, d, VerifyMode::exhaustive());
      EXPECT_TRUE(r.pass);
      EXPECT_EQ(r.sets_checked, 36u);
    }
  }
}

TEST(PublishGraphs, BruteForceFindsPlantedViolation) {
  const std::vector<PartyId> committee = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  auto g = gen_publish_graph(committee, 0, 16, 2, 4, 1, VerifyMode::none());
  g.adjacency[0] = {0, 1, 4, 5};
  g.adjacency[1] = {0, 1, 6, 7};
  const auto brute = brute_graph_witness(g, 2);
  ASSERT_TRUE(brute.has_value());
  const auto r = verify_publish_graph(g, 2, VerifyMode::exhaustive());
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.witness, *brute);
}

TEST(PublishGraphs, TrivialBranchesSkipEnumeration) {
  const std::vector<PartyId> committee = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  // Delta = ceil(2s/3)
  const auto dense = gen_publish_graph(committee, 0, 16, 2, 6, 1, VerifyMode::exhaustive());
  const auto r1 = verify_publish_graph(dense, 2, VerifyMode::exhaustive());
  EXPECT_TRUE(r1.pass);
  EXPECT_TRUE(r1.trivial);
  EXPECT_EQ(r1.sets_checked, 0u);
  // d > n
  const auto sparse = gen_publish_graph(committee, 0, 16, 17, 3, 1, VerifyMode::exhaustive());
  const auto r2 = verify_publish_graph(sparse, 17, VerifyMode::exhaustive());
  EXPECT_TRUE(r2.pass);
  EXPECT_TRUE(r2.trivial);
  EXPECT_EQ(r2.sets_checked, 0u);
}

TEST(PublishGraphs, DerivedDeltaAtNineOfSixteen) {
  CoinParams p;
  p.n = 16;
  p.z = 0.3;
  p.epsilon = 1.0 / 12;
  p.overrides.q = 9;
  p.overrides.s = 9;
  p.overrides.d = 2;
  EXPECT_EQ(derive_params(p).delta_cap, 6);
}

TEST(PublishGraphs, ReliableReceiversCountUncorruptedNeighbours) {
  const std::vector<PartyId> committee = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  const auto g = gen_publish_graph(committee, 0, 16, 2, 4, 3, VerifyMode::none());
  const std::vector<PartyId> corrupted = {1, 4};
  const auto rel = reliable_receivers(g, corrupted);
  std::vector<PartyId> expect;
  for (PartyId v = 0; v < 16; ++v) {
    const auto clean = 4 - overlap(g.adjacency[v], corrupted);
    if (2 * clean > 4) expect.push_back(v);
  }
  EXPECT_EQ(rel, expect);
}

TEST(FailureBounds, KnownValues) {
  EXPECT_LT(committee_failure_bound(30, 9, 3, 1.0 / 3, 1.0 / 12).value(), 1.0);
  EXPECT_TRUE(graph_failure_bound(9, 16, 17).impossible);
  EXPECT_EQ(graph_failure_bound(9, 16, 17).value(), 0.0);
  EXPECT_TRUE(graph_failure_bound(2, 16, 1).impossible);  // B empty
  // C(9,2) 16^2 2^(-9 - 2*4)
  EXPECT_NEAR(graph_failure_bound(9, 16, 2).value(), 36.0 * 256 / std::pow(2.0, 17), 1e-12);
}

TEST(BundleJson, RoundTripsExactly) {
  CommitteeBundle b;
  b.layout = gen_committees({20, 5, 6, 1.0 / 3, 0.2333, 3}, 4, VerifyMode::exhaustive());
  b.graphs = gen_publish_graphs(b.layout, 2, 4, 9, VerifyMode::exhaustive());
  const nlohmann::json j = b;
  const CommitteeBundle back = j.get<CommitteeBundle>();
  EXPECT_EQ(back, b);
  EXPECT_EQ(nlohmann::json(back).dump(), j.dump());
}
