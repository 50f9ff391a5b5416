#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <vector>

#include "coinforge/combinatorics.hpp"
#include "coinforge/params.hpp"

namespace oracle {

using namespace coinforge;

// Calls f on every size-k subset of `pool` in lexicographic order; stops
// when f returns false.
inline void for_each_subset(const std::vector<PartyId>& pool, std::size_t k,
                     const std::function<bool(const std::vector<PartyId>&)>& f) {
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<PartyId> cur(k);
  if (k > pool.size()) return;
  while (true) {
    for (std::size_t i = 0; i < k; ++i) cur[i] = pool[idx[i]];
    if (!f(cur)) return;
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == pool.size() - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

inline std::vector<PartyId> range(std::int64_t n) {
  std::vector<PartyId> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

inline std::size_t overlap(const std::vector<PartyId>& a, const std::vector<PartyId>& b) {
  std::size_t k = 0;
  for (auto x : a) k += std::count(b.begin(), b.end(), x);
  return k;
}

// First B of size floor((alpha-eps) n) with at least c committees holding
// >= alpha*s of its members.
inline std::optional<std::vector<PartyId>> brute_committee_witness(const CommitteeLayout& l, double alpha,
                                                            double eps, std::int64_t c) {
  CoinParams p;
  p.n = l.n;
  p.alpha = alpha;
  p.epsilon = eps;
  const auto b = static_cast<std::size_t>(max_corruptions(p));
  const auto threshold = static_cast<std::size_t>(bad_member_threshold(alpha, l.s));
  std::optional<std::vector<PartyId>> witness;
  for_each_subset(range(l.n), b, [&](const std::vector<PartyId>& B) {
    std::int64_t bad = 0;
    for (const auto& q : l.committees) bad += overlap(q, B) >= threshold ? 1 : 0;
    if (bad >= c) {
      witness = B;
      return false;
    }
    return true;
  });
  return witness;
}

inline std::optional<std::vector<PartyId>> brute_graph_witness(const PublishGraph& g, std::int64_t d) {
  const auto b = static_cast<std::size_t>((g.committee.size() + 2) / 3 - 1);
  std::optional<std::vector<PartyId>> witness;
  for_each_subset(g.committee, b, [&](const std::vector<PartyId>& B) {
    std::int64_t heavy = 0;
    for (const auto& adj : g.adjacency) heavy += 2 * overlap(adj, B) >= static_cast<std::size_t>(g.delta_cap) ? 1 : 0;
    if (heavy >= d) {
      witness = B;
      return false;
    }
    return true;
  });
  return witness;
}

}  // namespace oracle
