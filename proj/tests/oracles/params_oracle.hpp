#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>

#include "coinforge/params.hpp"
#include "coinforge/rng.hpp"

namespace oracle {

using coinforge::CoinParams;
using coinforge::Rng;
namespace mp = boost::multiprecision;
using BF = mp::cpp_bin_float_100;

// Independent re-derivation in 100-digit floats. q is an exact integer
// root when 2 - 2/k is a fraction with a small denominator, and a plain
// ceiling otherwise; the remaining terms snap values within 1e-12 of an
// integer, as documented for derive_params.

struct Rounded {
  std::int64_t value;
  bool near_integer;  // within the snapping tolerance but not exact
};

inline Rounded oracle_round(const BF& v, bool up) {
  const BF r = mp::round(v);
  const BF tol = BF("1e-12") * BF(std::max<BF>(BF(1), BF(mp::abs(v))));
  if (mp::abs(v - r) <= BF("1e-60") * std::max<BF>(BF(1), BF(mp::abs(v)))) return {static_cast<std::int64_t>(r), false};
  if (mp::abs(v - r) <= tol) return {static_cast<std::int64_t>(r), true};
  return {static_cast<std::int64_t>(up ? mp::ceil(v) : mp::floor(v)), false};
}

// Smallest m with m^den >= n^num.
inline std::int64_t ceil_root(std::int64_t n, int num, int den) {
  const mp::cpp_int target = mp::pow(mp::cpp_int(n), num);
  std::int64_t lo = 0, hi = 1;
  while (mp::pow(mp::cpp_int(hi), den) < target) hi *= 2;
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (mp::pow(mp::cpp_int(mid), den) >= target) hi = mid;
    else lo = mid + 1;
  }
  return hi;
}

struct Oracle {
  std::int64_t q, c, s, d, delta_cap, live, out;
  BF z_prime;
  int near_integer = 0;
};

inline Oracle derive(const CoinParams& p) {
  Oracle o{};
  const BF n = p.n, k = p.k, z = p.z, alpha = p.alpha, eps = p.epsilon;
  auto round = [&](const BF& v, bool up) {
    const auto r = oracle_round(v, up);
    o.near_integer += r.near_integer ? 1 : 0;
    return r.value;
  };
  const BF e = 2 - 2 / k;
  std::optional<std::int64_t> root;
  for (int den = 1; den <= 64 && !root; ++den) {
    const BF num = mp::round(e * den);
    if (mp::abs(e * den - num) < BF("1e-40")) root = ceil_root(p.n, static_cast<int>(num), den);
  }
  o.q = 2 * (root ? *root : static_cast<std::int64_t>(mp::ceil(mp::pow(n, e)))) + 1;
  const BF sq = mp::sqrt(BF(o.q));
  o.z_prime = std::max<BF>(BF(z / 3), BF(z - BF(16) / 10 / sq));
  o.c = round(o.z_prime * sq / 3, true);
  const BF size = (2 * alpha - eps) / (o.z_prime * eps * eps) * (n * mp::log(BF(2)) / o.c + mp::log(BF(o.q)));
  o.s = size >= n ? p.n : std::min(p.n, round(size, true));
  const BF S = o.s;
  o.d = round(o.z_prime * n * (1 - 3 * alpha + 3 * eps) / (36 * sq), true);
  const std::int64_t two_thirds = round(2 * S / 3, true);
  const BF sparse = 30 * (S * mp::log(BF(2)) / o.d + mp::log(n));
  o.delta_cap = sparse >= two_thirds ? two_thirds : std::min(two_thirds, round(sparse, true));
  o.live = o.q - round(5 * o.z_prime * sq / 12, false);
  o.out = round(2 * n / 3, false) + 1;
  return o;
}

inline CoinParams random_params(Rng& rng) {
  CoinParams p;
  p.n = static_cast<std::int64_t>(std::exp(rng.unit() * std::log(2e6)));
  p.n = std::max<std::int64_t>(1, p.n);
  const auto kind = rng.uniform(3);
  if (kind == 0) p.k = static_cast<double>(2 + rng.uniform(7));
  else if (kind == 1) p.k = 2.5 + static_cast<double>(rng.uniform(5));
  else p.k = 2.0 + 6.0 * rng.unit();
  p.z = 0.001 + 3.0 * rng.unit();
  p.alpha = 0.01 + (1.0 / 3.0 - 0.01) * rng.unit();
  do {
    p.epsilon = p.alpha * rng.unit();
  } while (!(p.epsilon > 0.0));
  return p;
}

}  // namespace oracle
