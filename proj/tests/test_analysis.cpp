#include <gtest/gtest.h>

#include <gmpxx.h>

#include "coinforge/analysis.hpp"
#include "coinforge/protocols.hpp"

using namespace coinforge;

namespace {

// Pr[|X - n/2| < sigma]^2 <= 64 sigma^2 / (25 n) in exact rationals.
bool oracle_holds(long n, long sigma) {
  mpz_class count = 0, binom = 1;
  for (long k = 0; k <= n; ++k) {
    if (k > 0) binom = binom * (n - k + 1) / k;
    if (std::abs(2 * k - n) < 2 * sigma) count += binom;
  }
  mpz_class total;
  mpz_ui_pow_ui(total.get_mpz_t(), 2, static_cast<unsigned long>(n));
  const mpq_class pr(count, total);
  return pr * pr * 25 * n <= mpq_class(64 * sigma * sigma);
}

}  // namespace

TEST(AntiConcentration, ExactCheckUpTo64) {
  const AntiConcentrationResult r = verify_lemma4(64);
  EXPECT_TRUE(r.pass);
  EXPECT_TRUE(r.failures.empty());
  EXPECT_EQ(r.pairs_checked, 2144u);
  EXPECT_LT(r.worst_ratio, 1.0);
  for (long n = 1; n <= 64; ++n) {
    for (long sigma = 0; sigma <= n; ++sigma) {
      ASSERT_EQ(oracle_holds(n, sigma), anti_concentration_holds(n, sigma)) << n << " " << sigma;
    }
  }
}

TEST(AntiConcentration, SmallCases) {
  // n = 1, sigma = 1: probability 1 against 8/5
  EXPECT_TRUE(coinforge::anti_concentration_holds(1, 1));
  // sigma = 0: empty event
  EXPECT_TRUE(coinforge::anti_concentration_holds(10, 0));
  // n = 4, sigma = 1: Pr[X = 2] = 6/16 against 0.8
  EXPECT_TRUE(anti_concentration_holds(4, 1));
}

TEST(Wilson, MatchesClosedForm) {
  const double z = 2.5758293035489004;  // 99% two-sided
  for (auto [k, n] : {std::pair<std::uint64_t, std::uint64_t>{50, 100}, {0, 20}, {20, 20}, {9990, 10000}}) {
    const double p = static_cast<double>(k) / n;
    const double denom = 1 + z * z / n;
    const double center = (p + z * z / (2.0 * n)) / denom;
    const double half = z / denom * std::sqrt(p * (1 - p) / n + z * z / (4.0 * n * n));
    const WilsonInterval w = wilson_interval(k, n, 0.99);
    EXPECT_NEAR(w.center, center, 1e-12);
    EXPECT_NEAR(w.halfwidth, half, 1e-12);
    EXPECT_NEAR(w.lo, std::max(0.0, center - half), 1e-12);
    EXPECT_NEAR(w.hi, std::min(1.0, center + half), 1e-12);
  }
  const WilsonInterval w95 = wilson_interval(50, 100, 0.95);
  EXPECT_NEAR(w95.lo, 0.4038, 1e-4);
  EXPECT_NEAR(w95.hi, 0.5962, 1e-4);
}

TEST(Fairness, SummaryCountsAndVerdict) {
  std::vector<TrialOutcome> rows;
  for (int i = 0; i < 100; ++i) {
    TrialOutcome t;
    t.live = true;
    t.agreed = i < 98;
    t.defined = i < 99;
    t.common = i < 95;
    t.value = i % 2;
    rows.push_back(t);
  }
  const FairnessEstimate e = summarize_fairness(rows, 0.9, 0.99);
  EXPECT_EQ(e.trials, 100u);
  EXPECT_EQ(e.agreed_count, 98u);
  EXPECT_EQ(e.common_count, 95u);
  EXPECT_EQ(e.undefined_count, 1u);
  EXPECT_DOUBLE_EQ(e.rate, 0.95);
  EXPECT_TRUE(e.pass);
  // rate >= bound - halfwidth, with halfwidth about 0.05 here
  EXPECT_TRUE(summarize_fairness(rows, 0.999, 0.99).pass);
  for (int i = 80; i < 100; ++i) rows[i].common = false;
  EXPECT_FALSE(summarize_fairness(rows, 0.95, 0.99).pass);
  const FairnessEstimate vac = summarize_fairness(rows, -0.5, 0.99);
  EXPECT_TRUE(vac.vacuous);
  EXPECT_TRUE(vac.pass);
}

TEST(Fairness, BoundFormula) {
  CoinParams p;
  p.z = 0.3;
  p.delta = 0.99;
  EXPECT_NEAR(fairness_bound(p, 9), 1 - 0.09 - 0.3, 1e-12);
}

TEST(Audit, CapsAndFirstFailedTerm) {
  DerivedParams dp;
  dp.n = 16;
  dp.q = 9;
  dp.s = 13;
  dp.delta_cap = 9;
  const AuditCaps caps = transform_caps(dp, Polynomial::monomial(2.0), 1.0, 2);
  EXPECT_DOUBLE_EQ(caps.crusader, 2 * 4.0 * 169 * 9);
  EXPECT_DOUBLE_EQ(caps.publish, 2 * 16.0 * 9 * 9);
  EXPECT_DOUBLE_EQ(caps.majority, 2 * 256.0);
  EXPECT_DOUBLE_EQ(caps.coin, 2 * 9.0 * 169);
  EXPECT_DOUBLE_EQ(caps.latency, 6.0);

  sim::TrialReport r;
  r.all_honest_output = true;
  r.latency = 4.0;
  r.honest_by_channel["CRUS_VAL"] = 100;
  r.honest_by_channel["MAJ"] = 600;
  r.honest_messages = 700;
  AuditResult a = audit_transcript(r, caps);
  EXPECT_FALSE(a.pass);
  EXPECT_EQ(a.failed_term, "majority");

  r.honest_by_channel["MAJ"] = 512;
  r.honest_messages = 612;
  EXPECT_TRUE(audit_transcript(r, caps).pass);
  r.latency = 6.5;
  EXPECT_EQ(audit_transcript(r, caps).failed_term, "latency");
  r.latency = 1.0;
  r.all_honest_output = false;
  EXPECT_EQ(audit_transcript(r, caps).failed_term, "liveness");
}

TEST(Reports, CsvHeaderAndRows) {
  TrialOutcome t;
  t.seed = 5;
  t.live = t.agreed = t.defined = t.common = true;
  t.value = 1;
  t.latency = 2.5;
  t.msgs_by_class["1-bit"] = 3;
  const std::string csv = trials_csv({t});
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "seed,live,agreed,defined,common,bit,latency,msgs_1bit,msgs_tagged,msgs_opaque");
  EXPECT_NE(csv.find("5,1,1,1,1,1,2.5"), std::string::npos);
}
