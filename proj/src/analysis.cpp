#include "coinforge/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "coinforge/protocols.hpp"

namespace coinforge {

using boost::multiprecision::cpp_int;

namespace {

std::vector<cpp_int> binomial_row(std::int64_t n) {
  std::vector<cpp_int> row(static_cast<std::size_t>(n) + 1);
  row[0] = 1;
  for (std::int64_t k = 1; k <= n; ++k) row[k] = row[k - 1] * (n - k + 1) / k;
  return row;
}

bool holds_with_row(const std::vector<cpp_int>& row, std::int64_t n, std::int64_t sigma, cpp_int* mass) {
  cpp_int a = 0;
  for (std::int64_t k = 0; k <= n; ++k) {
    if (std::llabs(2 * k - n) < 2 * sigma) a += row[k];
  }
  if (mass) *mass = a;
  const cpp_int lhs = 25 * a * a * n;
  const cpp_int rhs = 64 * cpp_int(sigma) * sigma * (cpp_int(1) << (2 * n));
  return lhs <= rhs;
}

}  // namespace

bool anti_concentration_holds(std::int64_t n, std::int64_t sigma) {
  if (n < 1 || sigma < 0) throw std::invalid_argument("anti-concentration check needs n >= 1 and sigma >= 0");
  return holds_with_row(binomial_row(n), n, sigma, nullptr);
}

AntiConcentrationResult verify_lemma4(std::int64_t n_max) {
  if (n_max < 1) throw std::invalid_argument("n_max must be at least 1");
  AntiConcentrationResult r;
  r.n_max = n_max;
  for (std::int64_t n = 1; n <= n_max; ++n) {
    const auto row = binomial_row(n);
    for (std::int64_t sigma = 0; sigma <= n; ++sigma) {
      cpp_int mass;
      ++r.pairs_checked;
      if (!holds_with_row(row, n, sigma, &mass)) {
        r.pass = false;
        r.failures.push_back({n, sigma});
      }
      if (sigma > 0) {
        const double pr = std::ldexp(mass.convert_to<double>(), static_cast<int>(-n));
        const double ratio = pr / (8.0 * static_cast<double>(sigma) / (5.0 * std::sqrt(static_cast<double>(n))));
        if (ratio > r.worst_ratio) {
          r.worst_ratio = ratio;
          r.worst_n = n;
          r.worst_sigma = sigma;
        }
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------------------

WilsonInterval wilson_interval(std::uint64_t successes, std::uint64_t trials, double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw std::invalid_argument("confidence must lie in (0, 1)");
  if (successes > trials) throw std::invalid_argument("more successes than trials");
  WilsonInterval w;
  if (trials == 0) return w;
  const boost::math::normal_distribution<double> normal;
  const double z = boost::math::quantile(normal, 1.0 - (1.0 - confidence) / 2.0);
  const double nt = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / nt;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nt;
  w.center = (p + z2 / (2.0 * nt)) / denom;
  w.halfwidth = z * std::sqrt(p * (1.0 - p) / nt + z2 / (4.0 * nt * nt)) / denom;
  w.lo = std::max(0.0, w.center - w.halfwidth);
  w.hi = std::min(1.0, w.center + w.halfwidth);
  return w;
}

TrialOutcome outcome_of(const sim::TrialReport& report, bool defined, bool common) {
  TrialOutcome t;
  t.seed = report.seed;
  t.live = report.all_honest_output;
  t.agreed = report.agreed;
  t.defined = defined;
  t.common = common;
  t.value = report.output_value;
  t.latency = report.latency;
  t.msgs_by_class = report.msg_count_by_bucket;
  return t;
}

double fairness_bound(const CoinParams& p, std::int64_t q) {
  return 1.0 - (1.0 - p.delta) * static_cast<double>(q) - p.z;
}

FairnessEstimate summarize_fairness(const std::vector<TrialOutcome>& trials, double bound, double confidence) {
  FairnessEstimate e;
  e.trials = trials.size();
  e.confidence = confidence;
  e.bound = bound;
  for (const auto& t : trials) {
    e.live_count += t.live ? 1 : 0;
    e.agreed_count += t.agreed ? 1 : 0;
    e.common_count += t.common ? 1 : 0;
    e.undefined_count += t.defined ? 0 : 1;
    if (t.agreed && t.value) ++e.bit_counts[*t.value & 1U];
    e.max_latency = std::max(e.max_latency, t.latency);
  }
  e.rate = e.trials ? static_cast<double>(e.common_count) / static_cast<double>(e.trials) : 0.0;
  e.interval = wilson_interval(e.common_count, e.trials, confidence);
  e.vacuous = bound <= 0.0;
  e.pass = e.vacuous || e.rate >= bound - e.interval.halfwidth;
  return e;
}

FairnessEstimate estimate_fairness(const std::function<TrialOutcome(std::uint64_t)>& run_trial,
                                   std::uint64_t trials, double bound, double confidence,
                                   std::vector<TrialOutcome>* rows) {
  std::vector<TrialOutcome> outcomes;
  outcomes.reserve(trials);
  for (std::uint64_t i = 0; i < trials; ++i) outcomes.push_back(run_trial(i));
  auto e = summarize_fairness(outcomes, bound, confidence);
  if (rows) *rows = std::move(outcomes);
  return e;
}

// ---------------------------------------------------------------------------

AuditCaps transform_caps(const DerivedParams& dp, const Polynomial& coin_messages, double R,
                         std::uint32_t sessions) {
  const double q = static_cast<double>(dp.q);
  const double s = static_cast<double>(dp.s);
  const double n = static_cast<double>(dp.n);
  const double l = static_cast<double>(sessions);
  AuditCaps caps;
  caps.crusader = l * 4.0 * s * s * q;
  caps.publish = l * n * static_cast<double>(dp.delta_cap) * q;
  caps.majority = l * n * n;
  caps.coin = l * q * coin_messages(s);
  caps.latency = R + 5.0;
  return caps;
}

AuditResult audit_transcript(const sim::TrialReport& report, const AuditCaps& caps) {
  auto count = [&](std::initializer_list<Channel> chans) {
    std::uint64_t c = 0;
    for (auto ch : chans) {
      auto it = report.honest_by_channel.find(channel_names()[ch]);
      if (it != report.honest_by_channel.end()) c += it->second;
    }
    return static_cast<double>(c);
  };
  AuditResult a;
  a.byzantine_messages = report.byzantine_messages;
  a.terms.push_back({"crusader", count({kCrusVal, kCrusRelay, kCrusAux}), caps.crusader, true});
  a.terms.push_back({"publish", count({kPub}), caps.publish, true});
  a.terms.push_back({"majority", count({kMaj}), caps.majority, true});
  a.terms.push_back({"coin", count({kCoin}), caps.coin, true});
  a.terms.push_back({"total", static_cast<double>(report.honest_messages), caps.total(), true});
  if (caps.latency >= 0.0) {
    a.terms.push_back({"liveness", report.all_honest_output ? 1.0 : 0.0, 1.0, true});
    a.terms.push_back({"latency", report.latency, caps.latency, true});
  }
  for (auto& t : a.terms) {
    t.pass = t.name == "liveness" ? t.measured >= 1.0 : t.measured <= t.cap;
    if (!t.pass && a.pass) {
      a.pass = false;
      a.failed_term = t.name;
    }
  }
  return a;
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const AntiConcentrationResult& r) {
  nlohmann::json fails = nlohmann::json::array();
  for (const auto& f : r.failures) fails.push_back({{"n", f.n}, {"sigma", f.sigma}});
  j = {{"pass", r.pass},
       {"n_max", r.n_max},
       {"pairs_checked", r.pairs_checked},
       {"failures", fails},
       {"worst_ratio", r.worst_ratio},
       {"worst_n", r.worst_n},
       {"worst_sigma", r.worst_sigma}};
}

void to_json(nlohmann::json& j, const WilsonInterval& w) {
  j = {{"lo", w.lo}, {"hi", w.hi}, {"center", w.center}, {"halfwidth", w.halfwidth}};
}

void to_json(nlohmann::json& j, const FairnessEstimate& e) {
  j = {{"trials", e.trials},
       {"live_count", e.live_count},
       {"agreed_count", e.agreed_count},
       {"common_count", e.common_count},
       {"undefined_count", e.undefined_count},
       {"bit_counts", {e.bit_counts[0], e.bit_counts[1]}},
       {"rate", e.rate},
       {"confidence", e.confidence},
       {"interval", e.interval},
       {"bound", e.bound},
       {"vacuous", e.vacuous},
       {"pass", e.pass},
       {"max_latency", e.max_latency}};
}

void to_json(nlohmann::json& j, const AuditResult& a) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : a.terms) {
    terms.push_back({{"name", t.name}, {"measured", t.measured}, {"cap", t.cap}, {"pass", t.pass}});
  }
  j = {{"pass", a.pass},
       {"failed_term", a.failed_term.empty() ? nlohmann::json(nullptr) : nlohmann::json(a.failed_term)},
       {"terms", terms},
       {"byzantine_messages", a.byzantine_messages}};
}

void to_json(nlohmann::json& j, const TrialOutcome& t) {
  j = {{"seed", t.seed},
       {"live", t.live},
       {"agreed", t.agreed},
       {"defined", t.defined},
       {"common", t.common},
       {"value", t.value ? nlohmann::json(*t.value) : nlohmann::json(nullptr)},
       {"latency", t.latency},
       {"msgs_by_class", t.msgs_by_class}};
}

std::string format_table(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::size_t width = 0;
  for (const auto& [k, v] : rows) width = std::max(width, k.size());
  std::ostringstream out;
  for (const auto& [k, v] : rows) out << std::left << std::setw(static_cast<int>(width) + 2) << k << v << '\n';
  return out.str();
}

namespace {
std::string num(double x) {
  std::ostringstream o;
  o << std::setprecision(6) << x;
  return o.str();
}
}  // namespace

std::string fairness_table(const FairnessEstimate& e) {
  return format_table({
      {"trials", std::to_string(e.trials)},
      {"live", std::to_string(e.live_count)},
      {"agreed", std::to_string(e.agreed_count)},
      {"common uniform", std::to_string(e.common_count)},
      {"undefined b*", std::to_string(e.undefined_count)},
      {"bits 0/1", std::to_string(e.bit_counts[0]) + " / " + std::to_string(e.bit_counts[1])},
      {"rate", num(e.rate)},
      {"wilson " + num(e.confidence * 100) + "%", "[" + num(e.interval.lo) + ", " + num(e.interval.hi) + "]"},
      {"bound", num(e.bound) + (e.vacuous ? " (vacuous)" : "")},
      {"max latency", num(e.max_latency)},
      {"result", e.pass ? "pass" : "FAIL"},
  });
}

std::string audit_table(const AuditResult& a) {
  std::vector<std::pair<std::string, std::string>> rows;
  for (const auto& t : a.terms) {
    rows.emplace_back(t.name, num(t.measured) + " <= " + num(t.cap) + (t.pass ? "" : "  FAIL"));
  }
  rows.emplace_back("byzantine msgs", std::to_string(a.byzantine_messages));
  rows.emplace_back("result", a.pass ? "pass" : "FAIL (" + a.failed_term + ")");
  return format_table(rows);
}

std::string trials_csv(const std::vector<TrialOutcome>& rows) {
  std::ostringstream out;
  out << "seed,live,agreed,defined,common,bit,latency,msgs_1bit,msgs_tagged,msgs_opaque\n";
  auto get = [](const std::map<std::string, std::uint64_t>& m, const char* k) {
    auto it = m.find(k);
    return it == m.end() ? std::uint64_t{0} : it->second;
  };
  for (const auto& r : rows) {
    out << r.seed << ',' << r.live << ',' << r.agreed << ',' << r.defined << ',' << r.common << ',';
    if (r.value) out << *r.value;
    out << ',' << std::setprecision(10) << r.latency << ',' << get(r.msgs_by_class, "1-bit") << ','
        << get(r.msgs_by_class, "tagged") << ',' << get(r.msgs_by_class, "opaque") << '\n';
  }
  return out.str();
}

}  // namespace coinforge
