#include "coinforge/params.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>

namespace coinforge {

namespace {

constexpr double kSnapTolerance = 1e-12;

[[noreturn]] void fail(ParamErrc code, const std::string& detail) {
  throw ParamError(code, std::string(to_string(code)) + ": " + detail);
}

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

double parse_double(std::string_view text) {
  // from_chars for double is available in libstdc++ 11.
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    fail(ParamErrc::kBadPolynomial, "cannot parse number '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

std::string_view to_string(ParamErrc code) {
  switch (code) {
    case ParamErrc::kNonPositiveN: return "n must be at least 1";
    case ParamErrc::kNegativeT: return "t must be non-negative";
    case ParamErrc::kEpsilonNotPositive: return "epsilon must be positive";
    case ParamErrc::kEpsilonNotBelowAlpha: return "epsilon must be below alpha";
    case ParamErrc::kAlphaAboveThird: return "alpha must not exceed 1/3";
    case ParamErrc::kKBelowTwo: return "k must be at least 2";
    case ParamErrc::kZNotPositive: return "z must be positive";
    case ParamErrc::kDeltaOutOfRange: return "delta must lie in [0, 1]";
    case ParamErrc::kRNotPositive: return "R must be positive";
    case ParamErrc::kBudgetAboveTolerance: return "t exceeds (alpha - epsilon) * n";
    case ParamErrc::kBadOverride: return "invalid override";
    case ParamErrc::kBadPolynomial: return "invalid cost polynomial";
    case ParamErrc::kCommitteeWouldReachN: return "committee size would reach n";
  }
  return "unknown parameter error";
}

std::int64_t snapped_ceil(double x) {
  const double r = std::nearbyint(x);
  if (std::fabs(x - r) <= kSnapTolerance * std::max(1.0, std::fabs(x))) {
    return static_cast<std::int64_t>(r);
  }
  return static_cast<std::int64_t>(std::ceil(x));
}

namespace {

// Least m with m^den >= n^num.
std::int64_t exact_ceil_root(std::int64_t n, unsigned num, unsigned den) {
  namespace mp = boost::multiprecision;
  const mp::cpp_int target = mp::pow(mp::cpp_int(n), num);
  auto m = static_cast<std::int64_t>(
      std::ceil(std::pow(static_cast<double>(n), static_cast<double>(num) / den)));
  while (m > 0 && mp::pow(mp::cpp_int(m - 1), den) >= target) --m;
  while (mp::pow(mp::cpp_int(m), den) < target) ++m;
  return m;
}

// ceil(n^(2 - 2/k)). Exponents that are fractions with a small denominator
// (every integer k, k = 5/2, ...) are settled exactly; for any other k the
// power is not an integer and the double ceiling stands.
std::int64_t committee_count_root(std::int64_t n, double k) {
  const double e = 2.0 - 2.0 / k;
  for (unsigned den = 1; den <= 64; ++den) {
    const double num = std::nearbyint(e * den);
    if (std::fabs(e - num / den) <= 1e-14) return exact_ceil_root(n, static_cast<unsigned>(num), den);
  }
  return static_cast<std::int64_t>(std::ceil(std::pow(static_cast<double>(n), e)));
}

}  // namespace

std::int64_t snapped_floor(double x) {
  const double r = std::nearbyint(x);
  if (std::fabs(x - r) <= kSnapTolerance * std::max(1.0, std::fabs(x))) {
    return static_cast<std::int64_t>(r);
  }
  return static_cast<std::int64_t>(std::floor(x));
}

void validate(const CoinParams& p) {
  if (p.n < 1) fail(ParamErrc::kNonPositiveN, "n = " + std::to_string(p.n));
  if (p.t < 0) fail(ParamErrc::kNegativeT, "t = " + std::to_string(p.t));
  if (!(p.epsilon > 0.0)) fail(ParamErrc::kEpsilonNotPositive, "epsilon = " + num(p.epsilon));
  if (!(p.epsilon < p.alpha)) {
    fail(ParamErrc::kEpsilonNotBelowAlpha,
         "epsilon = " + num(p.epsilon) + ", alpha = " + num(p.alpha));
  }
  if (p.alpha > 1.0 / 3.0) fail(ParamErrc::kAlphaAboveThird, "alpha = " + num(p.alpha));
  if (!(p.k >= 2.0)) fail(ParamErrc::kKBelowTwo, "k = " + num(p.k));
  if (!(p.z > 0.0)) fail(ParamErrc::kZNotPositive, "z = " + num(p.z));
  if (!(p.delta >= 0.0 && p.delta <= 1.0)) fail(ParamErrc::kDeltaOutOfRange, "delta = " + num(p.delta));
  if (!(p.R > 0.0)) fail(ParamErrc::kRNotPositive, "R = " + num(p.R));
}

std::int64_t max_corruptions(const CoinParams& p) {
  return snapped_floor((p.alpha - p.epsilon) * static_cast<double>(p.n));
}

void validate_for_simulation(const CoinParams& p) {
  validate(p);
  if (p.t > max_corruptions(p)) {
    fail(ParamErrc::kBudgetAboveTolerance,
         "t = " + std::to_string(p.t) + ", limit = " + std::to_string(max_corruptions(p)));
  }
}

std::int64_t bad_member_threshold(double alpha, std::int64_t s) {
  return snapped_ceil(alpha * static_cast<double>(s));
}

DerivedParams derive_params(const CoinParams& p) {
  validate(p);
  const Overrides& o = p.overrides;
  const double n = static_cast<double>(p.n);

  DerivedParams dp;
  dp.n = p.n;
  dp.overridden = o.any();

  if (o.q) {
    if (*o.q < 1 || *o.q % 2 == 0) {
      fail(ParamErrc::kBadOverride, "q must be a positive odd integer, got " + std::to_string(*o.q));
    }
    dp.q = *o.q;
  } else {
    dp.q = 2 * committee_count_root(p.n, p.k) + 1;
  }
  const double q = static_cast<double>(dp.q);
  const double sqrt_q = std::sqrt(q);

  dp.z_prime = std::max(p.z / 3.0, p.z - 1.6 / sqrt_q);

  if (o.c) {
    if (*o.c < 1 || *o.c > dp.q) {
      fail(ParamErrc::kBadOverride, "c must lie in [1, q], got " + std::to_string(*o.c));
    }
    dp.c = *o.c;
  } else {
    dp.c = snapped_ceil(dp.z_prime * sqrt_q / 3.0);
  }

  if (o.s) {
    if (*o.s < 1 || *o.s > p.n) {
      fail(ParamErrc::kBadOverride, "s must lie in [1, n], got " + std::to_string(*o.s));
    }
    dp.s = *o.s;
  } else {
    const double factor = (2.0 * p.alpha - p.epsilon) / (dp.z_prime * p.epsilon * p.epsilon);
    const double size =
        factor * (n * std::log(2.0) / static_cast<double>(dp.c) + std::log(q));
    dp.s = size >= n ? p.n : std::min(p.n, snapped_ceil(size));
  }

  if (o.d) {
    if (*o.d < 1) fail(ParamErrc::kBadOverride, "d must be at least 1, got " + std::to_string(*o.d));
    dp.d = *o.d;
  } else {
    const double slack = 1.0 - 3.0 * p.alpha + 3.0 * p.epsilon;
    dp.d = std::max<std::int64_t>(1, snapped_ceil(dp.z_prime * n * slack / (36.0 * sqrt_q)));
  }

  const double s = static_cast<double>(dp.s);
  if (o.delta_cap) {
    if (*o.delta_cap < 1 || *o.delta_cap > dp.s) {
      fail(ParamErrc::kBadOverride,
           "delta_cap must lie in [1, s], got " + std::to_string(*o.delta_cap));
    }
    dp.delta_cap = *o.delta_cap;
  } else {
    const std::int64_t two_thirds = (2 * dp.s + 2) / 3;
    const double sparse = 30.0 * (s * std::log(2.0) / static_cast<double>(dp.d) + std::log(n));
    dp.delta_cap = sparse >= static_cast<double>(two_thirds)
                       ? two_thirds
                       : std::min(two_thirds, snapped_ceil(sparse));
  }

  dp.live_threshold = dp.q - snapped_floor(5.0 * dp.z_prime * sqrt_q / 12.0);
  dp.output_threshold = (2 * p.n) / 3 + 1;
  return dp;
}

// ---------------------------------------------------------------------------

double Polynomial::operator()(double x) const {
  double total = 0.0;
  const double lg = x > 0.0 ? std::log2(x) : 0.0;
  for (const PolyTerm& term : terms) {
    if (term.coefficient == 0.0) continue;
    total += term.coefficient * std::pow(x, term.exponent) * std::pow(lg, term.log_power);
  }
  return total;
}

Polynomial Polynomial::parse(std::string_view text) {
  Polynomial poly;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view item = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);

    std::vector<std::string_view> fields;
    std::string_view rest = item;
    while (true) {
      const auto colon = rest.find(':');
      fields.push_back(rest.substr(0, colon));
      if (colon == std::string_view::npos) break;
      rest = rest.substr(colon + 1);
    }
    if (fields.empty() || fields.size() > 3) {
      fail(ParamErrc::kBadPolynomial, "term '" + std::string(item) + "' is not c[:e[:l]]");
    }
    PolyTerm term;
    term.coefficient = parse_double(fields[0]);
    if (fields.size() > 1) term.exponent = parse_double(fields[1]);
    if (fields.size() > 2) term.log_power = static_cast<int>(parse_double(fields[2]));
    poly.terms.push_back(term);
  }
  return poly;
}

std::string Polynomial::to_string() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i) os << ',';
    os << terms[i].coefficient << ':' << terms[i].exponent << ':' << terms[i].log_power;
  }
  return os.str();
}

const CostTerm& CostReport::dominant() const {
  if (breakdown.empty()) throw std::logic_error("empty cost breakdown");
  return *std::max_element(breakdown.begin(), breakdown.end(),
                           [](const CostTerm& a, const CostTerm& b) { return a.bits() < b.bits(); });
}

CostReport theorem1_cost(const CoinParams& p, const Polynomial& messages,
                         const Polynomial& message_bits) {
  CostReport report;
  report.params = p;
  report.derived = derive_params(p);
  const DerivedParams& dp = report.derived;

  const double n = static_cast<double>(p.n);
  const double s = static_cast<double>(dp.s);
  const double q = static_cast<double>(dp.q);

  const double coin_msgs = messages(s);
  const double coin_bits = message_bits(s);
  if (coin_msgs < 0.0 || !std::isfinite(coin_msgs)) {
    fail(ParamErrc::kBadPolynomial, "M(s) = " + num(coin_msgs));
  }
  if (!(coin_bits > 0.0) || !std::isfinite(coin_bits)) {
    fail(ParamErrc::kBadPolynomial, "L(s) = " + num(coin_bits));
  }

  const double tag_bits = std::ceil(std::log2(q));
  const double small_msg_bits = tag_bits + 2.0;

  report.strongcoin_messages = q * coin_msgs;
  report.strongcoin_payload_bits = coin_bits;
  report.strongcoin_msg_size = coin_bits + tag_bits;

  const double slack = 1.0 - 3.0 * p.alpha + 3.0 * p.epsilon;
  const double fanout = s * std::pow(n, 3.0 - 3.0 / p.k) / (p.z * slack);
  const double crusader = std::pow(n, 2.0 - 2.0 / p.k) * (s * s + n * std::log2(n));
  const double broadcast = n * n;

  report.publish_messages = fanout + crusader;
  report.broadcast_messages = broadcast;
  report.latency_bound = p.R + 5.0;

  report.breakdown = {
      {"strong_coin", report.strongcoin_messages, report.strongcoin_msg_size},
      {"publish_fanout", fanout, small_msg_bits},
      {"publish_crusader", crusader, small_msg_bits},
      {"majority_broadcast", broadcast, 1.0},
  };
  for (const CostTerm& term : report.breakdown) report.total_bits += term.bits();
  return report;
}

std::string_view to_string(CostVariant v) {
  return v == CostVariant::kPerfect ? "perfect" : "crypto";
}

CostVariant parse_cost_variant(std::string_view text) {
  if (text == "perfect") return CostVariant::kPerfect;
  if (text == "crypto") return CostVariant::kCrypto;
  throw std::invalid_argument("unknown variant '" + std::string(text) + "' (perfect|crypto)");
}

CostReport instantiate_section6(CostVariant variant, std::int64_t n, double epsilon,
                                double delta_prime, double kappa) {
  if (n < 1) fail(ParamErrc::kNonPositiveN, "n = " + std::to_string(n));
  if (!(delta_prime < 1.0 - 1.0 / static_cast<double>(n))) {
    fail(ParamErrc::kCommitteeWouldReachN,
         "delta' = " + num(delta_prime) + " is not below 1 - 1/n = " +
             num(1.0 - 1.0 / static_cast<double>(n)));
  }

  CoinParams p;
  p.n = n;
  p.epsilon = epsilon;
  p.z = (1.0 - delta_prime) / 2.0;

  Polynomial messages;
  Polynomial bits;
  if (variant == CostVariant::kPerfect) {
    p.k = 4.0;
    p.alpha = 0.25;
    messages = Polynomial::monomial(4.0);
    bits = Polynomial::monomial(0.0, 1);
  } else {
    p.k = 3.0;
    p.alpha = 1.0 / 3.0;
    messages = Polynomial::monomial(3.0, 1);
    bits = Polynomial::constant(kappa);
  }
  const auto q = static_cast<double>(derive_params(p).q);
  p.delta = 1.0 - (1.0 - delta_prime) / (2.0 * q);
  // The strong coins behind both variants need Theta(log n) rounds.
  p.R = std::max(1.0, std::ceil(std::log2(static_cast<double>(n))));
  p.t = max_corruptions(p);
  return theorem1_cost(p, messages, bits);
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const Overrides& o) {
  j = nlohmann::json::object();
  if (o.q) j["q"] = *o.q;
  if (o.c) j["c"] = *o.c;
  if (o.s) j["s"] = *o.s;
  if (o.d) j["d"] = *o.d;
  if (o.delta_cap) j["delta_cap"] = *o.delta_cap;
}

void from_json(const nlohmann::json& j, Overrides& o) {
  auto read = [&](const char* key, std::optional<std::int64_t>& slot) {
    if (j.contains(key) && !j.at(key).is_null()) slot = j.at(key).get<std::int64_t>();
  };
  read("q", o.q);
  read("c", o.c);
  read("s", o.s);
  read("d", o.d);
  read("delta_cap", o.delta_cap);
}

void to_json(nlohmann::json& j, const CoinParams& p) {
  j = nlohmann::json{{"n", p.n},         {"t", p.t},         {"z", p.z},
                     {"k", p.k},         {"epsilon", p.epsilon}, {"alpha", p.alpha},
                     {"delta", p.delta}, {"R", p.R}};
  if (p.overrides.any()) j["overrides"] = p.overrides;
}

void from_json(const nlohmann::json& j, CoinParams& p) {
  if (j.contains("n")) p.n = j.at("n").get<std::int64_t>();
  if (j.contains("t")) p.t = j.at("t").get<std::int64_t>();
  if (j.contains("z")) p.z = j.at("z").get<double>();
  if (j.contains("k")) p.k = j.at("k").get<double>();
  if (j.contains("epsilon")) p.epsilon = j.at("epsilon").get<double>();
  if (j.contains("alpha")) p.alpha = j.at("alpha").get<double>();
  if (j.contains("delta")) p.delta = j.at("delta").get<double>();
  if (j.contains("R")) p.R = j.at("R").get<double>();
  if (j.contains("overrides")) p.overrides = j.at("overrides").get<Overrides>();
}

void to_json(nlohmann::json& j, const DerivedParams& d) {
  j = nlohmann::json{{"n", d.n},
                     {"q", d.q},
                     {"z_prime", d.z_prime},
                     {"c", d.c},
                     {"s", d.s},
                     {"d", d.d},
                     {"delta_cap", d.delta_cap},
                     {"live_threshold", d.live_threshold},
                     {"output_threshold", d.output_threshold},
                     {"overridden", d.overridden}};
}

void to_json(nlohmann::json& j, const CostReport& r) {
  nlohmann::json terms = nlohmann::json::array();
  for (const CostTerm& t : r.breakdown) {
    terms.push_back({{"name", t.name},
                     {"messages", t.messages},
                     {"bits_per_message", t.bits_per_message},
                     {"bits", t.bits()}});
  }
  j = nlohmann::json{{"params", r.params},
                     {"derived", r.derived},
                     {"strongcoin_messages", r.strongcoin_messages},
                     {"strongcoin_msg_size", r.strongcoin_msg_size},
                     {"strongcoin_payload_bits", r.strongcoin_payload_bits},
                     {"publish_messages", r.publish_messages},
                     {"broadcast_messages", r.broadcast_messages},
                     {"total_bits", r.total_bits},
                     {"latency_bound", r.latency_bound},
                     {"dominant_term", r.dominant().name},
                     {"breakdown", terms}};
}

}  // namespace coinforge
