#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace coinforge {

enum class ParamErrc {
  kNonPositiveN,
  kNegativeT,
  kEpsilonNotPositive,
  kEpsilonNotBelowAlpha,
  kAlphaAboveThird,
  kKBelowTwo,
  kZNotPositive,
  kDeltaOutOfRange,
  kRNotPositive,
  kBudgetAboveTolerance,
  kBadOverride,
  kBadPolynomial,
  kCommitteeWouldReachN,
};

std::string_view to_string(ParamErrc code);

class ParamError : public std::invalid_argument {
 public:
  ParamError(ParamErrc code, const std::string& what)
      : std::invalid_argument(what), code_(code) {}
  ParamErrc code() const noexcept { return code_; }

 private:
  ParamErrc code_;
};

/// Values that replace the derived committee parameters.
struct Overrides {
  std::optional<std::int64_t> q;
  std::optional<std::int64_t> c;
  std::optional<std::int64_t> s;
  std::optional<std::int64_t> d;
  std::optional<std::int64_t> delta_cap;

  bool any() const { return q || c || s || d || delta_cap; }
};

struct CoinParams {
  std::int64_t n = 1;
  std::int64_t t = 0;
  double z = 0.1;
  double k = 2.0;
  double epsilon = 0.05;
  double alpha = 1.0 / 3.0;
  double delta = 1.0;
  double R = 1.0;
  Overrides overrides;
};

struct DerivedParams {
  std::int64_t n = 0;
  std::int64_t q = 0;
  double z_prime = 0.0;
  std::int64_t c = 0;
  std::int64_t s = 0;
  std::int64_t d = 0;
  std::int64_t delta_cap = 0;
  std::int64_t live_threshold = 0;
  std::int64_t output_threshold = 0;
  bool overridden = false;

  friend bool operator==(const DerivedParams&, const DerivedParams&) = default;
};

// binary64; a result within a relative 1e-12 of an integer is treated as
// that integer before the ceiling/floor (27^(4/3), 0.25 * 16).
std::int64_t snapped_ceil(double x);
std::int64_t snapped_floor(double x);

/// Rejects inputs outside 0 < epsilon < alpha <= 1/3, k >= 2, z > 0, n >= 1.
void validate(const CoinParams& p);

/// Additionally requires t <= (alpha - epsilon) * n.
void validate_for_simulation(const CoinParams& p);

/// The initialization block of the transformation; overrides, when present,
/// replace the corresponding values and mark the result as overridden.
DerivedParams derive_params(const CoinParams& p);

/// Number of committee members the adversary must hold for a committee to be
/// bad: the least integer m with m >= alpha * s.
std::int64_t bad_member_threshold(double alpha, std::int64_t s);

/// floor((alpha - epsilon) * n), the largest corruption set the layout must
/// withstand.
std::int64_t max_corruptions(const CoinParams& p);

// ---------------------------------------------------------------------------
// Cost accounting

/// coefficient * x^exponent * (log2 x)^log_power
struct PolyTerm {
  double coefficient = 1.0;
  double exponent = 0.0;
  int log_power = 0;
};

struct Polynomial {
  std::vector<PolyTerm> terms;

  double operator()(double x) const;

  static Polynomial monomial(double exponent, int log_power = 0, double coefficient = 1.0) {
    return Polynomial{{PolyTerm{coefficient, exponent, log_power}}};
  }
  static Polynomial constant(double value) { return monomial(0.0, 0, value); }

  /// Parses "c:e:l,c:e:l" triples, e.g. "1:3:1" for x^3 log x.
  static Polynomial parse(std::string_view text);
  std::string to_string() const;
};

struct CostTerm {
  std::string name;
  double messages = 0.0;
  double bits_per_message = 0.0;
  double bits() const { return messages * bits_per_message; }
};

struct CostReport {
  CoinParams params;
  DerivedParams derived;
  double strongcoin_messages = 0.0;
  double strongcoin_msg_size = 0.0;
  double strongcoin_payload_bits = 0.0;
  double publish_messages = 0.0;
  double broadcast_messages = 0.0;
  double total_bits = 0.0;
  double latency_bound = 0.0;
  std::vector<CostTerm> breakdown;

  /// Breakdown term carrying the most bits.
  const CostTerm& dominant() const;
};

CostReport theorem1_cost(const CoinParams& p, const Polynomial& messages,
                         const Polynomial& message_bits);

enum class CostVariant { kPerfect, kCrypto };

std::string_view to_string(CostVariant v);
CostVariant parse_cost_variant(std::string_view text);

/// Cost of the two concrete instantiations: perfect (k=4, alpha=1/4,
/// M=x^4, L=log x) and crypto (k=3, alpha=1/3, M=x^3 log x, L=kappa), with
/// z = (1 - delta')/2 and delta = 1 - (1 - delta')/(2q).
CostReport instantiate_section6(CostVariant variant, std::int64_t n, double epsilon,
                                double delta_prime, double kappa);

// ---------------------------------------------------------------------------
// JSON

void to_json(nlohmann::json& j, const Overrides& o);
void from_json(const nlohmann::json& j, Overrides& o);
void to_json(nlohmann::json& j, const CoinParams& p);
void from_json(const nlohmann::json& j, CoinParams& p);
void to_json(nlohmann::json& j, const DerivedParams& d);
void to_json(nlohmann::json& j, const CostReport& r);

}  // namespace coinforge
