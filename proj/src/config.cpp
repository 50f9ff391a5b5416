#include "coinforge/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace coinforge {

VerifyMode parse_verify_mode(const std::string& text) {
  if (text == "exhaustive") return VerifyMode::exhaustive();
  if (text == "none") return VerifyMode::none();
  const std::string prefix = "sampled:";
  if (text.rfind(prefix, 0) == 0) {
    try {
      const auto trials = std::stoull(text.substr(prefix.size()));
      if (trials > 0) return VerifyMode::sampled(trials);
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("verify must be exhaustive, none or sampled:<trials>, got '" + text + "'");
}

namespace {

const std::set<std::string> kKeys = {
    "n",       "t",        "z",           "k",        "epsilon",    "alpha",
    "delta",   "R",        "overrides",   "strategy", "protocol",   "coin",
    "t_local", "ell",      "trials",      "confidence", "seed",     "full_information",
    "verify",  "delays",   "inputs",      "corruptions", "layout",  "out",
    "csv",     "events"};

const std::set<std::string> kStrategyKeys = {"name", "seed", "committees", "limit", "fraction"};

template <typename T>
void read(const nlohmann::json& j, const char* key, T& slot) {
  if (j.contains(key) && !j.at(key).is_null()) slot = j.at(key).get<T>();
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, std::optional<T>& slot) {
  if (j.contains(key) && !j.at(key).is_null()) slot = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.count(key)) throw ConfigError("unknown config key: " + key);
  }
  try {
    CoinParams p = c.params;
    from_json(j, p);
    c.params = p;
    if (j.contains("strategy")) {
      const auto& s = j.at("strategy");
      if (s.is_string()) {
        c.strategy.name = s.get<std::string>();
      } else {
        for (const auto& [key, value] : s.items()) {
          if (!kStrategyKeys.count(key)) throw ConfigError("unknown strategy key: " + key);
        }
        read(s, "name", c.strategy.name);
        read(s, "seed", c.strategy.seed);
        read(s, "committees", c.strategy.committees);
        read_opt(s, "limit", c.strategy.limit);
        read(s, "fraction", c.strategy.fraction);
      }
    }
    read(j, "protocol", c.protocol);
    read(j, "coin", c.coin);
    read_opt(j, "t_local", c.t_local);
    read(j, "ell", c.ell);
    read(j, "trials", c.trials);
    read(j, "confidence", c.confidence);
    read(j, "seed", c.seed);
    read(j, "full_information", c.full_information);
    read(j, "verify", c.verify);
    read(j, "delays", c.delays);
    read(j, "inputs", c.inputs);
    read(j, "corruptions", c.corruptions);
    read_opt(j, "layout", c.layout);
    read_opt(j, "out", c.out);
    read_opt(j, "csv", c.csv);
    read_opt(j, "events", c.events);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (c.protocol != "transform" && c.protocol != "strong") {
    throw ConfigError("protocol must be transform or strong");
  }
  if (c.coin != "ideal" && c.coin != "benor") throw ConfigError("coin must be ideal or benor");
  if (!(c.confidence > 0.0 && c.confidence < 1.0)) throw ConfigError("confidence must lie in (0, 1)");
  if (c.ell < 1 || c.ell > 64) throw ConfigError("ell must lie in [1, 64]");
  parse_verify_mode(c.verify);
  return c;
}

nlohmann::json config_to_json(const ExperimentConfig& c, bool include_paths) {
  nlohmann::json j = c.params;
  nlohmann::json s = {{"name", c.strategy.name},
                      {"seed", c.strategy.seed},
                      {"committees", c.strategy.committees},
                      {"fraction", c.strategy.fraction}};
  s["limit"] = c.strategy.limit ? nlohmann::json(*c.strategy.limit) : nlohmann::json(nullptr);
  j["strategy"] = s;
  j["protocol"] = c.protocol;
  j["coin"] = c.coin;
  j["t_local"] = c.t_local ? nlohmann::json(*c.t_local) : nlohmann::json(nullptr);
  j["ell"] = c.ell;
  j["trials"] = c.trials;
  j["confidence"] = c.confidence;
  j["seed"] = c.seed;
  j["full_information"] = c.full_information;
  j["verify"] = c.verify;
  j["delays"] = c.delays;
  j["inputs"] = c.inputs;
  j["corruptions"] = c.corruptions;
  if (include_paths) {
    if (c.layout) j["layout"] = *c.layout;
    if (c.out) j["out"] = *c.out;
    if (c.csv) j["csv"] = *c.csv;
    if (c.events) j["events"] = *c.events;
  }
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file is not valid JSON: " + path);
  }
  return config_from_json(j);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_digest(const ExperimentConfig& c) {
  nlohmann::json j = config_to_json(c, false);
  // The layout path names an input, so its contents matter, not its name;
  // callers that load a layout fold its digest in separately.
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

}  // namespace coinforge
