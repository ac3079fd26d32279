#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "distributions.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "loss_model.hpp"
#include "scenario.hpp"

// Configuration file, schema version 1. Every key except "version" is optional
// and defaults to the values below; unknown keys are rejected.
//
//   {
//     "version": 1,
//     "seed": 42,
//     "portfolio_size": 1000,
//     "repetitions": 100000,
//     "loading": 0.1,
//     "levels": ["guarded", "elevated", "high", "severe"],
//     "confidence_levels": [0.9, 0.95, 0.99],
//     "device": {"daily_loss": 1000, "discount_rate": 0.03, "horizon_days": 365,
//                "kill_rate": 0, "lambda_cluster": 0.5},
//     "scenario": {"minutes_per_year": 525600, "unrecorded_fraction": 0.5,
//                  "attack_window_minutes": 5, "population": 10000,
//                  "attacks_per_year_base": null,
//                  "levels": {"baseline": {"multiplier": 1, "mitigation_alpha": 1.0},
//                             "guarded":  {"multiplier": 1, "mitigation_alpha": 0.9},
//                             "elevated": {"multiplier": 2, "mitigation_alpha": 1.0},
//                             "high":     {"multiplier": 10, "mitigation_alpha": 1.0},
//                             "severe":   {"multiplier": 20, "mitigation_alpha": 1.0}}},
//     "aggregate_channel": null
//   }
//
// aggregate_channel, when present: {"event_rate": R, "severity": S} with S one of
//   {"family": "lognormal", "mu": M, "sigma": S}
//   {"family": "pareto", "x_min": X, "alpha": A}
//   {"family": "fixed", "value": V}
//   {"family": "discrete", "values": [...], "probabilities": [...]}
// A null attacks_per_year_base means theta = p * minutes_per_year.
namespace cyberrisk {

inline constexpr int kConfigVersion = 1;
inline constexpr double kDefaultLambdaCluster = 0.5;

namespace detail {

using json = nlohmann::json;

class ConfigReader {
public:
    explicit ConfigReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) fail("expected an object");
    }

    void allow(std::initializer_list<std::string_view> keys) const {
        std::set<std::string_view> known(keys);
        for (auto it = node_.begin(); it != node_.end(); ++it)
            if (!known.count(it.key())) throw ConfigError("unknown key '" + where(it.key()) + "'");
    }

    bool has(const char* key) const { return node_.contains(key) && !node_.at(key).is_null(); }

    double number(const char* key, double fallback) const {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_number()) throw ConfigError("'" + where(key) + "' must be a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError("'" + where(key) + "' must be finite");
        return x;
    }

    std::uint64_t unsigned_integer(const char* key, std::uint64_t fallback) const {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
            return static_cast<std::uint64_t>(v.get<std::int64_t>());
        throw ConfigError("'" + where(key) + "' must be a nonnegative integer");
    }

    ConfigReader child(const char* key) const { return ConfigReader(node_.at(key), where(key)); }

    const json& raw(const char* key) const { return node_.at(key); }

    std::string where(std::string_view key) const {
        return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    }

    [[noreturn]] void fail(const std::string& message) const {
        throw ConfigError((path_.empty() ? std::string("config") : path_) + ": " + message);
    }

private:
    const json& node_;
    std::string path_;
};

inline SeverityDistribution read_severity(const ConfigReader& r) {
    if (!r.has("family")) r.fail("missing 'family'");
    const json& fam = r.raw("family");
    if (!fam.is_string()) r.fail("'family' must be a string");
    const std::string family = fam.get<std::string>();
    SeverityDistribution out;
    if (family == "lognormal") {
        r.allow({"family", "mu", "sigma"});
        out = Lognormal{r.number("mu", 0.0), r.number("sigma", 1.0)};
    } else if (family == "pareto") {
        r.allow({"family", "x_min", "alpha"});
        out = Pareto{r.number("x_min", 1.0), r.number("alpha", 2.0)};
    } else if (family == "fixed") {
        r.allow({"family", "value"});
        out = Fixed{r.number("value", 0.0)};
    } else if (family == "discrete") {
        r.allow({"family", "values", "probabilities"});
        DiscreteTable t;
        for (const char* key : {"values", "probabilities"}) {
            if (!r.has(key) || !r.raw(key).is_array()) r.fail(std::string("'") + key + "' must be an array");
            auto& dst = std::string_view(key) == "values" ? t.values : t.probabilities;
            for (const auto& v : r.raw(key)) {
                if (!v.is_number()) r.fail(std::string("'") + key + "' must hold numbers");
                dst.push_back(v.get<double>());
            }
        }
        out = std::move(t);
    } else {
        r.fail("unknown severity family '" + family + "'");
    }
    try {
        validate(out);
    } catch (const DomainError& e) {
        r.fail(e.what());
    }
    return out;
}

inline json severity_to_json(const SeverityDistribution& dist) {
    return std::visit(
        [](const auto& d) -> json {
            using T = std::decay_t<decltype(d)>;
            json j = json::object();
            if constexpr (std::is_same_v<T, Lognormal>) {
                j["family"] = "lognormal";
                j["mu"] = d.mu;
                j["sigma"] = d.sigma;
            } else if constexpr (std::is_same_v<T, Pareto>) {
                j["family"] = "pareto";
                j["x_min"] = d.x_min;
                j["alpha"] = d.alpha;
            } else if constexpr (std::is_same_v<T, Fixed>) {
                j["family"] = "fixed";
                j["value"] = d.value;
            } else {
                j["family"] = "discrete";
                j["values"] = d.values;
                j["probabilities"] = d.probabilities;
            }
            return j;
        },
        dist);
}

} // namespace detail

// Defaults as written in the schema comment above.
inline SimulationSpec default_spec() {
    SimulationSpec spec;
    spec.device.counts.lambda_cluster = kDefaultLambdaCluster;
    spec.device.counts.theta = base_attack_intensity(spec.scenario);
    return spec;
}

inline SimulationSpec parse_config(const nlohmann::json& doc) {
    using detail::ConfigReader;
    const ConfigReader root(doc, "");
    root.allow({"version", "seed", "portfolio_size", "repetitions", "loading", "levels",
                "confidence_levels", "device", "scenario", "aggregate_channel"});
    if (!root.has("version")) throw ConfigError("missing mandatory key 'version'");
    if (!doc.at("version").is_number_integer() || doc.at("version").get<int>() != kConfigVersion)
        throw ConfigError("unsupported config version (expected " +
                          std::to_string(kConfigVersion) + ")");

    SimulationSpec spec = default_spec();
    spec.seed = root.unsigned_integer("seed", spec.seed);
    spec.portfolio_size = root.unsigned_integer("portfolio_size", spec.portfolio_size);
    spec.repetitions = root.unsigned_integer("repetitions", spec.repetitions);
    spec.loading = root.number("loading", spec.loading);

    if (root.has("levels")) {
        const auto& arr = doc.at("levels");
        if (!arr.is_array()) throw ConfigError("'levels' must be an array of level names");
        spec.levels.clear();
        for (const auto& v : arr) {
            const auto level = v.is_string() ? parse_level(v.get<std::string>()) : std::nullopt;
            if (!level) throw ConfigError("'levels' entry " + v.dump() + " is not a risk level");
            spec.levels.push_back(*level);
        }
    }
    if (root.has("confidence_levels")) {
        const auto& arr = doc.at("confidence_levels");
        if (!arr.is_array()) throw ConfigError("'confidence_levels' must be an array");
        spec.confidence_levels.clear();
        for (const auto& v : arr) {
            if (!v.is_number()) throw ConfigError("'confidence_levels' must hold numbers");
            spec.confidence_levels.push_back(v.get<double>());
        }
    }
    if (root.has("device")) {
        const ConfigReader d = root.child("device");
        d.allow({"daily_loss", "discount_rate", "horizon_days", "kill_rate", "lambda_cluster"});
        spec.device.daily_loss = d.number("daily_loss", spec.device.daily_loss);
        spec.device.discount_rate = d.number("discount_rate", spec.device.discount_rate);
        const std::uint64_t horizon = d.unsigned_integer("horizon_days", spec.device.horizon_days);
        if (horizon < 1 || horizon > std::numeric_limits<std::uint32_t>::max())
            throw ConfigError("'device.horizon_days' must lie in [1, 2^32)");
        spec.device.horizon_days = static_cast<std::uint32_t>(horizon);
        spec.device.kill_rate = d.number("kill_rate", spec.device.kill_rate);
        spec.device.counts.lambda_cluster =
            d.number("lambda_cluster", spec.device.counts.lambda_cluster);
    }
    if (root.has("scenario")) {
        const ConfigReader s = root.child("scenario");
        s.allow({"minutes_per_year", "unrecorded_fraction", "attack_window_minutes", "population",
                 "attacks_per_year_base", "levels"});
        auto& sc = spec.scenario;
        sc.minutes_per_year = s.unsigned_integer("minutes_per_year", sc.minutes_per_year);
        sc.unrecorded_fraction = s.number("unrecorded_fraction", sc.unrecorded_fraction);
        sc.attack_window_minutes = s.number("attack_window_minutes", sc.attack_window_minutes);
        sc.population = s.unsigned_integer("population", sc.population);
        if (s.has("attacks_per_year_base"))
            sc.attacks_per_year_base = s.number("attacks_per_year_base", 0.0);
        if (s.has("levels")) {
            const ConfigReader lv = s.child("levels");
            lv.allow({"baseline", "guarded", "elevated", "high", "severe"});
            for (RiskLevel level : kAllRiskLevels) {
                const std::string key(level_key(level));
                if (!lv.has(key.c_str())) continue;
                const ConfigReader entry = lv.child(key.c_str());
                entry.allow({"multiplier", "mitigation_alpha"});
                sc.intensity_multiplier[index_of(level)] =
                    entry.number("multiplier", sc.intensity_multiplier[index_of(level)]);
                sc.mitigation_alpha[index_of(level)] =
                    entry.number("mitigation_alpha", sc.mitigation_alpha[index_of(level)]);
            }
        }
        try {
            validate(sc);
        } catch (const DomainError& e) {
            throw ConfigError(std::string("scenario: ") + e.what());
        }
    }
    if (root.has("aggregate_channel")) {
        const ConfigReader a = root.child("aggregate_channel");
        a.allow({"event_rate", "severity"});
        AggregateLossParams agg;
        agg.event_rate = a.number("event_rate", 0.0);
        if (!a.has("severity")) a.fail("missing 'severity'");
        agg.severity = detail::read_severity(a.child("severity"));
        spec.aggregate_channel = std::move(agg);
    }
    spec.device.counts.theta = base_attack_intensity(spec.scenario);
    validate(spec);
    return spec;
}

inline SimulationSpec parse_config(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(doc);
}

// Throws InputError when the file cannot be read, ConfigError when it does
// not validate.
inline SimulationSpec load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(std::string_view{buf.str()});
}

inline nlohmann::ordered_json scenario_to_json(const ScenarioConfig& sc) {
    nlohmann::ordered_json s;
    s["minutes_per_year"] = sc.minutes_per_year;
    s["unrecorded_fraction"] = sc.unrecorded_fraction;
    s["attack_window_minutes"] = sc.attack_window_minutes;
    s["population"] = sc.population;
    s["attacks_per_year_base"] =
        sc.attacks_per_year_base ? nlohmann::ordered_json(*sc.attacks_per_year_base) : nullptr;
    nlohmann::ordered_json levels = nlohmann::ordered_json::object();
    for (RiskLevel level : kAllRiskLevels) {
        nlohmann::ordered_json e;
        e["multiplier"] = sc.intensity_multiplier[index_of(level)];
        e["mitigation_alpha"] = sc.mitigation_alpha[index_of(level)];
        levels[std::string(level_key(level))] = e;
    }
    s["levels"] = levels;
    return s;
}

// Canonical config document for a spec; parse_config(config_to_json(s)) == s.
inline nlohmann::ordered_json config_to_json(const SimulationSpec& spec) {
    nlohmann::ordered_json j;
    j["version"] = kConfigVersion;
    j["seed"] = spec.seed;
    j["portfolio_size"] = spec.portfolio_size;
    j["repetitions"] = spec.repetitions;
    j["loading"] = spec.loading;
    nlohmann::ordered_json levels = nlohmann::ordered_json::array();
    for (RiskLevel l : spec.levels) levels.push_back(std::string(level_key(l)));
    j["levels"] = levels;
    j["confidence_levels"] = spec.confidence_levels;
    nlohmann::ordered_json d;
    d["daily_loss"] = spec.device.daily_loss;
    d["discount_rate"] = spec.device.discount_rate;
    d["horizon_days"] = spec.device.horizon_days;
    d["kill_rate"] = spec.device.kill_rate;
    d["lambda_cluster"] = spec.device.counts.lambda_cluster;
    j["device"] = d;
    j["scenario"] = scenario_to_json(spec.scenario);
    if (spec.aggregate_channel) {
        nlohmann::ordered_json a;
        a["event_rate"] = spec.aggregate_channel->event_rate;
        a["severity"] = nlohmann::ordered_json::parse(
            detail::severity_to_json(spec.aggregate_channel->severity).dump());
        j["aggregate_channel"] = a;
    } else {
        j["aggregate_channel"] = nullptr;
    }
    return j;
}

} // namespace cyberrisk
