#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "loss_model.hpp"

namespace cyberrisk {

// Traffic-light scenario tiers, ordered by intensity multiplier.
enum class RiskLevel : std::uint8_t { Baseline = 0, Guarded = 1, Elevated = 2, High = 3, Severe = 4 };

inline constexpr std::array<RiskLevel, 5> kAllRiskLevels = {
    RiskLevel::Baseline, RiskLevel::Guarded, RiskLevel::Elevated, RiskLevel::High,
    RiskLevel::Severe};

inline constexpr std::size_t index_of(RiskLevel level) noexcept {
    return static_cast<std::size_t>(level);
}

inline std::string_view level_key(RiskLevel level) noexcept {
    constexpr std::array<std::string_view, 5> keys = {"baseline", "guarded", "elevated", "high",
                                                      "severe"};
    return keys[index_of(level)];
}

inline std::string_view level_label(RiskLevel level) noexcept {
    constexpr std::array<std::string_view, 5> labels = {
        "Baseline", "Guarded (Green)", "Elevated (Yellow)", "High (Amber)", "Severe (Red)"};
    return labels[index_of(level)];
}

inline std::optional<RiskLevel> parse_level(std::string_view key) noexcept {
    for (RiskLevel l : kAllRiskLevels)
        if (level_key(l) == key) return l;
    return std::nullopt;
}

// Calibration inputs behind the level table. The attacked proportion p comes
// from the minutes-of-exposure chain (see baseline_proportion); the per-device
// cluster intensity defaults to p * minutes_per_year, i.e. one Bernoulli(p)
// attack opportunity per minute, Poissonized.
struct ScenarioConfig {
    std::uint64_t minutes_per_year = 525600;
    double unrecorded_fraction = 0.5;
    double attack_window_minutes = 5.0;
    std::uint64_t population = 10000;
    std::optional<double> attacks_per_year_base;  // overrides the p-derived theta
    std::array<double, 5> intensity_multiplier = {1.0, 1.0, 2.0, 10.0, 20.0};
    std::array<double, 5> mitigation_alpha = {1.0, 0.9, 1.0, 1.0, 1.0};
};

// Intermediates of the attacked-proportion chain:
//   exposed minutes   = minutes_per_year * unrecorded_fraction
//   attacked slots    = exposed / attack_window
//   attacked fraction = slots / exposed               (p1)
//   p                 = attacked fraction / population
struct ProportionChain {
    double exposed_minutes = 0.0;
    double attacked_slots = 0.0;
    double attacked_fraction = 0.0;
    double proportion = 0.0;
};

inline ProportionChain proportion_chain(std::uint64_t minutes_per_year, double unrecorded_fraction,
                                        double attack_window_minutes, std::uint64_t population) {
    if (minutes_per_year == 0) throw DomainError("minutes per year must be positive");
    if (!(unrecorded_fraction > 0.0 && unrecorded_fraction <= 1.0))
        throw DomainError("unrecorded fraction must lie in (0, 1]");
    if (!(attack_window_minutes > 0.0) || !std::isfinite(attack_window_minutes))
        throw DomainError("attack window must be positive");
    if (population == 0) throw DomainError("population must be positive");
    ProportionChain c;
    c.exposed_minutes = static_cast<double>(minutes_per_year) * unrecorded_fraction;
    c.attacked_slots = c.exposed_minutes / attack_window_minutes;
    c.attacked_fraction = c.attacked_slots / c.exposed_minutes;
    c.proportion = c.attacked_fraction / static_cast<double>(population);
    return c;
}

inline double baseline_proportion(std::uint64_t minutes_per_year, double unrecorded_fraction,
                                  double attack_window_minutes, std::uint64_t population) {
    return proportion_chain(minutes_per_year, unrecorded_fraction, attack_window_minutes,
                            population)
        .proportion;
}

inline void validate(const ScenarioConfig& c) {
    (void)proportion_chain(c.minutes_per_year, c.unrecorded_fraction, c.attack_window_minutes,
                           c.population);
    if (c.attacks_per_year_base && (!(*c.attacks_per_year_base > 0.0) ||
                                    !std::isfinite(*c.attacks_per_year_base)))
        throw DomainError("attacks_per_year_base must be positive");
    for (std::size_t i = 0; i < 5; ++i) {
        if (!(c.intensity_multiplier[i] > 0.0) || !std::isfinite(c.intensity_multiplier[i]))
            throw DomainError("intensity multipliers must be positive");
        if (!(c.mitigation_alpha[i] > 0.0 && c.mitigation_alpha[i] <= 1.0))
            throw DomainError("mitigation alpha must lie in (0, 1]");
        if (i > 0 && c.intensity_multiplier[i] < c.intensity_multiplier[i - 1])
            throw DomainError("intensity multipliers must be nondecreasing from baseline to "
                              "severe");
    }
}

inline double scenario_proportion(const ScenarioConfig& c) {
    return baseline_proportion(c.minutes_per_year, c.unrecorded_fraction,
                               c.attack_window_minutes, c.population);
}

// Per-device cluster intensity theta at the Baseline level.
inline double base_attack_intensity(const ScenarioConfig& c) {
    if (c.attacks_per_year_base) return *c.attacks_per_year_base;
    return scenario_proportion(c) * static_cast<double>(c.minutes_per_year);
}

// Poisson thinning: keeping each event with probability `proportion` turns a
// Poisson(total_rate) stream into Poisson(proportion * total_rate).
inline double thin_intensity(double total_rate, double proportion) {
    if (!(total_rate >= 0.0)) throw DomainError("rate must be nonnegative");
    if (!(proportion >= 0.0 && proportion <= 1.0))
        throw DomainError("thinning proportion must lie in [0, 1]");
    return proportion * total_rate;
}

// Splits a total rate into sub-rates proportional to `weights`. The last
// positively weighted component absorbs rounding so that summing the result
// left to right reproduces total_rate bit for bit; in rare tie cases one other
// component also moves by a single ulp.
inline std::vector<double> decompose_intensity(double total_rate, std::span<const double> weights) {
    if (!(total_rate >= 0.0) || !std::isfinite(total_rate))
        throw DomainError("rate must be nonnegative and finite");
    if (weights.empty()) throw DomainError("decomposition needs at least one weight");
    double weight_sum = 0.0;
    std::size_t absorber = weights.size();
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
            throw DomainError("weights must be nonnegative and finite");
        weight_sum += weights[i];
        if (weights[i] > 0.0) absorber = i;
    }
    if (!(weight_sum > 0.0)) throw DomainError("weights must not all be zero");

    std::vector<double> out(weights.size(), 0.0);
    for (std::size_t i = 0; i < weights.size(); ++i)
        if (i != absorber) out[i] = total_rate * (weights[i] / weight_sum);

    const auto sum_all = [&out] {
        double s = 0.0;
        for (double x : out) s += x;
        return s;
    };
    // Sets the absorber from the others, then nudges it by ulps until the
    // left-to-right sum matches (summation order can differ from `others`).
    const auto settle = [&] {
        double others = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i)
            if (i != absorber) others += out[i];
        out[absorber] = std::max(0.0, total_rate - others);
        for (int guard = 0; guard < 64; ++guard) {
            const double s = sum_all();
            if (s == total_rate) return true;
            out[absorber] =
                std::max(0.0, std::nextafter(out[absorber], s < total_rate ? INFINITY : 0.0));
        }
        return sum_all() == total_rate;
    };
    if (settle()) return out;
    // A sum that lands exactly halfway between representable totals rounds to
    // even, so some totals are unreachable through the absorber alone. Moving
    // one other component by an ulp changes the parity.
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (i == absorber || out[i] == 0.0) continue;
        const double keep = out[i];
        for (double dir : {double(INFINITY), 0.0}) {
            out[i] = std::nextafter(keep, dir);
            if (settle()) return out;
        }
        out[i] = keep;
    }
    settle();
    return out;
}

struct LevelParameters {
    RiskLevel level = RiskLevel::Baseline;
    double intensity_multiplier = 1.0;
    double mitigation_alpha = 1.0;
    DeviceParameters device{};
};

// `base` with its cluster intensity scaled by the level's multiplier and the
// level's mitigation factor attached.
inline LevelParameters level_parameters(const ScenarioConfig& config, RiskLevel level,
                                        const DeviceParameters& base) {
    LevelParameters out;
    out.level = level;
    out.intensity_multiplier = config.intensity_multiplier[index_of(level)];
    out.mitigation_alpha = config.mitigation_alpha[index_of(level)];
    out.device = base;
    out.device.counts.theta = base.counts.theta * out.intensity_multiplier;
    return out;
}

} // namespace cyberrisk
