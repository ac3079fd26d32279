#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "distributions.hpp"
#include "errors.hpp"
#include "loss_model.hpp"
#include "random_stream.hpp"
#include "risk_measures.hpp"
#include "scenario.hpp"

namespace cyberrisk {

inline constexpr const char* kEngineVersion = "1.0.0";

struct SimulationSpec {
    // counts.theta is the Baseline per-device cluster intensity; levels scale it.
    DeviceParameters device{};
    double loading = 0.1;
    std::uint64_t portfolio_size = 1000;
    std::uint64_t repetitions = 100000;
    std::uint64_t seed = 42;
    std::vector<RiskLevel> levels = {RiskLevel::Guarded, RiskLevel::Elevated, RiskLevel::High,
                                     RiskLevel::Severe};
    ScenarioConfig scenario{};
    std::optional<AggregateLossParams> aggregate_channel;
    std::vector<double> confidence_levels = {0.90, 0.95, 0.99};
};

// Stream identifiers pack (level, repetition, channel) into 64 bits:
//   bits 60..63 level enum value, bits 1..59 repetition, bit 0 channel.
// Channel 0 feeds the kappa devices of one portfolio-year, drawn in device
// order; channel 1 feeds the common aggregate-loss channel. The packing is
// injective and keyed by the level's enum value rather than its position in
// the request, so adding or reordering levels leaves every other level's draws
// unchanged.
inline constexpr std::uint64_t kMaxRepetitions = std::uint64_t{1} << 59;
inline constexpr std::uint64_t kMaxPortfolioSize = (std::uint64_t{1} << 32) - 1;

enum class StreamChannel : std::uint64_t { Devices = 0, Aggregate = 1 };

inline constexpr std::uint64_t stream_id_for(RiskLevel level, std::uint64_t repetition,
                                             StreamChannel channel) noexcept {
    return (static_cast<std::uint64_t>(level) << 60) | (repetition << 1) |
           static_cast<std::uint64_t>(channel);
}

inline void validate(const SimulationSpec& spec) {
    try {
        validate(spec.device);
        validate(spec.scenario);
        if (spec.aggregate_channel) validate(*spec.aggregate_channel);
        (void)premium_schedule(0.0, spec.loading, 1.0);
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    if (spec.portfolio_size < 1 || spec.portfolio_size > kMaxPortfolioSize)
        throw ConfigError("portfolio size must lie in [1, 2^32 - 1]");
    if (spec.repetitions < 1 || spec.repetitions >= kMaxRepetitions)
        throw ConfigError("repetitions must lie in [1, 2^59)");
    if (spec.levels.empty()) throw ConfigError("at least one risk level is required");
    for (std::size_t i = 0; i < spec.levels.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (spec.levels[i] == spec.levels[j])
                throw ConfigError("risk level listed twice: " +
                                  std::string(level_key(spec.levels[i])));
    if (spec.confidence_levels.empty()) throw ConfigError("at least one confidence level needed");
    for (double rho : spec.confidence_levels)
        if (!(rho > 0.0 && rho < 1.0))
            throw ConfigError("confidence levels must lie strictly between 0 and 1");
}

struct TailMetric {
    double confidence = 0.0;
    double var = 0.0;
    double cte = 0.0;
    // Empty when the best estimate E(L) is zero.
    std::optional<double> var_margin;
    std::optional<double> cte_margin;
};

struct RiskMetrics {
    double expected_loss = 0.0;
    double premium_pool = 0.0;
    double shortfall_probability = 0.0;
    double expected_shortfall = 0.0;
    std::vector<TailMetric> tail;
};

inline RiskMetrics summarize_level(const EmpiricalDistribution& samples, double premium_pool,
                                   const std::vector<double>& confidence_levels) {
    if (!(premium_pool >= 0.0)) throw DomainError("premium pool must be nonnegative");
    RiskMetrics m;
    m.expected_loss = samples.mean();
    m.premium_pool = premium_pool;
    m.shortfall_probability = shortfall_probability(samples, premium_pool);
    m.expected_shortfall = expected_shortfall(samples, premium_pool);
    for (double rho : confidence_levels) {
        TailMetric t;
        t.confidence = rho;
        t.var = value_at_risk(samples, rho);
        t.cte = conditional_tail_expectation(samples, rho);
        if (m.expected_loss != 0.0) {
            t.var_margin = risk_margin_ratio(t.var, m.expected_loss);
            t.cte_margin = risk_margin_ratio(t.cte, m.expected_loss);
        }
        m.tail.push_back(t);
    }
    return m;
}

struct LevelReport {
    RiskLevel level = RiskLevel::Baseline;
    double intensity_multiplier = 1.0;
    double mitigation_alpha = 1.0;
    double theta = 0.0;
    double mean_device_loss = 0.0;       // E(P_x) at portfolio scale
    double expected_present_loss = 0.0;  // E(P^1) = alpha * E(P_x)
    RiskMetrics metrics;
    std::uint64_t capped_devices = 0;    // device-years whose count hit the horizon
    std::uint64_t killed_devices = 0;
};

struct RiskReport {
    SimulationSpec spec;
    std::string engine_version = kEngineVersion;
    std::string stream_format = kStreamFormatVersion;
    // Baseline E(P_x) at portfolio scale; every level's premium pool is priced on it.
    double baseline_expected_loss = 0.0;
    std::vector<LevelReport> levels;
    double wall_seconds = 0.0;  // informational, never serialized
};

struct RunOptions {
    unsigned workers = 0;  // 0 = hardware concurrency
};

namespace detail {

struct LevelSamples {
    std::vector<double> portfolio;  // L_kappa per repetition
    std::vector<double> device;     // device part of L_kappa per repetition
    std::vector<std::uint32_t> capped;
    std::vector<std::uint32_t> killed;
};

inline unsigned resolve_workers(unsigned requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

} // namespace detail

// Runs R repetitions of a kappa-device portfolio year for every requested
// level (plus Baseline, which prices the premium pool) and reduces each level's
// sample to risk metrics.
//
// Work is split into (level, block of repetitions) items; each repetition
// writes only its own slots and all reductions run afterwards in repetition
// order, so the report is identical for any worker count.
inline RiskReport run_simulation(const SimulationSpec& spec, RunOptions options = {}) {
    validate(spec);
    const auto started = std::chrono::steady_clock::now();

    std::vector<RiskLevel> simulated = spec.levels;
    if (std::find(simulated.begin(), simulated.end(), RiskLevel::Baseline) == simulated.end())
        simulated.push_back(RiskLevel::Baseline);

    std::vector<LevelParameters> params;
    std::vector<DeviceSimulator> devices;
    params.reserve(simulated.size());
    devices.reserve(simulated.size());
    for (RiskLevel level : simulated) {
        params.push_back(level_parameters(spec.scenario, level, spec.device));
        try {
            devices.emplace_back(params.back().device);
        } catch (const DomainError& e) {
            throw ConfigError(std::string("level ") + std::string(level_key(level)) + ": " +
                              e.what());
        }
    }
    std::optional<AggregateLossSimulator> aggregate;
    if (spec.aggregate_channel) aggregate.emplace(*spec.aggregate_channel);

    const std::uint64_t reps = spec.repetitions;
    std::vector<detail::LevelSamples> samples(simulated.size());
    for (auto& s : samples) {
        s.portfolio.resize(reps);
        s.device.resize(reps);
        s.capped.resize(reps);
        s.killed.resize(reps);
    }

    constexpr std::uint64_t kBlock = 64;
    const std::uint64_t blocks_per_level = (reps + kBlock - 1) / kBlock;
    const std::uint64_t total_items = blocks_per_level * simulated.size();
    std::atomic<std::uint64_t> next_item{0};
    std::atomic<bool> failed{false};
    std::exception_ptr failure;
    std::uint64_t failure_item = UINT64_MAX;
    std::mutex failure_mutex;

    auto work = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::uint64_t item = next_item.fetch_add(1, std::memory_order_relaxed);
            if (item >= total_items) return;
            const std::size_t li = item / blocks_per_level;
            const std::uint64_t begin = (item % blocks_per_level) * kBlock;
            const std::uint64_t end = std::min(reps, begin + kBlock);
            const RiskLevel level = simulated[li];
            const DeviceSimulator& device = devices[li];
            const double unit = device.discount() * device.params().daily_loss;
            auto& out = samples[li];
            try {
                for (std::uint64_t rep = begin; rep < end; ++rep) {
                    std::uint64_t loss_days = 0;
                    std::uint32_t capped = 0;
                    std::uint32_t killed = 0;
                    RandomStream stream(spec.seed,
                                        stream_id_for(level, rep, StreamChannel::Devices));
                    for (std::uint64_t d = 0; d < spec.portfolio_size; ++d) {
                        const DeviceOutcome o = device(stream);
                        capped += o.capped ? 1u : 0u;
                        if (o.survived_horizon)
                            loss_days += o.loss_days;
                        else
                            ++killed;
                    }
                    const double device_loss = unit * static_cast<double>(loss_days);
                    double total = device_loss;
                    if (aggregate) {
                        RandomStream common(spec.seed,
                                            stream_id_for(level, rep, StreamChannel::Aggregate));
                        total += (*aggregate)(common);
                    }
                    if (!std::isfinite(total))
                        throw NumericFault(std::string(level_key(level)), rep);
                    out.portfolio[rep] = total;
                    out.device[rep] = device_loss;
                    out.capped[rep] = capped;
                    out.killed[rep] = killed;
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                // Keep the lowest failing item so the reported fault does not
                // depend on scheduling.
                if (item < failure_item) {
                    failure_item = item;
                    failure = std::current_exception();
                }
                failed.store(true, std::memory_order_relaxed);
            }
        }
    };

    const unsigned workers = static_cast<unsigned>(
        std::min<std::uint64_t>(detail::resolve_workers(options.workers), total_items));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);

    RiskReport report;
    report.spec = spec;

    std::vector<double> mean_device(simulated.size(), 0.0);
    for (std::size_t li = 0; li < simulated.size(); ++li) {
        // Ascending summation, the same convention EmpiricalDistribution uses.
        std::vector<double> sorted = samples[li].device;
        std::sort(sorted.begin(), sorted.end());
        double total = 0.0;
        for (double x : sorted) total += x;
        mean_device[li] = total / static_cast<double>(reps);
    }
    const std::size_t baseline_index =
        static_cast<std::size_t>(std::find(simulated.begin(), simulated.end(), RiskLevel::Baseline) -
                                 simulated.begin());
    report.baseline_expected_loss = mean_device[baseline_index];

    for (std::size_t li = 0; li < spec.levels.size(); ++li) {
        const LevelParameters& lp = params[li];
        LevelReport lr;
        lr.level = lp.level;
        lr.intensity_multiplier = lp.intensity_multiplier;
        lr.mitigation_alpha = lp.mitigation_alpha;
        lr.theta = lp.device.counts.theta;
        lr.mean_device_loss = mean_device[li];
        lr.expected_present_loss = lp.mitigation_alpha * mean_device[li];
        const PremiumSchedule pricing =
            premium_schedule(report.baseline_expected_loss, spec.loading, lp.mitigation_alpha);
        for (std::uint64_t rep = 0; rep < reps; ++rep) {
            lr.capped_devices += samples[li].capped[rep];
            lr.killed_devices += samples[li].killed[rep];
        }
        const EmpiricalDistribution dist(std::move(samples[li].portfolio));
        lr.metrics = summarize_level(dist, pricing.adjusted_premium, spec.confidence_levels);
        report.levels.push_back(std::move(lr));
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

} // namespace cyberrisk
