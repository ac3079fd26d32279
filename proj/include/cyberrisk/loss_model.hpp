#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "distributions.hpp"
#include "errors.hpp"
#include "random_stream.hpp"

namespace cyberrisk {

struct DeviceParameters {
    double daily_loss = 1000.0;   // b, monetary loss per loss-day
    double discount_rate = 0.03;  // r
    std::uint32_t horizon_days = 365;
    double kill_rate = 0.0;       // annual hazard of the device being permanently stopped
    CountDistributionParams counts{};
};

inline void validate(const DeviceParameters& p) {
    if (!(p.daily_loss >= 0.0) || !std::isfinite(p.daily_loss))
        throw DomainError("daily loss b must be nonnegative and finite");
    if (!(p.discount_rate > -1.0) || !std::isfinite(p.discount_rate))
        throw DomainError("discount rate must exceed -1");
    if (p.horizon_days < 1) throw DomainError("horizon must be at least one day");
    if (!(p.kill_rate >= 0.0) || !std::isfinite(p.kill_rate))
        throw DomainError("kill rate must be nonnegative and finite");
    validate(p.counts);
}

struct DeviceOutcome {
    std::uint64_t attack_count = 0;  // M_x before the horizon cap
    std::uint64_t loss_days = 0;     // min(M_x, horizon_days)
    bool survived_horizon = true;
    bool capped = false;
    double present_loss = 0.0;
};

inline double discount_factor(double r) {
    if (!(r > -1.0)) throw DomainError("discount rate must exceed -1");
    return 1.0 / (1.0 + r);
}

// One device-year. Each attack event costs one loss-day; the count is capped at
// the horizon. The device survives the year when its Exponential(kill_rate)
// lifetime in years exceeds 1, and a killed device contributes no loss:
//   P_x = v * 1(T_x > 1) * b * M_x
// Draw order per device: compound count, then the lifetime (only when
// kill_rate > 0).
class DeviceSimulator {
public:
    explicit DeviceSimulator(const DeviceParameters& params)
        : params_((validate(params), params)),
          counts_(params.counts),
          discount_(discount_factor(params.discount_rate)) {}

    const DeviceParameters& params() const noexcept { return params_; }
    double discount() const noexcept { return discount_; }

    DeviceOutcome operator()(RandomStream& stream) const {
        DeviceOutcome out;
        out.attack_count = counts_(stream);
        out.capped = out.attack_count > params_.horizon_days;
        out.loss_days = std::min<std::uint64_t>(out.attack_count, params_.horizon_days);
        if (params_.kill_rate > 0.0)
            out.survived_horizon = sample_exponential(stream, params_.kill_rate) > 1.0;
        out.present_loss = out.survived_horizon
                               ? discount_ * (params_.daily_loss *
                                              static_cast<double>(out.loss_days))
                               : 0.0;
        return out;
    }

private:
    DeviceParameters params_;
    CompoundCountSampler counts_;
    double discount_;
};

inline DeviceOutcome simulate_device(RandomStream& stream, const DeviceParameters& params) {
    return DeviceSimulator(params)(stream);
}

struct PremiumSchedule {
    double loading = 0.0;                 // delta
    double mitigation = 1.0;              // alpha
    double expected_loss = 0.0;           // E(P_x)
    double adjusted_expected_loss = 0.0;  // E(P^1) = alpha E(P_x)
    double premium = 0.0;                 // pi = (1 + delta) E(P_x)
    double adjusted_premium = 0.0;        // pi^1 = (1 + delta) E(P^1)
};

inline PremiumSchedule premium_schedule(double expected_loss, double loading, double mitigation) {
    if (!(expected_loss >= 0.0) || !std::isfinite(expected_loss))
        throw DomainError("expected loss must be nonnegative and finite");
    if (!(loading >= 0.0) || !std::isfinite(loading))
        throw DomainError("loading must be nonnegative");
    if (!(mitigation > 0.0 && mitigation <= 1.0))
        throw DomainError("mitigation factor must lie in (0, 1]");
    PremiumSchedule s;
    s.loading = loading;
    s.mitigation = mitigation;
    s.expected_loss = expected_loss;
    s.adjusted_expected_loss = mitigation * expected_loss;
    s.premium = (1.0 + loading) * expected_loss;
    s.adjusted_premium = (1.0 + loading) * s.adjusted_expected_loss;
    return s;
}

// Compound Poisson aggregate loss L_C = sum_{i=1..N} Z_i, N ~ Poisson(event_rate).
struct AggregateLossParams {
    double event_rate = 0.0;
    SeverityDistribution severity = Fixed{0.0};
};

inline void validate(const AggregateLossParams& p) {
    if (!(p.event_rate >= 0.0) || !std::isfinite(p.event_rate))
        throw DomainError("aggregate event rate must be nonnegative and finite");
    validate(p.severity);
}

class AggregateLossSimulator {
public:
    explicit AggregateLossSimulator(const AggregateLossParams& params)
        : params_((validate(params), params)), events_(params.event_rate) {}

    const AggregateLossParams& params() const noexcept { return params_; }

    // Draw order: event count, then one severity per event.
    double operator()(RandomStream& stream) const {
        const std::uint64_t n = events_(stream);
        double total = 0.0;
        for (std::uint64_t i = 0; i < n; ++i) total += sample_severity(stream, params_.severity);
        return total;
    }

private:
    AggregateLossParams params_;
    PoissonSampler events_;
};

inline double simulate_aggregate_loss(RandomStream& stream, const AggregateLossParams& params) {
    return AggregateLossSimulator(params)(stream);
}

// L_kappa: device losses plus the optional common aggregate channel. Terms are
// added in ascending order so the result does not depend on device order.
inline double portfolio_loss(std::span<const double> device_losses, double common_loss = 0.0) {
    std::vector<double> sorted(device_losses.begin(), device_losses.end());
    std::sort(sorted.begin(), sorted.end());
    double total = 0.0;
    for (double x : sorted) total += x;
    return total + common_loss;
}

} // namespace cyberrisk
