#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "errors.hpp"

namespace cyberrisk {

// Sorted sample of portfolio losses L_kappa. Every risk measure is computed on
// this immutable view; sums run in ascending order so results are a pure
// function of the multiset of losses.
class EmpiricalDistribution {
public:
    explicit EmpiricalDistribution(std::vector<double> losses) : sorted_(std::move(losses)) {
        if (sorted_.empty()) throw DomainError("empirical distribution needs at least one loss");
        for (double x : sorted_)
            if (!std::isfinite(x)) throw DomainError("empirical distribution needs finite losses");
        std::sort(sorted_.begin(), sorted_.end());
        double total = 0.0;
        for (double x : sorted_) total += x;
        mean_ = total / static_cast<double>(sorted_.size());
    }

    std::span<const double> sorted_losses() const noexcept { return sorted_; }
    std::size_t count() const noexcept { return sorted_.size(); }
    double mean() const noexcept { return mean_; }
    double min() const noexcept { return sorted_.front(); }
    double max() const noexcept { return sorted_.back(); }

private:
    std::vector<double> sorted_;
    double mean_ = 0.0;
};

namespace detail {

inline void check_confidence(double level) {
    if (!(level > 0.0 && level < 1.0))
        throw DomainError("confidence level must lie strictly between 0 and 1");
}

// 1-based nearest-rank index ceil(level * n). A product within 1e-9 (relative)
// of an integer is snapped to it first, so 0.9 * 100 selects rank 90 regardless
// of how the decimal level rounds in binary.
inline std::size_t nearest_rank(double level, std::size_t n) {
    const double x = level * static_cast<double>(n);
    const double nearest = std::round(x);
    double rank = std::abs(x - nearest) <= 1e-9 * std::max(1.0, x) ? nearest : std::ceil(x);
    rank = std::clamp(rank, 1.0, static_cast<double>(n));
    return static_cast<std::size_t>(rank);
}

} // namespace detail

// Upper empirical quantile: the order statistic at rank ceil(level * n).
inline double value_at_risk(const EmpiricalDistribution& dist, double level) {
    detail::check_confidence(level);
    return dist.sorted_losses()[detail::nearest_rank(level, dist.count()) - 1];
}

// Mean of all sample points at or above VaR(level); ties at the threshold are
// part of the tail.
inline double conditional_tail_expectation(const EmpiricalDistribution& dist, double level) {
    const double var = value_at_risk(dist, level);
    const auto losses = dist.sorted_losses();
    const auto first = std::lower_bound(losses.begin(), losses.end(), var);
    double total = 0.0;
    for (auto it = first; it != losses.end(); ++it) total += *it;
    return total / static_cast<double>(losses.end() - first);
}

// Fraction of losses that reach the premium pool: Prob(pool <= L). A zero loss
// is never a shortfall, so a loss-free sample scores 0 even against an empty
// pool.
inline double shortfall_probability(const EmpiricalDistribution& dist, double premium_pool) {
    const auto losses = dist.sorted_losses();
    const auto first = premium_pool > 0.0
                           ? std::lower_bound(losses.begin(), losses.end(), premium_pool)
                           : std::upper_bound(losses.begin(), losses.end(), 0.0);
    return static_cast<double>(losses.end() - first) / static_cast<double>(losses.size());
}

// Mean excess of losses over the pool, E[max(L - pool, 0)].
inline double expected_shortfall(const EmpiricalDistribution& dist, double premium_pool) {
    const auto losses = dist.sorted_losses();
    const auto first = std::upper_bound(losses.begin(), losses.end(), premium_pool);
    double total = 0.0;
    for (auto it = first; it != losses.end(); ++it) total += *it - premium_pool;
    return total / static_cast<double>(losses.size());
}

// Solvency II percentile-method margin: (rho(L) - E(L)) / E(L).
inline double risk_margin_ratio(double measure_value, double expected_loss) {
    if (expected_loss == 0.0)
        throw UndefinedMarginError("risk margin ratio is undefined for a zero expected loss");
    return (measure_value - expected_loss) / expected_loss;
}

} // namespace cyberrisk
