#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "random_stream.hpp"

namespace cyberrisk {

// Cluster-count law of per-device attack loss-days: K ~ Poisson(theta)
// clusters, each of size 1 + Poisson(lambda_cluster).
struct CountDistributionParams {
    double theta = 1.0;
    double lambda_cluster = 0.0;
};

inline void validate(const CountDistributionParams& p) {
    if (!(p.theta > 0.0) || !std::isfinite(p.theta))
        throw DomainError("cluster intensity theta must be positive and finite");
    if (!(p.lambda_cluster >= 0.0) || !std::isfinite(p.lambda_cluster))
        throw DomainError("within-cluster intensity must be nonnegative and finite");
}

struct Lognormal {
    double mu = 0.0;
    double sigma = 1.0;
};

struct Pareto {
    double x_min = 1.0;
    double alpha = 2.0;
};

struct Fixed {
    double value = 0.0;
};

struct DiscreteTable {
    std::vector<double> values;
    std::vector<double> probabilities;
};

using SeverityDistribution = std::variant<Lognormal, Pareto, Fixed, DiscreteTable>;

inline void validate(const SeverityDistribution& dist) {
    std::visit(
        [](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Lognormal>) {
                if (!std::isfinite(d.mu) || !(d.sigma > 0.0) || !std::isfinite(d.sigma))
                    throw DomainError("lognormal requires finite mu and sigma > 0");
            } else if constexpr (std::is_same_v<T, Pareto>) {
                if (!(d.x_min > 0.0) || !std::isfinite(d.x_min))
                    throw DomainError("pareto requires x_min > 0");
                if (!(d.alpha > 1.0) || !std::isfinite(d.alpha))
                    throw DomainError("pareto requires alpha > 1");
            } else if constexpr (std::is_same_v<T, Fixed>) {
                if (!(d.value >= 0.0) || !std::isfinite(d.value))
                    throw DomainError("fixed severity must be nonnegative");
            } else {
                if (d.values.empty() || d.values.size() != d.probabilities.size())
                    throw DomainError("discrete table needs matching, nonempty value and "
                                      "probability lists");
                double total = 0.0;
                for (std::size_t i = 0; i < d.values.size(); ++i) {
                    if (!(d.values[i] >= 0.0) || !std::isfinite(d.values[i]))
                        throw DomainError("discrete table values must be nonnegative");
                    if (!(d.probabilities[i] >= 0.0))
                        throw DomainError("discrete table probabilities must be nonnegative");
                    total += d.probabilities[i];
                }
                if (std::abs(total - 1.0) > 1e-12)
                    throw DomainError("discrete table probabilities must sum to 1");
            }
        },
        dist);
}

inline double severity_mean(const SeverityDistribution& dist) {
    return std::visit(
        [](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Lognormal>) {
                return std::exp(d.mu + 0.5 * d.sigma * d.sigma);
            } else if constexpr (std::is_same_v<T, Pareto>) {
                return d.alpha * d.x_min / (d.alpha - 1.0);
            } else if constexpr (std::is_same_v<T, Fixed>) {
                return d.value;
            } else {
                double m = 0.0;
                for (std::size_t i = 0; i < d.values.size(); ++i)
                    m += d.values[i] * d.probabilities[i];
                return m;
            }
        },
        dist);
}

namespace detail {

inline double log_factorial(std::uint64_t n) {
    static const auto table = [] {
        std::array<double, 256> t{};
        for (std::size_t i = 1; i < t.size(); ++i)
            t[i] = t[i - 1] + std::log(static_cast<double>(i));
        return t;
    }();
    if (n < table.size()) return table[n];
    return std::lgamma(static_cast<double>(n) + 1.0);
}

inline double log_sum_exp(const std::vector<double>& terms) {
    if (terms.empty()) return -std::numeric_limits<double>::infinity();
    const double peak = *std::max_element(terms.begin(), terms.end());
    if (!std::isfinite(peak)) return peak;
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - peak);
    return peak + std::log(acc);
}

} // namespace detail

inline double poisson_pmf(std::uint64_t n, double rate) {
    if (!(rate >= 0.0)) throw DomainError("poisson rate must be nonnegative");
    if (rate == 0.0) return n == 0 ? 1.0 : 0.0;
    if (rate <= 30.0 && n <= 30) {
        double p = std::exp(-rate);
        for (std::uint64_t k = 1; k <= n; ++k) p *= rate / static_cast<double>(k);
        return p;
    }
    return std::exp(static_cast<double>(n) * std::log(rate) - rate - detail::log_factorial(n));
}

// Poisson variate generator with per-rate constants hoisted out of the draw.
//
// rate < 30: inversion, one uniform per draw, returning the smallest k with
//            u <= P(X <= k). The CDF is tabulated once per rate and searched
//            from a guide table.
// rate >= 30: PTRS transformed rejection (Hormann 1993), two uniforms per
// attempt.
class PoissonSampler {
public:
    static constexpr double kInversionLimit = 30.0;

    explicit PoissonSampler(double rate) : rate_(rate) {
        if (!(rate >= 0.0) || !std::isfinite(rate))
            throw DomainError("poisson rate must be nonnegative and finite");
        if (rate == 0.0) return;
        if (rate < kInversionLimit) {
            build_table();
        } else {
            log_rate_ = std::log(rate);
            b_ = 0.931 + 2.53 * std::sqrt(rate);
            a_ = -0.059 + 0.02483 * b_;
            log_inv_alpha_ = std::log(1.1239 + 1.1328 / (b_ - 3.4));
            v_r_ = 0.9277 - 3.6224 / (b_ - 2.0);
        }
    }

    double rate() const noexcept { return rate_; }

    std::uint64_t operator()(RandomStream& stream) const {
        if (rate_ == 0.0) return 0;
        if (rate_ < kInversionLimit) return invert(stream);
        return transformed_rejection(stream);
    }

private:
    // cdf_[k] = P(X <= k), accumulated by the recurrence p_k = p_{k-1} * rate / k
    // until adding p_k no longer changes the sum. guide_[g] is the first k with
    // cdf_[k] >= g / guide_.size(), a starting point for the search.
    void build_table() {
        double p = std::exp(-rate_);
        double cdf = p;
        cdf_.push_back(cdf);
        for (std::uint64_t k = 1;; ++k) {
            p *= rate_ / static_cast<double>(k);
            const double next = cdf + p;
            if (next == cdf) break;
            cdf = next;
            cdf_.push_back(cdf);
        }
        guide_.resize(cdf_.size());
        std::size_t k = 0;
        for (std::size_t g = 0; g < guide_.size(); ++g) {
            const double level = static_cast<double>(g) / static_cast<double>(guide_.size());
            while (k + 1 < cdf_.size() && cdf_[k] < level) ++k;
            guide_[g] = static_cast<std::uint32_t>(k);
        }
    }

    // Smallest k with u <= P(X <= k); past the saturated end of the table the
    // next index is returned.
    std::uint64_t invert(RandomStream& stream) const {
        const double u = stream.uniform();
        if (u <= cdf_.front()) return 0;
        if (u > cdf_.back()) return cdf_.size();
        std::size_t k = guide_[static_cast<std::size_t>(u * static_cast<double>(guide_.size()))];
        while (u > cdf_[k]) ++k;
        return k;
    }

    std::uint64_t transformed_rejection(RandomStream& stream) const {
        for (;;) {
            const double u = stream.uniform() - 0.5;
            const double v = stream.uniform();
            const double us = 0.5 - std::abs(u);
            const double kf = std::floor((2.0 * a_ / us + b_) * u + rate_ + 0.43);
            if (us >= 0.07 && v <= v_r_) return static_cast<std::uint64_t>(kf);
            if (kf < 0.0 || (us < 0.013 && v > us)) continue;
            const auto k = static_cast<std::uint64_t>(kf);
            if (std::log(v) + log_inv_alpha_ - std::log(a_ / (us * us) + b_) <=
                -rate_ + kf * log_rate_ - detail::log_factorial(k))
                return k;
        }
    }

    double rate_;
    std::vector<double> cdf_;
    std::vector<std::uint32_t> guide_;
    double log_rate_ = 0.0;
    double a_ = 0.0;
    double b_ = 0.0;
    double log_inv_alpha_ = 0.0;
    double v_r_ = 0.0;
};

inline std::uint64_t sample_poisson(RandomStream& stream, double rate) {
    return PoissonSampler(rate)(stream);
}

inline double exponential_cdf(double y, double rate) {
    if (!(rate > 0.0)) throw DomainError("exponential rate must be positive");
    return y <= 0.0 ? 0.0 : -std::expm1(-rate * y);
}

// Inverse-CDF draw: -ln(u) / rate with u uniform on (0, 1].
inline double sample_exponential(RandomStream& stream, double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate))
        throw DomainError("exponential rate must be positive and finite");
    return -std::log(stream.uniform_pos()) / rate;
}

// Standard normal quantile. Acklam's rational approximation (relative error
// below 1.15e-9) followed by one Halley step against erfc, which brings the
// result to near machine precision.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal quantile needs p in (0, 1)");
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

// One uniform per draw for every family:
//   Lognormal     exp(mu + sigma * normal_quantile(u)), u in (0, 1)
//   Pareto        x_min * u^(-1/alpha), u in (0, 1]
//   DiscreteTable first value whose cumulative probability reaches u
// Fixed consumes nothing.
inline double sample_severity(RandomStream& stream, const SeverityDistribution& dist) {
    return std::visit(
        [&stream](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Lognormal>) {
                return std::exp(d.mu + d.sigma * normal_quantile(stream.uniform_open()));
            } else if constexpr (std::is_same_v<T, Pareto>) {
                return d.x_min * std::pow(stream.uniform_pos(), -1.0 / d.alpha);
            } else if constexpr (std::is_same_v<T, Fixed>) {
                return d.value;
            } else {
                const double u = stream.uniform();
                double cdf = 0.0;
                for (std::size_t i = 0; i + 1 < d.values.size(); ++i) {
                    cdf += d.probabilities[i];
                    if (u < cdf) return d.values[i];
                }
                return d.values.back();
            }
        },
        dist);
}

// P(M = n) for M = sum_{j=1..K} (1 + X_j), K ~ Poisson(theta),
// X_j ~ Poisson(lambda_cluster). Given j clusters the excess n - j is
// Poisson(j * lambda_cluster), hence
//   P(M = n) = sum_{j=1..n} theta^j e^-theta / j! * (j lambda)^(n-j) e^(-j lambda) / (n-j)!
// evaluated term-wise in log space.
inline double compound_count_pmf(std::uint64_t n, const CountDistributionParams& params) {
    validate(params);
    const double theta = params.theta;
    const double lambda = params.lambda_cluster;
    if (n == 0) return std::exp(-theta);
    if (lambda == 0.0) return poisson_pmf(n, theta);
    std::vector<double> log_terms;
    log_terms.reserve(n);
    const double log_theta = std::log(theta);
    for (std::uint64_t j = 1; j <= n; ++j) {
        const double jl = static_cast<double>(j) * lambda;
        const auto excess = static_cast<double>(n - j);
        log_terms.push_back(static_cast<double>(j) * log_theta + excess * std::log(jl) -
                            (jl + theta) - detail::log_factorial(j) -
                            detail::log_factorial(n - j));
    }
    return std::exp(detail::log_sum_exp(log_terms));
}

// Draws K ~ Poisson(theta) then the total cluster excess. The K independent
// Poisson(lambda_cluster) excesses are drawn as their sum, Poisson(K *
// lambda_cluster), which has the same law and consumes a bounded number of
// draws per device.
inline std::uint64_t sample_compound_count(RandomStream& stream,
                                           const CountDistributionParams& params) {
    validate(params);
    const std::uint64_t k = PoissonSampler(params.theta)(stream);
    if (k == 0 || params.lambda_cluster == 0.0) return k;
    return k + PoissonSampler(static_cast<double>(k) * params.lambda_cluster)(stream);
}

// Same draws as sample_compound_count, with the cluster-count sampler and the
// excess samplers for likely cluster counts built once.
class CompoundCountSampler {
public:
    explicit CompoundCountSampler(const CountDistributionParams& params)
        : params_((validate(params), params)), clusters_(params.theta) {
        if (params.lambda_cluster > 0.0) {
            const double likely_max = params.theta + 12.0 * std::sqrt(params.theta) + 12.0;
            const auto cached = static_cast<std::uint64_t>(std::min(likely_max, 4096.0));
            excess_.reserve(cached);
            for (std::uint64_t k = 1; k <= cached; ++k)
                excess_.emplace_back(static_cast<double>(k) * params.lambda_cluster);
        }
    }

    const CountDistributionParams& params() const noexcept { return params_; }

    std::uint64_t operator()(RandomStream& stream) const {
        const std::uint64_t k = clusters_(stream);
        if (k == 0 || params_.lambda_cluster == 0.0) return k;
        if (k <= excess_.size()) return k + excess_[k - 1](stream);
        return k + PoissonSampler(static_cast<double>(k) * params_.lambda_cluster)(stream);
    }

private:
    CountDistributionParams params_;
    PoissonSampler clusters_;
    std::vector<PoissonSampler> excess_;
};

// Normalized Pareto density alpha x_min^alpha x^-(alpha+1) on [x_min, inf).
// alpha is the tail index.
inline double pareto_density(double x, double x_min, double alpha) {
    if (!(x_min > 0.0) || !(alpha > 1.0))
        throw DomainError("pareto density requires x_min > 0 and alpha > 1");
    if (x < x_min) return 0.0;
    return alpha / x_min * std::pow(x_min / x, alpha + 1.0);
}

inline double pareto_ccdf(double x, double x_min, double alpha) {
    if (!(x_min > 0.0) || !(alpha > 1.0))
        throw DomainError("pareto ccdf requires x_min > 0 and alpha > 1");
    return x <= x_min ? 1.0 : std::pow(x_min / x, alpha);
}

} // namespace cyberrisk
