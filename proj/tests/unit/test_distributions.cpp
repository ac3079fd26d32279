#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <gtest/gtest.h>

#include <cyberrisk/distributions.hpp>

#include "oracles.hpp"

using namespace cyberrisk;

namespace {

struct Moments {
    double mean = 0.0;
    double var = 0.0;
};

template <class Draw>
Moments moments(Draw draw, int n) {
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = static_cast<double>(draw());
        sum += x;
        sum2 += x * x;
    }
    const double m = sum / n;
    return {m, (sum2 - n * m * m) / (n - 1)};
}

template <class Draw>
std::vector<double> histogram(Draw draw, int n, std::size_t bins) {
    std::vector<double> h(bins + 1, 0.0);
    for (int i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(draw());
        h[std::min(k, bins)] += 1.0 / n;
    }
    return h;
}

} // namespace

TEST(PoissonPmf, Examples) {
    EXPECT_NEAR(poisson_pmf(0, 1.0), 0.3678794, 5e-8);
    EXPECT_NEAR(poisson_pmf(2, 2.0), 0.2706706, 5e-8);
    EXPECT_EQ(poisson_pmf(3, 0.0), 0.0);
    EXPECT_EQ(poisson_pmf(0, 0.0), 1.0);
    EXPECT_THROW(poisson_pmf(1, -0.5), DomainError);
}

TEST(PoissonPmf, MatchesRecurrenceOracle) {
    for (double rate : {0.3, 4.0, 29.0, 31.0, 150.0}) {
        const auto ref = oracle::poisson_table(rate, 400);
        for (std::size_t n = 0; n <= 400; n += 7)
            EXPECT_NEAR(poisson_pmf(n, rate), ref[n], 1e-12 + 1e-10 * ref[n]) << rate << " " << n;
    }
}

TEST(PoissonPmf, SurvivesLargeRates) {
    // exp(-1000) underflows; log-space evaluation must not.
    const double p = poisson_pmf(1000, 1000.0);
    EXPECT_NEAR(p, 1.0 / std::sqrt(2.0 * M_PI * 1000.0), 1e-5);
}

TEST(PoissonPmf, NormalizesAtTwelveSigma) {
    for (double rate : {0.5, 2.0, 10.512, 105.12, 800.0}) {
        const auto hi = static_cast<std::uint64_t>(rate + 12.0 * std::sqrt(rate) + 12);
        double total = 0.0;
        for (std::uint64_t n = 0; n <= hi; ++n) total += poisson_pmf(n, rate);
        EXPECT_NEAR(total, 1.0, 1e-9) << rate;
    }
}

TEST(SamplePoisson, ZeroRate) {
    RandomStream s(1, 1);
    for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_poisson(s, 0.0), 0u);
}

TEST(SamplePoisson, NegativeRateThrows) {
    RandomStream s(1, 1);
    EXPECT_THROW(sample_poisson(s, -1.0), DomainError);
}

TEST(SamplePoisson, MomentsRateFour) {
    RandomStream s(42, 4);
    const PoissonSampler draw(4.0);
    const auto m = moments([&] { return draw(s); }, 1000000);
    EXPECT_NEAR(m.mean, 4.0, 0.01);
    EXPECT_NEAR(m.var, 4.0, 0.05);
}

TEST(SamplePoisson, TotalVariationAgainstPmf) {
    for (double rate : {1.0, 3.5, 10.0}) {
        RandomStream s(7, static_cast<std::uint64_t>(rate * 10));
        const PoissonSampler draw(rate);
        const std::size_t bins = 60;
        const auto h = histogram([&] { return draw(s); }, 1000000, bins);
        std::vector<double> p(bins + 1);
        for (std::size_t k = 0; k <= bins; ++k) p[k] = poisson_pmf(k, rate);
        EXPECT_LT(oracle::total_variation(h, p), 0.005) << rate;
    }
}

// The rejection branch (rate >= 30) against the pmf.
TEST(SamplePoisson, LargeRateBranch) {
    for (double rate : {30.0, 105.12, 210.24, 5000.0}) {
        RandomStream s(9, static_cast<std::uint64_t>(rate));
        const PoissonSampler draw(rate);
        const auto m = moments([&] { return draw(s); }, 400000);
        const double se = std::sqrt(rate / 400000.0);
        EXPECT_NEAR(m.mean, rate, 4.0 * se) << rate;
        EXPECT_NEAR(m.var / rate, 1.0, 0.02) << rate;
    }
    RandomStream s(10, 10);
    const PoissonSampler draw(105.12);
    const std::size_t bins = 250;
    const auto h = histogram([&] { return draw(s); }, 1000000, bins);
    std::vector<double> p(bins + 1);
    for (std::size_t k = 0; k <= bins; ++k) p[k] = poisson_pmf(k, 105.12);
    EXPECT_LT(oracle::total_variation(h, p), 0.01);
}

TEST(SamplePoisson, FreeFunctionMatchesSampler) {
    for (double rate : {0.7, 12.0, 64.0}) {
        RandomStream a(3, 3), b(3, 3);
        const PoissonSampler draw(rate);
        for (int i = 0; i < 2000; ++i) ASSERT_EQ(sample_poisson(a, rate), draw(b));
    }
}

TEST(SampleExponential, Median) {
    RandomStream s(42, 2);
    const int n = 1000000;
    std::vector<double> xs(n);
    for (auto& x : xs) x = sample_exponential(s, 2.0);
    std::nth_element(xs.begin(), xs.begin() + n / 2, xs.end());
    EXPECT_NEAR(xs[n / 2], std::log(2.0) / 2.0, 0.01);
}

TEST(SampleExponential, RejectsNonpositiveRate) {
    RandomStream s(1, 1);
    EXPECT_THROW(sample_exponential(s, 0.0), DomainError);
    EXPECT_THROW(sample_exponential(s, -2.0), DomainError);
    EXPECT_THROW(exponential_cdf(1.0, 0.0), DomainError);
}

TEST(SampleExponential, CdfIdentity) {
    EXPECT_EQ(exponential_cdf(-1.0, 3.0), 0.0);
    EXPECT_NEAR(exponential_cdf(std::log(2.0) / 2.0, 2.0), 0.5, 1e-15);
}

// Counting exponential arrivals in [0, t] gives Poisson(rate * t) counts.
TEST(SampleExponential, ArrivalCountsArePoisson) {
    RandomStream s(42, 5);
    const double rate = 2.5, t = 2.0;
    const std::size_t bins = 30;
    const auto h = histogram(
        [&] {
            std::uint64_t n = 0;
            double clock = sample_exponential(s, rate);
            while (clock <= t) {
                ++n;
                clock += sample_exponential(s, rate);
            }
            return n;
        },
        100000, bins);
    std::vector<double> p(bins + 1);
    for (std::size_t k = 0; k <= bins; ++k) p[k] = poisson_pmf(k, rate * t);
    EXPECT_LT(oracle::total_variation(h, p), 0.01);
}

TEST(NormalQuantile, KnownValues) {
    EXPECT_NEAR(normal_quantile(0.5), 0.0, 1e-15);
    EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-13);
    EXPECT_NEAR(normal_quantile(0.001), -3.090232306167814, 1e-12);
    EXPECT_NEAR(normal_quantile(1e-10), -6.361340902404056, 1e-10);
    for (double p = 0.01; p < 1.0; p += 0.01)
        EXPECT_NEAR(0.5 * std::erfc(-normal_quantile(p) / std::sqrt(2.0)), p, 1e-14);
    EXPECT_THROW(normal_quantile(0.0), DomainError);
    EXPECT_THROW(normal_quantile(1.0), DomainError);
}

TEST(SampleSeverity, Fixed) {
    RandomStream s(1, 1);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_severity(s, Fixed{7.5}), 7.5);
    EXPECT_EQ(s.counter(), 0u);
}

TEST(SampleSeverity, LognormalMean) {
    RandomStream s(42, 11);
    const SeverityDistribution d = Lognormal{0.0, 1.0};
    const auto m = moments([&] { return sample_severity(s, d); }, 1000000);
    EXPECT_NEAR(m.mean / std::exp(0.5), 1.0, 0.01);
    EXPECT_DOUBLE_EQ(severity_mean(d), std::exp(0.5));
}

TEST(SampleSeverity, ParetoCcdf) {
    RandomStream s(42, 12);
    const SeverityDistribution d = Pareto{1.0, 2.5};
    const int n = 1000000;
    int above = 0;
    for (int i = 0; i < n; ++i) {
        const double x = sample_severity(s, d);
        ASSERT_GE(x, 1.0);
        above += x > 4.0 ? 1 : 0;
    }
    EXPECT_NEAR(static_cast<double>(above) / n, std::pow(4.0, -2.5), 0.002);
    EXPECT_DOUBLE_EQ(pareto_ccdf(4.0, 1.0, 2.5), std::pow(4.0, -2.5));
}

TEST(SampleSeverity, DiscreteFrequencies) {
    RandomStream s(42, 13);
    const SeverityDistribution d = DiscreteTable{{1, 2, 3, 5}, {0.4, 0.3, 0.2, 0.1}};
    std::vector<double> freq(6, 0.0);
    const int n = 500000;
    for (int i = 0; i < n; ++i) freq[static_cast<std::size_t>(sample_severity(s, d))] += 1.0 / n;
    EXPECT_NEAR(freq[1], 0.4, 0.003);
    EXPECT_NEAR(freq[2], 0.3, 0.003);
    EXPECT_NEAR(freq[3], 0.2, 0.003);
    EXPECT_NEAR(freq[5], 0.1, 0.003);
    EXPECT_EQ(freq[0] + freq[4], 0.0);
    EXPECT_NEAR(severity_mean(d), 2.1, 1e-15);
}

TEST(SeverityValidation, RejectsBadParameters) {
    EXPECT_THROW(validate(SeverityDistribution{Lognormal{0.0, 0.0}}), DomainError);
    EXPECT_THROW(validate(SeverityDistribution{Pareto{0.0, 2.0}}), DomainError);
    EXPECT_THROW(validate(SeverityDistribution{Pareto{1.0, 1.0}}), DomainError);
    EXPECT_THROW(validate(SeverityDistribution{Fixed{-1.0}}), DomainError);
    EXPECT_THROW(validate(SeverityDistribution{DiscreteTable{{1, 2}, {0.5, 0.4}}}), DomainError);
    EXPECT_THROW(validate(SeverityDistribution{DiscreteTable{{1}, {0.5, 0.5}}}), DomainError);
    EXPECT_NO_THROW(validate(SeverityDistribution{DiscreteTable{{1, 2}, {0.5, 0.5}}}));
}

TEST(CompoundCountPmf, Examples) {
    EXPECT_NEAR(compound_count_pmf(0, {1.7, 0.4}), 0.1826835, 5e-8);
    EXPECT_NEAR(compound_count_pmf(1, {1.0, 1.0}), 0.1353353, 5e-8);
    double total = 0.0;
    for (std::uint64_t n = 0; n <= 40; ++n) total += compound_count_pmf(n, {2.0, 0.5});
    EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(CompoundCountPmf, MatchesConvolutionOracle) {
    for (double theta : {0.5, 1.0, 2.0})
        for (double lambda : {0.5, 1.0, 2.0}) {
            const auto ref = oracle::cluster_count_pmf(theta, lambda, 20);
            for (std::uint64_t n = 0; n <= 20; ++n)
                EXPECT_NEAR(compound_count_pmf(n, {theta, lambda}), ref[n], 1e-10)
                    << theta << " " << lambda << " " << n;
        }
}

TEST(CompoundCountPmf, ZeroLambdaIsPoisson) {
    for (std::uint64_t n = 0; n < 30; ++n)
        EXPECT_DOUBLE_EQ(compound_count_pmf(n, {3.0, 0.0}), poisson_pmf(n, 3.0));
}

TEST(CompoundCountPmf, NormalizesAtTwelveSigma) {
    for (auto p : {CountDistributionParams{2.0, 0.5}, CountDistributionParams{10.512, 0.5},
                   CountDistributionParams{0.3, 4.0}}) {
        const double mean = p.theta * (1 + p.lambda_cluster);
        const double var = p.theta * (p.lambda_cluster + std::pow(1 + p.lambda_cluster, 2));
        const auto hi = static_cast<std::uint64_t>(mean + 12.0 * std::sqrt(var) + 12);
        double total = 0.0;
        for (std::uint64_t n = 0; n <= hi; ++n) total += compound_count_pmf(n, p);
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
}

TEST(CompoundCountPmf, InvalidParams) {
    EXPECT_THROW(compound_count_pmf(1, {0.0, 1.0}), DomainError);
    EXPECT_THROW(compound_count_pmf(1, {1.0, -1.0}), DomainError);
}

TEST(SampleCompoundCount, VanishingTheta) {
    RandomStream s(42, 1);
    for (int i = 0; i < 10000; ++i) ASSERT_EQ(sample_compound_count(s, {1e-12, 0.5}), 0u);
}

TEST(SampleCompoundCount, MomentIdentities) {
    RandomStream s(42, 21);
    const CompoundCountSampler draw({2.0, 0.5});
    const int n = 1000000;
    const auto m = moments([&] { return draw(s); }, n);
    EXPECT_NEAR(m.mean, 3.0, 0.01);
    EXPECT_NEAR(m.var, 5.5, 0.05);
    EXPECT_NEAR(m.mean, 3.0, 3.0 * std::sqrt(5.5 / n));
}

TEST(SampleCompoundCount, TotalVariationAgainstPmf) {
    for (auto p : {CountDistributionParams{2.0, 0.5}, CountDistributionParams{1.0, 2.0},
                   CountDistributionParams{6.0, 1.0}}) {
        RandomStream s(5, static_cast<std::uint64_t>(p.theta * 100 + p.lambda_cluster));
        const CompoundCountSampler draw(p);
        const std::size_t bins = 120;
        const auto h = histogram([&] { return draw(s); }, 1000000, bins);
        std::vector<double> q(bins + 1);
        for (std::size_t k = 0; k <= bins; ++k) q[k] = compound_count_pmf(k, p);
        EXPECT_LT(oracle::total_variation(h, q), 0.005);
    }
}

TEST(SampleCompoundCount, CachedSamplerMatchesFreeFunction) {
    for (auto p : {CountDistributionParams{10.512, 0.5}, CountDistributionParams{210.24, 0.5},
                   CountDistributionParams{2e-5, 29.0}, CountDistributionParams{3.0, 0.0}}) {
        RandomStream a(8, 8), b(8, 8);
        const CompoundCountSampler draw(p);
        for (int i = 0; i < 5000; ++i) ASSERT_EQ(sample_compound_count(a, p), draw(b));
        EXPECT_EQ(a.counter(), b.counter());
    }
}

TEST(ParetoDensity, Examples) {
    EXPECT_EQ(pareto_density(0.5, 1.0, 2.0), 0.0);
    EXPECT_DOUBLE_EQ(pareto_density(1.0, 1.0, 2.0), 2.0);
    EXPECT_THROW(pareto_density(2.0, 0.0, 2.0), DomainError);
    EXPECT_THROW(pareto_density(2.0, 1.0, 0.9), DomainError);
}

// Simpson in log coordinates over [x_min, 1e6 x_min]; the missing tail mass
// is (1e6)^-alpha, far below the tolerance.
TEST(ParetoDensity, IntegratesToOne) {
    for (double alpha : {1.5, 2.0, 2.5})
        for (double x_min : {1.0, 250.0}) {
            const auto f = [&](double u) {
                const double x = x_min * std::exp(u);
                return pareto_density(x, x_min, alpha) * x;
            };
            const double integral = oracle::simpson(f, 0.0, std::log(1e6), 200000);
            EXPECT_NEAR(integral, 1.0 - std::pow(1e6, -alpha), 1e-9);
            EXPECT_NEAR(integral, 1.0, 1e-6);
        }
}

TEST(Determinism, SamplersReplayIdentically) {
    auto run = [] {
        RandomStream s(123, 456);
        std::vector<double> out;
        const CompoundCountSampler counts({10.512, 0.5});
        for (int i = 0; i < 1000; ++i) {
            out.push_back(static_cast<double>(counts(s)));
            out.push_back(sample_severity(s, Lognormal{1.0, 2.0}));
            out.push_back(sample_exponential(s, 0.3));
            out.push_back(static_cast<double>(sample_poisson(s, 77.0)));
        }
        return out;
    };
    EXPECT_EQ(run(), run());
}
