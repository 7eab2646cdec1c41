#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "usfdr/rng.hpp"
#include "usfdr/stats.hpp"

#include "oracles.hpp"

using namespace usfdr;

namespace {

GroupSamples column_group(const std::vector<std::vector<double>>& columns) {
    const std::size_t n = columns.front().size();
    GroupSamples g(n, columns.size());
    for (std::size_t i = 0; i < columns.size(); ++i)
        for (std::size_t k = 0; k < n; ++k)
            g.at(k, i) = columns[i][k];
    return g;
}

TwoSampleDataset random_dataset(std::size_t n1, std::size_t n2, std::size_t m,
                                std::uint64_t seed, double shift = 0.0) {
    RngStream rng(seed);
    GroupSamples g1(n1, m), g2(n2, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < n1; ++k) g1.at(k, i) = rng.next_gaussian();
        for (std::size_t k = 0; k < n2; ++k) g2.at(k, i) = rng.next_gaussian() + shift;
    }
    return TwoSampleDataset(std::move(g1), std::move(g2));
}

// naive reference moments, summed in index order
FeatureMoments naive_moments(const std::vector<double>& c1, const std::vector<double>& c2) {
    FeatureMoments mom;
    for (double v : c1) mom.mean1 += v;
    mom.mean1 /= static_cast<double>(c1.size());
    for (double v : c2) mom.mean2 += v;
    mom.mean2 /= static_cast<double>(c2.size());
    double css1 = 0.0, css2 = 0.0;
    for (double v : c1) css1 += (v - mom.mean1) * (v - mom.mean1);
    for (double v : c2) css2 += (v - mom.mean2) * (v - mom.mean2);
    mom.var1 = css1 / (static_cast<double>(c1.size()) - 1.0);
    mom.var2 = css2 / (static_cast<double>(c2.size()) - 1.0);
    mom.pooled_var = (css1 + css2) / (static_cast<double>(c1.size() + c2.size()) - 2.0);
    return mom;
}

} // namespace

TEST_CASE("compute_moments on hand examples") {
    const TwoSampleDataset data(column_group({{1, 2, 3}}), column_group({{4, 5, 6}}));
    const auto mom = compute_moments(data);
    REQUIRE(mom.size() == 1);
    REQUIRE(mom[0].mean1 == 2.0);
    REQUIRE(mom[0].mean2 == 5.0);
    REQUIRE(mom[0].var1 == 1.0);
    REQUIRE(mom[0].var2 == 1.0);
    REQUIRE(mom[0].pooled_var == 1.0);
}

TEST_CASE("compute_moments on constant columns") {
    const TwoSampleDataset data(column_group({{7, 7, 7, 7}}), column_group({{7, 7, 7}}));
    const auto mom = compute_moments(data);
    REQUIRE(mom[0].var1 == 0.0);
    REQUIRE(mom[0].var2 == 0.0);
    REQUIRE(mom[0].pooled_var == 0.0);
}

TEST_CASE("compute_moments matches the naive oracle") {
    RngStream rng(101);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> c1(5), c2(7);
        for (double& v : c1) v = 10.0 * rng.next_double() - 5.0;
        for (double& v : c2) v = 10.0 * rng.next_double() - 5.0;
        const TwoSampleDataset data(column_group({c1}), column_group({c2}));
        const auto mom = compute_moments(data)[0];
        const auto want = naive_moments(c1, c2);
        REQUIRE(std::fabs(mom.mean1 - want.mean1) < 1e-12);
        REQUIRE(std::fabs(mom.mean2 - want.mean2) < 1e-12);
        REQUIRE(std::fabs(mom.var1 - want.var1) < 1e-12);
        REQUIRE(std::fabs(mom.var2 - want.var2) < 1e-12);
        REQUIRE(std::fabs(mom.pooled_var - want.pooled_var) < 1e-12);
        // pooled identity
        const double n1 = 5, n2 = 7;
        REQUIRE(std::fabs(mom.pooled_var
                          - ((n1 - 1) * mom.var1 + (n2 - 1) * mom.var2) / (n1 + n2 - 2))
                < 1e-12);
    }
}

TEST_CASE("dataset invariants are enforced") {
    REQUIRE_THROWS_AS(TwoSampleDataset(column_group({{1.0}, {2.0}}),
                                       column_group({{1, 2, 3}})),
                      std::invalid_argument); // feature count mismatch
    REQUIRE_THROWS_AS(TwoSampleDataset(column_group({{1.0}}), column_group({{1, 2}})),
                      std::invalid_argument); // n1 < 2
    std::vector<double> bad{1.0, std::nan("")};
    REQUIRE_THROWS_AS(TwoSampleDataset(column_group({bad}), column_group({{1, 2}})),
                      std::invalid_argument);
}

TEST_CASE("pooled statistics") {
    FeatureMoments mom;
    mom.mean1 = 2.0;
    mom.mean2 = 5.0;
    mom.pooled_var = 1.0;
    REQUIRE(std::fabs(t_statistic_pooled(mom, 3, 3) - (-3.0 * std::sqrt(1.5))) < 1e-12);

    mom.mean2 = 2.0;
    REQUIRE(t_statistic_pooled(mom, 3, 3) == 0.0);

    // S vanishes when mean1 = -(n2/n1) mean2
    FeatureMoments s0;
    s0.mean2 = 3.0;
    s0.mean1 = -(7.0 / 5.0) * 3.0;
    s0.pooled_var = 2.0;
    REQUIRE(std::fabs(screening_statistic_pooled(s0, 5, 7)) < 1e-12);

    FeatureMoments s1;
    s1.mean1 = s1.mean2 = 1.0;
    s1.pooled_var = 1.0;
    REQUIRE(std::fabs(screening_statistic_pooled(s1, 8, 8) - std::sqrt(8.0 / 2.0) * 2.0)
            < 1e-12);

    FeatureMoments degen;
    REQUIRE_THROWS_AS(t_statistic_pooled(degen, 3, 3), DegenerateVariance);
    REQUIRE_THROWS_AS(screening_statistic_pooled(degen, 3, 3), DegenerateVariance);
}

TEST_CASE("welch statistics") {
    FeatureMoments mom;
    mom.mean1 = mom.mean2 = 4.0;
    mom.var1 = 2.0;
    mom.var2 = 3.0;
    REQUIRE(t_statistic_welch(mom, 10, 12) == 0.0);

    // with var1 = var2 = pooled_var and n1 = n2 the pooled value is recovered
    FeatureMoments eq;
    eq.mean1 = 1.0;
    eq.mean2 = -0.5;
    eq.var1 = eq.var2 = eq.pooled_var = 1.7;
    REQUIRE(std::fabs(t_statistic_welch(eq, 9, 9) - t_statistic_pooled(eq, 9, 9)) < 1e-12);
    REQUIRE(std::fabs(screening_statistic_welch(eq, 9, 9)
                      - screening_statistic_pooled(eq, 9, 9)) < 1e-12);

    // S vanishes when mean1 = -r * mean2
    FeatureMoments s0;
    s0.var1 = 0.5;
    s0.var2 = 2.0;
    const double r = (12.0 * 0.5) / (10.0 * 2.0);
    s0.mean2 = 1.3;
    s0.mean1 = -r * 1.3;
    REQUIRE(std::fabs(screening_statistic_welch(s0, 10, 12)) < 1e-12);

    FeatureMoments degen;
    REQUIRE_THROWS_AS(t_statistic_welch(degen, 3, 3), DegenerateVariance);
    degen.var1 = 1.0;
    REQUIRE_THROWS_AS(screening_statistic_welch(degen, 3, 3), DegenerateVariance);
}

TEST_CASE("statistics match the direct formulas on random moments") {
    RngStream rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        FeatureMoments mom;
        mom.mean1 = 4.0 * rng.next_double() - 2.0;
        mom.mean2 = 4.0 * rng.next_double() - 2.0;
        mom.var1 = 0.1 + rng.next_double();
        mom.var2 = 0.1 + rng.next_double();
        mom.pooled_var = 0.1 + rng.next_double();
        const std::size_t n1 = 3 + (rng.next_u64() % 30);
        const std::size_t n2 = 3 + (rng.next_u64() % 30);
        const double d1 = static_cast<double>(n1), d2 = static_cast<double>(n2);

        const double t_pool = std::sqrt(d1 * d2 / ((d1 + d2) * mom.pooled_var))
                              * (mom.mean1 - mom.mean2);
        REQUIRE(std::fabs(t_statistic_pooled(mom, n1, n2) - t_pool) < 1e-12);

        const double s_pool = std::sqrt(d1 * d1 / ((d1 + d2) * mom.pooled_var))
                              * (mom.mean1 + d2 / d1 * mom.mean2);
        REQUIRE(std::fabs(screening_statistic_pooled(mom, n1, n2) - s_pool) < 1e-12);

        const double t_welch = (mom.mean1 - mom.mean2)
                               / std::sqrt(mom.var1 / d1 + mom.var2 / d2);
        REQUIRE(std::fabs(t_statistic_welch(mom, n1, n2) - t_welch) < 1e-12);

        const double r = d2 * mom.var1 / (d1 * mom.var2);
        const double s_welch = std::sqrt(d1 / (mom.var1 * (1.0 + r)))
                               * (mom.mean1 + r * mom.mean2);
        REQUIRE(std::fabs(screening_statistic_welch(mom, n1, n2) - s_welch) < 1e-12);
    }
}

TEST_CASE("one_sample_t") {
    const std::vector<double> zero_mean{-1.0, 0.0, 1.0};
    REQUIRE(one_sample_t(zero_mean) == 0.0);

    const std::vector<double> constant{1.0, 1.0, 1.0};
    REQUIRE_THROWS_AS(one_sample_t(constant), DegenerateVariance);

    RngStream rng(55);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> col(4 + (rng.next_u64() % 20));
        for (double& v : col) v = rng.next_gaussian();
        const auto want = naive_moments(col, {0.0, 0.0});
        const double t = std::sqrt(static_cast<double>(col.size())) * want.mean1
                         / std::sqrt(want.var1);
        REQUIRE(std::fabs(one_sample_t(col) - t) < 1e-12);
    }
}

TEST_CASE("baseline screens") {
    // columns engineered so the one-sample t statistics are exactly 3 and 4
    const double a = std::sqrt(3.0);
    const double b = 4.0 / std::sqrt(3.0);
    const TwoSampleDataset data(column_group({{a - 1, a, a + 1}}),
                                column_group({{b - 1, b, b + 1}}));
    const BaselineScreens sc = baseline_screens(data);
    REQUIRE(std::fabs(sc.ss[0] - 5.0) < 1e-12);
    REQUIRE(std::fabs(sc.ms[0] - 4.0) < 1e-12);

    const TwoSampleDataset zeros(column_group({{-1, 0, 1}}), column_group({{-2, 0, 2}}));
    const BaselineScreens z = baseline_screens(zeros);
    REQUIRE(z.ss[0] == 0.0);
    REQUIRE(z.ms[0] == 0.0);

    const TwoSampleDataset degen(column_group({{1, 1, 1}}), column_group({{0, 1, 2}}));
    REQUIRE_THROWS_AS(baseline_screens(degen), DegenerateVariance);

    const TwoSampleDataset rnd = random_dataset(15, 11, 40, 301, 0.3);
    const BaselineScreens r = baseline_screens(rnd);
    for (std::size_t i = 0; i < 40; ++i) {
        REQUIRE(r.ss[i] >= r.ms[i]);
        REQUIRE(r.ms[i] >= 0.0);
    }
}

TEST_CASE("oracle screening signal") {
    const std::vector<double> zeros(5, 0.0);
    const std::vector<double> ones(5, 1.0);
    const OracleSignal null_sig = oracle_screening_signal(zeros, zeros, ones, ones, 10, 10);
    for (double h : null_sig.h) REQUIRE(h == 0.0);

    // opposite-sign cancellation: mu1 = -r * mu2
    const std::size_t n1 = 10, n2 = 20;
    std::vector<double> s1{0.5}, s2{2.0}, mu2{1.0};
    const double r = (20.0 * 0.5) / (10.0 * 2.0);
    std::vector<double> mu1{-r * 1.0};
    const OracleSignal cancel = oracle_screening_signal(mu1, mu2, s1, s2, n1, n2);
    REQUIRE(std::fabs(cancel.h[0]) < 1e-12);

    // direct formula on reference-model parameters
    const double logm = std::log(2000.0);
    std::vector<double> m1{3.0 * std::sqrt(logm / 100.0)};
    std::vector<double> m2{2.0 * std::sqrt(logm / 100.0)};
    std::vector<double> v{1.0};
    const OracleSignal sig = oracle_screening_signal(m1, m2, v, v, 100, 100);
    const double want = std::sqrt(100.0 / 2.0) * (m1[0] + m2[0]);
    REQUIRE(std::fabs(sig.h[0] - want) < 1e-12);

    std::vector<double> zero_var{0.0};
    REQUIRE_THROWS_AS(oracle_screening_signal(mu1, mu2, zero_var, s2, n1, n2),
                      DegenerateVariance);
}

TEST_CASE("scale equivariance of T and S") {
    const TwoSampleDataset data = random_dataset(12, 9, 25, 42, 0.4);
    const TestStatistics base = compute_statistics(data, VarianceRegime::UnequalVariances);

    GroupSamples g1(12, 25), g2(9, 25);
    const double c = 37.5;
    for (std::size_t i = 0; i < 25; ++i) {
        for (std::size_t k = 0; k < 12; ++k) g1.at(k, i) = c * data.group1.at(k, i);
        for (std::size_t k = 0; k < 9; ++k) g2.at(k, i) = c * data.group2.at(k, i);
    }
    const TwoSampleDataset scaled(std::move(g1), std::move(g2));
    const TestStatistics after = compute_statistics(scaled, VarianceRegime::UnequalVariances);
    for (std::size_t i = 0; i < 25; ++i) {
        REQUIRE(std::fabs(after.t[i] - base.t[i]) < 1e-10);
        REQUIRE(std::fabs(after.s[i] - base.s[i]) < 1e-10);
    }
}

TEST_CASE("welch equals pooled when group variances coincide") {
    // group2 = group1 + shift has identical sample variance per feature
    RngStream rng(7);
    const std::size_t n = 14, m = 10;
    GroupSamples g1(n, m), g2(n, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            const double v = rng.next_gaussian();
            g1.at(k, i) = v;
            g2.at(k, i) = v + 0.8;
        }
    const TwoSampleDataset data(std::move(g1), std::move(g2));
    const TestStatistics pooled = compute_statistics(data, VarianceRegime::EqualVariances);
    const TestStatistics welch = compute_statistics(data, VarianceRegime::UnequalVariances);
    for (std::size_t i = 0; i < m; ++i)
        REQUIRE(std::fabs(pooled.t[i] - welch.t[i]) < 1e-10);
}

TEST_CASE("compute_statistics metadata") {
    const TwoSampleDataset data = random_dataset(10, 13, 6, 5);
    const TestStatistics st = compute_statistics(data, VarianceRegime::EqualVariances);
    REQUIRE(st.df.value == 21.0);
    REQUIRE(st.t.size() == 6);
    REQUIRE(st.s.size() == 6);
    REQUIRE(st.regime == VarianceRegime::EqualVariances);
    REQUIRE(st.unstable_ratio_features.empty());
}

TEST_CASE("extreme welch variance ratios are flagged") {
    RngStream rng(91);
    const std::size_t n = 6, m = 3;
    GroupSamples g1(n, m), g2(n, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            g1.at(k, i) = rng.next_gaussian();
            g2.at(k, i) = rng.next_gaussian();
        }
    // feature 2 of group 2 is nearly constant; its variance ratio blows up
    for (std::size_t k = 0; k < n; ++k)
        g2.at(k, 2) = 1.0 + 1e-13 * static_cast<double>(k);
    const TwoSampleDataset data(std::move(g1), std::move(g2));
    const TestStatistics st = compute_statistics(data, VarianceRegime::UnequalVariances);
    REQUIRE(st.unstable_ratio_features == std::vector<std::size_t>{2});
    REQUIRE(std::isfinite(st.t[2])); // the formula is still computed as written
    REQUIRE(std::isfinite(st.s[2]));
}

TEST_CASE("known-variance screening is uncorrelated with the mean difference") {
    // 1e5 null replications; S0 uses the true variances, the difference is
    // unstandardized, so the pair is exactly uncorrelated in population.
    const std::size_t n1 = 100, n2 = 100, reps = 100000;
    for (const bool unequal : {false, true}) {
        const double var1 = unequal ? 0.5 : 1.0;
        const double var2 = 1.0;
        const double r = (static_cast<double>(n2) * var1) / (static_cast<double>(n1) * var2);
        const double scale = std::sqrt(static_cast<double>(n1) / (var1 * (1.0 + r)));
        RngStream rng(unequal ? 1301 : 1300);
        std::vector<double> s0(reps), diff(reps);
        for (std::size_t rep = 0; rep < reps; ++rep) {
            double sum1 = 0.0, sum2 = 0.0;
            for (std::size_t k = 0; k < n1; ++k) sum1 += std::sqrt(var1) * rng.next_gaussian();
            for (std::size_t k = 0; k < n2; ++k) sum2 += std::sqrt(var2) * rng.next_gaussian();
            const double mean1 = sum1 / n1, mean2 = sum2 / n2;
            s0[rep] = scale * (mean1 + r * mean2);
            diff[rep] = mean1 - mean2;
        }
        REQUIRE(std::fabs(oracle::pearson_correlation(s0, diff)) < 0.01);
    }
}

TEST_CASE("screening statistic is asymptotically standard normal under the null") {
    const std::size_t n = 100, reps = 100000;
    RngStream rng(2025);
    std::vector<double> s_values(reps);
    for (std::size_t rep = 0; rep < reps; ++rep) {
        double sum1 = 0.0, css1 = 0.0, sum2 = 0.0, css2 = 0.0;
        std::vector<double> c1(n), c2(n);
        for (double& v : c1) { v = rng.next_gaussian(); sum1 += v; }
        for (double& v : c2) { v = rng.next_gaussian(); sum2 += v; }
        const double mean1 = sum1 / n, mean2 = sum2 / n;
        for (double v : c1) css1 += (v - mean1) * (v - mean1);
        for (double v : c2) css2 += (v - mean2) * (v - mean2);
        FeatureMoments mom;
        mom.mean1 = mean1;
        mom.mean2 = mean2;
        mom.pooled_var = (css1 + css2) / (2.0 * n - 2.0);
        s_values[rep] = screening_statistic_pooled(mom, n, n);
    }
    const double d = oracle::ks_distance(
        s_values, [](double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); });
    REQUIRE(d < 0.01);
}
