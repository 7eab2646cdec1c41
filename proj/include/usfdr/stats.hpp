#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "usfdr/distributions.hpp"
#include "usfdr/errors.hpp"

namespace usfdr {

enum class VarianceRegime {
    EqualVariances,   // pooled-variance t and screening statistics
    UnequalVariances, // Welch statistics
};

/// One group's samples, stored feature-major so that a feature's column is
/// contiguous (the statistics sweep features, not samples).
class GroupSamples {
public:
    GroupSamples(std::size_t n_samples, std::size_t n_features)
        : n_(n_samples), m_(n_features), values_(n_samples * n_features, 0.0) {}

    std::size_t n_samples() const noexcept { return n_; }
    std::size_t n_features() const noexcept { return m_; }

    double& at(std::size_t sample, std::size_t feature) {
        return values_[feature * n_ + sample];
    }
    double at(std::size_t sample, std::size_t feature) const {
        return values_[feature * n_ + sample];
    }

    std::span<const double> feature(std::size_t i) const {
        return {values_.data() + i * n_, n_};
    }
    std::span<double> feature(std::size_t i) {
        return {values_.data() + i * n_, n_};
    }

private:
    std::size_t n_, m_;
    std::vector<double> values_;
};

/// Two independent groups measured on the same m features.
struct TwoSampleDataset {
    GroupSamples group1;
    GroupSamples group2;

    TwoSampleDataset(GroupSamples g1, GroupSamples g2)
        : group1(std::move(g1)), group2(std::move(g2)) {
        if (group1.n_features() != group2.n_features())
            throw std::invalid_argument("dataset: groups must share the feature count");
        if (group1.n_features() < 1)
            throw std::invalid_argument("dataset: at least one feature required");
        if (group1.n_samples() < 2 || group2.n_samples() < 2)
            throw std::invalid_argument("dataset: each group needs at least 2 samples");
        for (std::size_t i = 0; i < group1.n_features(); ++i) {
            for (double v : group1.feature(i))
                if (!std::isfinite(v))
                    throw std::invalid_argument("dataset: non-finite value in group 1");
            for (double v : group2.feature(i))
                if (!std::isfinite(v))
                    throw std::invalid_argument("dataset: non-finite value in group 2");
        }
    }

    std::size_t n_features() const noexcept { return group1.n_features(); }
};

/// Per-feature sample moments. pooled_var uses the n1+n2-2 divisor.
struct FeatureMoments {
    double mean1 = 0.0;
    double mean2 = 0.0;
    double var1 = 0.0;
    double var2 = 0.0;
    double pooled_var = 0.0;
};

/// Per-feature test statistics T_i and screening statistics S_i.
struct TestStatistics {
    std::vector<double> t;
    std::vector<double> s;
    VarianceRegime regime = VarianceRegime::EqualVariances;
    DegreesOfFreedom df{1.0};
    // Welch diagnostic: features whose variance ratio n2*var1/(n1*var2)
    // exceeded 1e8 in magnitude (the formula is still computed as written).
    std::vector<std::size_t> unstable_ratio_features;
};

/// Population screening signal h_i, computable only when the true means and
/// variances are known (simulation diagnostics).
struct OracleSignal {
    std::vector<double> h;
};

namespace detail {

// Two-pass mean and centered sum of squares.
inline std::pair<double, double> mean_and_css(std::span<const double> column) {
    double sum = 0.0;
    for (double v : column) sum += v;
    const double mean = sum / static_cast<double>(column.size());
    double css = 0.0;
    for (double v : column) {
        const double d = v - mean;
        css += d * d;
    }
    return {mean, css};
}

} // namespace detail

inline std::vector<FeatureMoments> compute_moments(const TwoSampleDataset& data) {
    const std::size_t m = data.n_features();
    const double n1 = static_cast<double>(data.group1.n_samples());
    const double n2 = static_cast<double>(data.group2.n_samples());
    std::vector<FeatureMoments> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto [mean1, css1] = detail::mean_and_css(data.group1.feature(i));
        const auto [mean2, css2] = detail::mean_and_css(data.group2.feature(i));
        out[i].mean1 = mean1;
        out[i].mean2 = mean2;
        out[i].var1 = css1 / (n1 - 1.0);
        out[i].var2 = css2 / (n2 - 1.0);
        out[i].pooled_var = (css1 + css2) / (n1 + n2 - 2.0);
    }
    return out;
}

inline double t_statistic_pooled(const FeatureMoments& mom, std::size_t n1, std::size_t n2) {
    if (!(mom.pooled_var > 0.0))
        throw DegenerateVariance("pooled variance is zero");
    const double a = static_cast<double>(n1) * static_cast<double>(n2)
                     / ((static_cast<double>(n1) + static_cast<double>(n2)) * mom.pooled_var);
    return std::sqrt(a) * (mom.mean1 - mom.mean2);
}

inline double screening_statistic_pooled(const FeatureMoments& mom, std::size_t n1, std::size_t n2) {
    if (!(mom.pooled_var > 0.0))
        throw DegenerateVariance("pooled variance is zero");
    const double d1 = static_cast<double>(n1);
    const double d2 = static_cast<double>(n2);
    const double a = d1 * d1 / ((d1 + d2) * mom.pooled_var);
    return std::sqrt(a) * (mom.mean1 + (d2 / d1) * mom.mean2);
}

inline double t_statistic_welch(const FeatureMoments& mom, std::size_t n1, std::size_t n2) {
    if (!(mom.var1 > 0.0) && !(mom.var2 > 0.0))
        throw DegenerateVariance("both group variances are zero");
    const double se = std::sqrt(mom.var1 / static_cast<double>(n1)
                                + mom.var2 / static_cast<double>(n2));
    return (mom.mean1 - mom.mean2) / se;
}

inline double screening_statistic_welch(const FeatureMoments& mom, std::size_t n1, std::size_t n2) {
    if (!(mom.var1 > 0.0) || !(mom.var2 > 0.0))
        throw DegenerateVariance("a group variance is zero");
    const double d1 = static_cast<double>(n1);
    const double d2 = static_cast<double>(n2);
    const double r = d2 * mom.var1 / (d1 * mom.var2);
    return std::sqrt(d1 / (mom.var1 * (1.0 + r))) * (mom.mean1 + r * mom.mean2);
}

inline double one_sample_t(std::span<const double> column) {
    if (column.size() < 2)
        throw std::invalid_argument("one_sample_t: need at least 2 observations");
    const auto [mean, css] = detail::mean_and_css(column);
    const double var = css / (static_cast<double>(column.size()) - 1.0);
    if (!(var > 0.0))
        throw DegenerateVariance("sample variance is zero");
    return std::sqrt(static_cast<double>(column.size())) * mean / std::sqrt(var);
}

/// The SS_i / MS_i negative-control screens built from one-sample t
/// statistics per group: SS = sqrt(T1^2 + T2^2), MS = max(|T1|, |T2|).
struct BaselineScreens {
    std::vector<double> ss;
    std::vector<double> ms;
};

inline BaselineScreens baseline_screens(const TwoSampleDataset& data) {
    const std::size_t m = data.n_features();
    BaselineScreens out;
    out.ss.resize(m);
    out.ms.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        double t1, t2;
        try {
            t1 = one_sample_t(data.group1.feature(i));
            t2 = one_sample_t(data.group2.feature(i));
        } catch (const DegenerateVariance&) {
            throw DegenerateVariance("zero variance in baseline screen", i);
        }
        out.ss[i] = std::hypot(t1, t2);
        out.ms[i] = std::max(std::fabs(t1), std::fabs(t2));
    }
    return out;
}

inline OracleSignal oracle_screening_signal(std::span<const double> mu1,
                                            std::span<const double> mu2,
                                            std::span<const double> sigma1_sq,
                                            std::span<const double> sigma2_sq,
                                            std::size_t n1, std::size_t n2) {
    if (mu1.size() != mu2.size() || mu1.size() != sigma1_sq.size()
        || mu1.size() != sigma2_sq.size())
        throw std::invalid_argument("oracle_screening_signal: length mismatch");
    const double d1 = static_cast<double>(n1);
    const double d2 = static_cast<double>(n2);
    OracleSignal out;
    out.h.resize(mu1.size());
    for (std::size_t i = 0; i < mu1.size(); ++i) {
        if (!(sigma1_sq[i] > 0.0) || !(sigma2_sq[i] > 0.0))
            throw DegenerateVariance("zero population variance", i);
        const double r = d2 * sigma1_sq[i] / (d1 * sigma2_sq[i]);
        out.h[i] = std::sqrt(d1 / (sigma1_sq[i] * (1.0 + r))) * (mu1[i] + r * mu2[i]);
    }
    return out;
}

/// Assembles the full T/S vectors for a dataset under the chosen regime.
inline TestStatistics compute_statistics(const TwoSampleDataset& data, VarianceRegime regime) {
    const std::size_t m = data.n_features();
    const std::size_t n1 = data.group1.n_samples();
    const std::size_t n2 = data.group2.n_samples();
    const auto moments = compute_moments(data);

    TestStatistics out;
    out.t.resize(m);
    out.s.resize(m);
    out.regime = regime;
    out.df = DegreesOfFreedom(static_cast<double>(n1 + n2 - 2));

    for (std::size_t i = 0; i < m; ++i) {
        const FeatureMoments& mom = moments[i];
        try {
            if (regime == VarianceRegime::EqualVariances) {
                out.t[i] = t_statistic_pooled(mom, n1, n2);
                out.s[i] = screening_statistic_pooled(mom, n1, n2);
            } else {
                out.t[i] = t_statistic_welch(mom, n1, n2);
                out.s[i] = screening_statistic_welch(mom, n1, n2);
                const double r = static_cast<double>(n2) * mom.var1
                                 / (static_cast<double>(n1) * mom.var2);
                if (std::fabs(r) > 1e8) out.unstable_ratio_features.push_back(i);
            }
        } catch (const DegenerateVariance& e) {
            throw DegenerateVariance(e.what(), i);
        }
    }
    return out;
}

} // namespace usfdr
