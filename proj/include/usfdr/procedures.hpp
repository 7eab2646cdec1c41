#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "usfdr/distributions.hpp"
#include "usfdr/errors.hpp"
#include "usfdr/stats.hpp"

namespace usfdr {

/// Two-sided p-values p_i = G(|T_i|) under the Student-t null reference.
inline std::vector<double> p_values_from_t(const TestStatistics& stats) {
    std::vector<double> p(stats.t.size());
    for (std::size_t i = 0; i < stats.t.size(); ++i)
        p[i] = two_sided_survival(std::fabs(stats.t[i]), stats.df).value;
    return p;
}

struct BhResult {
    std::size_t k_hat = 0;
    double threshold_p = 0.0; // p_(k_hat), 0 when nothing is rejected
    std::vector<std::size_t> rejected;
};

/// Benjamini-Hochberg step-up rule: reject all p_j <= p_(k_hat) where
/// k_hat = max{k : p_(k) <= alpha*k/m}.
inline BhResult bh_procedure(const std::vector<double>& p, double alpha) {
    if (p.empty())
        throw std::domain_error("bh_procedure: empty p-value vector");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::domain_error("bh_procedure: alpha must be in (0, 1)");
    for (double v : p)
        if (!(v >= 0.0 && v <= 1.0))
            throw std::domain_error("bh_procedure: p-values must lie in [0, 1]");

    const std::size_t m = p.size();
    std::vector<double> sorted(p);
    std::sort(sorted.begin(), sorted.end());

    std::size_t k_hat = 0;
    for (std::size_t k = 1; k <= m; ++k)
        if (sorted[k - 1] <= alpha * static_cast<double>(k) / static_cast<double>(m))
            k_hat = k;

    BhResult out;
    out.k_hat = k_hat;
    if (k_hat == 0) return out;
    out.threshold_p = sorted[k_hat - 1];
    for (std::size_t j = 0; j < m; ++j)
        if (p[j] <= out.threshold_p) out.rejected.push_back(j);
    return out;
}

/// Candidate screening levels lambda_i = (i/N)*sqrt(log m), i = 0..4N.
struct LambdaGrid {
    int n_grid;
    std::vector<double> levels;

    LambdaGrid(int n, double m_features) : n_grid(n) {
        if (n < 1)
            throw std::domain_error("lambda grid: N must be >= 1");
        if (!(m_features > 1.0))
            throw std::domain_error("lambda grid: need m > 1 features");
        const double root = std::sqrt(std::log(m_features));
        levels.resize(4 * static_cast<std::size_t>(n) + 1);
        for (std::size_t i = 0; i < levels.size(); ++i)
            levels[i] = (static_cast<double>(i) / n) * root;
    }
};

struct FamilySplit {
    std::vector<std::size_t> family1; // {i : screen_i >= lambda}
    std::vector<std::size_t> family2;
    std::size_t m_hat_1 = 0;
    std::size_t m_hat_2 = 0;
};

struct UsResult {
    double lambda_hat = 0.0;
    int lambda_index = 0;
    double t1_hat = 0.0;
    double t2_hat = 0.0;
    std::vector<std::size_t> rejected;
    FamilySplit split;
    // Rejection totals per grid level (a single entry in fixed-lambda mode).
    std::vector<std::size_t> per_lambda_rejection_counts;
    // Null reference the thresholds were computed under (the testing
    // subsample's df for the split-sample variant).
    DegreesOfFreedom df{1.0};
};

namespace detail {

// Threshold search over a family whose |T| values arrive sorted ascending
// along with their precomputed survival values g_vals[i] = G(vals[i]).
inline double threshold_from_sorted(std::span<const double> vals,
                                    std::span<const double> g_vals,
                                    std::size_t m_hat, double alpha,
                                    DegreesOfFreedom df) {
    if (m_hat == 0) return 0.0;

    const double m_hat_d = static_cast<double>(m_hat);
    const std::size_t n = vals.size();
    if (m_hat_d <= alpha * std::max<double>(1.0, static_cast<double>(n)))
        return 0.0; // the criterion already holds at t = 0

    std::size_t j = 0;
    while (j < n) {
        const double u = vals[j];
        const double count = static_cast<double>(n - j); // #{|T_i| >= u}
        if (m_hat_d * g_vals[j] <= alpha * count) {
            const double q = alpha * count / m_hat_d;
            const double t0 = inverse_two_sided_survival(TailProbability(q), df);
            return std::min(t0, u);
        }
        // skip ties so the count stays exact
        while (j + 1 < n && vals[j + 1] == u) ++j;
        ++j;
    }
    // No observed value qualifies: the criterion is first met beyond the
    // largest |T|, where m_hat * G(t) = alpha.
    return inverse_two_sided_survival(TailProbability(alpha / m_hat_d), df);
}

} // namespace detail

/// The per-family threshold: the infimum t >= 0 such that
///   m_hat * G(t) / max(1, #{|T_i| >= t}) <= alpha.
/// The count is piecewise constant between observed values, so the infimum
/// lands either at 0, or where m_hat*G(t) = alpha * count holds inside the
/// gap just below the first qualifying observed value, or past the largest
/// observed value where the count term is max(1, 0) = 1.
inline double family_threshold(std::span<const double> t_abs, std::size_t m_hat,
                               double alpha, DegreesOfFreedom df) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::domain_error("family_threshold: alpha must be in (0, 1)");
    std::vector<double> vals(t_abs.begin(), t_abs.end());
    for (double v : vals)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::domain_error("family_threshold: |T| values must be finite and >= 0");
    std::sort(vals.begin(), vals.end());
    std::vector<double> g_vals(vals.size());
    for (std::size_t j = 0; j < vals.size(); ++j)
        g_vals[j] = two_sided_survival(vals[j], df).value;
    return detail::threshold_from_sorted(vals, g_vals, m_hat, alpha, df);
}

namespace detail {

// Shared state for the per-level rejection scans of one statistics vector.
struct ScanWorkspace {
    std::vector<double> t_abs;
    std::vector<double> screen_abs;
    std::vector<std::size_t> order;   // features by |T| descending
    std::vector<double> p_sorted;     // G(|T|) along `order` (ascending)
};

inline ScanWorkspace make_scan_workspace(std::span<const double> t,
                                         std::span<const double> screen,
                                         DegreesOfFreedom df) {
    ScanWorkspace ws;
    const std::size_t m = t.size();
    ws.t_abs.resize(m);
    ws.screen_abs.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (!std::isfinite(t[i]) || !std::isfinite(screen[i]))
            throw DegenerateVariance("non-finite statistic", i);
        ws.t_abs[i] = std::fabs(t[i]);
        ws.screen_abs[i] = std::fabs(screen[i]);
    }
    ws.order.resize(m);
    std::iota(ws.order.begin(), ws.order.end(), std::size_t{0});
    std::stable_sort(ws.order.begin(), ws.order.end(), [&](std::size_t a, std::size_t b) {
        return ws.t_abs[a] > ws.t_abs[b];
    });
    ws.p_sorted.resize(m);
    for (std::size_t k = 0; k < m; ++k)
        ws.p_sorted[k] = two_sided_survival(ws.t_abs[ws.order[k]], df).value;
    return ws;
}

// Rejection counts of both families at one screening level, in a single
// sweep down the |T| order. A position qualifies when the family criterion
// m_hat * G(|T|) <= alpha * max(1, members seen so far) holds there; the
// deepest qualifying position carries the final rejection count.
inline std::pair<std::size_t, std::size_t>
scan_rejections(const ScanWorkspace& ws, double lambda, double alpha) {
    const std::size_t m = ws.order.size();
    std::size_t m1 = 0;
    for (double s : ws.screen_abs)
        if (s >= lambda) ++m1;
    const double m1_d = static_cast<double>(m1);
    const double m2_d = static_cast<double>(m - m1);

    std::size_t c1 = 0, c2 = 0, best1 = 0, best2 = 0;
    std::size_t k = 0;
    while (k < m) {
        // advance through a run of tied |T| values so counts are exact
        const double p = ws.p_sorted[k];
        std::size_t end = k;
        while (end < m && ws.p_sorted[end] == p) {
            if (ws.screen_abs[ws.order[end]] >= lambda) ++c1; else ++c2;
            ++end;
        }
        if (m1_d * p <= alpha * std::max<double>(1.0, static_cast<double>(c1)))
            best1 = c1;
        if (m2_d * p <= alpha * std::max<double>(1.0, static_cast<double>(c2)))
            best2 = c2;
        k = end;
    }
    return {best1, best2};
}

// Full result at one screening level: exact thresholds and the rejection set.
inline void finalize_at_level(const ScanWorkspace& ws, double lambda, double alpha,
                              DegreesOfFreedom df, UsResult& out) {
    const std::size_t m = ws.t_abs.size();
    out.split = FamilySplit{};
    for (std::size_t i = 0; i < m; ++i) {
        if (ws.screen_abs[i] >= lambda)
            out.split.family1.push_back(i);
        else
            out.split.family2.push_back(i);
    }
    out.split.m_hat_1 = out.split.family1.size();
    out.split.m_hat_2 = out.split.family2.size();

    // family |T| values ascending, with their precomputed survival values
    std::vector<double> fam1_t, fam2_t, fam1_g, fam2_g;
    fam1_t.reserve(out.split.m_hat_1);
    fam2_t.reserve(out.split.m_hat_2);
    for (std::size_t k = m; k-- > 0;) {
        const std::size_t i = ws.order[k];
        if (ws.screen_abs[i] >= lambda) {
            fam1_t.push_back(ws.t_abs[i]);
            fam1_g.push_back(ws.p_sorted[k]);
        } else {
            fam2_t.push_back(ws.t_abs[i]);
            fam2_g.push_back(ws.p_sorted[k]);
        }
    }
    out.t1_hat = threshold_from_sorted(fam1_t, fam1_g, out.split.m_hat_1, alpha, df);
    out.t2_hat = threshold_from_sorted(fam2_t, fam2_g, out.split.m_hat_2, alpha, df);

    out.rejected.clear();
    for (std::size_t i = 0; i < m; ++i) {
        const double thr = ws.screen_abs[i] >= lambda ? out.t1_hat : out.t2_hat;
        if (ws.t_abs[i] >= thr) out.rejected.push_back(i);
    }
}

inline UsResult grid_search_procedure(std::span<const double> t,
                                      std::span<const double> screen,
                                      DegreesOfFreedom df, double alpha,
                                      const LambdaGrid& grid) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::domain_error("us procedure: alpha must be in (0, 1)");
    if (t.size() != screen.size())
        throw std::invalid_argument("us procedure: statistic length mismatch");

    const ScanWorkspace ws = make_scan_workspace(t, screen, df);

    UsResult out;
    out.df = df;
    out.per_lambda_rejection_counts.resize(grid.levels.size());
    std::size_t best_count = 0;
    std::size_t best_index = 0;
    for (std::size_t L = 0; L < grid.levels.size(); ++L) {
        const auto [r1, r2] = scan_rejections(ws, grid.levels[L], alpha);
        out.per_lambda_rejection_counts[L] = r1 + r2;
        if (r1 + r2 >= best_count) { // ties resolve to the largest index
            best_count = r1 + r2;
            best_index = L;
        }
    }
    out.lambda_index = static_cast<int>(best_index);
    out.lambda_hat = grid.levels[best_index];
    finalize_at_level(ws, out.lambda_hat, alpha, df, out);
    return out;
}

inline UsResult fixed_level_procedure(std::span<const double> t,
                                      std::span<const double> screen,
                                      DegreesOfFreedom df, double alpha,
                                      double lambda) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::domain_error("us procedure: alpha must be in (0, 1)");
    const ScanWorkspace ws = make_scan_workspace(t, screen, df);
    UsResult out;
    out.df = df;
    out.lambda_index = 0;
    out.lambda_hat = lambda;
    const auto [r1, r2] = scan_rejections(ws, lambda, alpha);
    out.per_lambda_rejection_counts = {r1 + r2};
    finalize_at_level(ws, lambda, alpha, df, out);
    return out;
}

} // namespace detail

/// The uncorrelated-screening procedure: split features into two families by
/// |S_i| >= lambda for every grid level, threshold each family, and keep the
/// level with the most rejections (largest index on ties).
inline UsResult us_procedure(const TestStatistics& stats, double alpha, int n_grid) {
    const LambdaGrid grid(n_grid, static_cast<double>(stats.t.size()));
    return detail::grid_search_procedure(stats.t, stats.s, stats.df, alpha, grid);
}

enum class LambdaRule {
    GridSearch,      // data-driven lambda-hat over the grid
    FixedSqrt2LogM,  // single level sqrt(2 log m)
};

/// Same two-family mechanics with a caller-supplied screening vector
/// (magnitudes are compared against the level).
inline UsResult screened_procedure(std::span<const double> screen,
                                   const TestStatistics& stats, double alpha,
                                   LambdaRule rule, int n_grid = 10) {
    if (screen.size() != stats.t.size())
        throw std::invalid_argument("screened_procedure: screen length mismatch");
    if (rule == LambdaRule::GridSearch) {
        const LambdaGrid grid(n_grid, static_cast<double>(stats.t.size()));
        return detail::grid_search_procedure(stats.t, screen, stats.df, alpha, grid);
    }
    const double lambda = std::sqrt(2.0 * std::log(static_cast<double>(stats.t.size())));
    return detail::fixed_level_procedure(stats.t, screen, stats.df, alpha, lambda);
}

enum class ScreenKind { SumOfSquares, Maximum };

/// Testing-after-screening with sample splitting: the screen (SS or MS) is
/// built from the first n_screen samples of each group, the two-sample t
/// statistics from the remaining samples (df follows the testing subsample).
inline UsResult split_sample_procedure(const TwoSampleDataset& data, double alpha,
                                       ScreenKind kind, std::size_t n_screen,
                                       VarianceRegime regime = VarianceRegime::EqualVariances,
                                       int n_grid = 10) {
    const std::size_t n1 = data.group1.n_samples();
    const std::size_t n2 = data.group2.n_samples();
    if (n_screen < 2)
        throw std::domain_error("split_sample_procedure: need >= 2 screening samples");
    if (n_screen + 2 > n1 || n_screen + 2 > n2)
        throw std::domain_error("split_sample_procedure: too few samples left for testing");

    const std::size_t m = data.n_features();
    std::vector<double> screen(m);
    for (std::size_t i = 0; i < m; ++i) {
        double t1, t2;
        try {
            t1 = one_sample_t(data.group1.feature(i).subspan(0, n_screen));
            t2 = one_sample_t(data.group2.feature(i).subspan(0, n_screen));
        } catch (const DegenerateVariance&) {
            throw DegenerateVariance("zero variance in screening subsample", i);
        }
        screen[i] = kind == ScreenKind::SumOfSquares ? std::hypot(t1, t2)
                                                     : std::max(std::fabs(t1), std::fabs(t2));
    }

    GroupSamples rest1(n1 - n_screen, m);
    GroupSamples rest2(n2 - n_screen, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = n_screen; k < n1; ++k)
            rest1.at(k - n_screen, i) = data.group1.at(k, i);
        for (std::size_t k = n_screen; k < n2; ++k)
            rest2.at(k - n_screen, i) = data.group2.at(k, i);
    }
    const TwoSampleDataset testing(std::move(rest1), std::move(rest2));
    const TestStatistics stats = compute_statistics(testing, regime);

    const LambdaGrid grid(n_grid, static_cast<double>(m));
    return detail::grid_search_procedure(stats.t, screen, stats.df, alpha, grid);
}

} // namespace usfdr
