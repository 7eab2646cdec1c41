#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "usfdr/procedures.hpp"
#include "usfdr/rng.hpp"
#include "usfdr/stats.hpp"

namespace usfdr {

enum class ModelKind { Model1, Model2, Model3, Model4, Model5, ParametricThetaBeta };
enum class NoiseKind { Gaussian, ScaledStudentT };

/// One simulated scenario: mean structure, sample sizes, and noise law.
struct ModelSpec {
    ModelKind kind = ModelKind::Model1;
    std::size_t m = 2000;
    std::size_t n1 = 100;
    std::size_t n2 = 100;
    VarianceRegime variance_regime = VarianceRegime::EqualVariances;
    NoiseKind noise = NoiseKind::Gaussian;
    double noise_df = 5.0; // ScaledStudentT only; must exceed 2
    double theta = 1.0;    // ParametricThetaBeta only
    double beta = 0.5;     // ParametricThetaBeta only

    // Population variances follow the regime: (1, 1) or (0.5, 1).
    double sigma1_sq() const {
        return variance_regime == VarianceRegime::EqualVariances ? 1.0 : 0.5;
    }
    double sigma2_sq() const { return 1.0; }
};

struct GroundTruth {
    std::vector<double> mu1, mu2;
    std::vector<std::size_t> h0_set, h1_set; // mu1 == mu2 vs mu1 != mu2
    std::size_t m0 = 0, m1 = 0;
};

/// Mean vectors and the null/alternative partition for a model.
/// Features whose means are nonzero but equal in both groups are nulls.
inline GroundTruth build_means(const ModelSpec& spec) {
    if (spec.m < 2)
        throw std::domain_error("build_means: need m >= 2");
    const double m_d = static_cast<double>(spec.m);
    const double logm = std::log(m_d);
    const double a1 = std::sqrt(logm / static_cast<double>(spec.n1));
    const double a2 = std::sqrt(logm / static_cast<double>(spec.n2));
    const std::size_t root_m = static_cast<std::size_t>(std::floor(std::sqrt(m_d)));

    GroundTruth truth;
    truth.mu1.assign(spec.m, 0.0);
    truth.mu2.assign(spec.m, 0.0);

    switch (spec.kind) {
    case ModelKind::Model1:
        for (std::size_t i = 0; i < root_m; ++i) {
            truth.mu1[i] = 3.0 * a1;
            truth.mu2[i] = 2.0 * a2;
        }
        break;
    case ModelKind::Model2:
        for (std::size_t i = 0; i < root_m; ++i) {
            truth.mu1[i] = 2.0 * a1;
            truth.mu2[i] = i < root_m / 2 ? a2 : -0.5 * a2;
        }
        break;
    case ModelKind::Model3:
        for (std::size_t i = 0; i < root_m; ++i) {
            truth.mu1[i] = 3.0 * a1;
            truth.mu2[i] = 2.0 * a2;
        }
        for (std::size_t i = root_m; i < spec.m; ++i) {
            const double v = (static_cast<double>(i + 1) / m_d) * a1;
            truth.mu1[i] = v;
            truth.mu2[i] = v;
        }
        break;
    case ModelKind::Model4:
        for (std::size_t i = 0; i < root_m; ++i) {
            truth.mu1[i] = 3.0 * a1;
            truth.mu2[i] = 2.0 * a2;
        }
        for (std::size_t i = root_m; i < spec.m; ++i) {
            const double v = i < 2 * root_m ? 1.0 : 0.2;
            truth.mu1[i] = v;
            truth.mu2[i] = v;
        }
        break;
    case ModelKind::Model5:
        for (std::size_t i = 0; i < root_m; ++i) {
            truth.mu1[i] = 1.5 * a1;
            truth.mu2[i] = -0.5 * a1; // both scaled by n1, as defined
        }
        break;
    case ModelKind::ParametricThetaBeta: {
        if (!(spec.beta > 0.0 && spec.beta < 1.0))
            throw std::domain_error("build_means: beta must be in (0, 1)");
        if (!(spec.theta >= 0.0))
            throw std::domain_error("build_means: theta must be nonnegative");
        // theta == 0 degenerates to the global null (no true signals)
        const std::size_t n_signal =
            static_cast<std::size_t>(std::floor(std::pow(m_d, spec.beta)));
        const double se = std::sqrt(spec.sigma1_sq() / static_cast<double>(spec.n1)
                                    + spec.sigma2_sq() / static_cast<double>(spec.n2));
        const double delta = spec.theta * std::sqrt(logm) * se;
        for (std::size_t i = 0; i < n_signal && i < spec.m; ++i)
            truth.mu1[i] = delta; // difference placed entirely in group 1
        break;
    }
    }

    for (std::size_t i = 0; i < spec.m; ++i) {
        if (truth.mu1[i] != truth.mu2[i])
            truth.h1_set.push_back(i);
        else
            truth.h0_set.push_back(i);
    }
    truth.m0 = truth.h0_set.size();
    truth.m1 = truth.h1_set.size();
    return truth;
}

/// Identifies one replication's random streams.
struct StreamKey {
    std::uint64_t master_seed = 0;
    std::uint64_t replication = 0;
};

/// I.i.d. rows with independent features; noise is centered and scaled to
/// the regime's variance (a scaled Student-t needs df > 2 for that).
inline TwoSampleDataset generate_dataset(const ModelSpec& spec, const GroundTruth& truth,
                                         StreamKey key) {
    if (truth.mu1.size() != spec.m || truth.mu2.size() != spec.m)
        throw std::invalid_argument("generate_dataset: truth does not match spec");
    if (spec.noise == NoiseKind::ScaledStudentT && !(spec.noise_df > 2.0))
        throw std::domain_error("generate_dataset: Student-t noise needs df > 2");

    const double sd[2] = {std::sqrt(spec.sigma1_sq()), std::sqrt(spec.sigma2_sq())};
    const double t_scale = spec.noise == NoiseKind::ScaledStudentT
                               ? std::sqrt((spec.noise_df - 2.0) / spec.noise_df)
                               : 0.0;

    GroupSamples g1(spec.n1, spec.m);
    GroupSamples g2(spec.n2, spec.m);
    for (std::size_t group = 0; group < 2; ++group) {
        GroupSamples& g = group == 0 ? g1 : g2;
        const std::vector<double>& mu = group == 0 ? truth.mu1 : truth.mu2;
        const std::size_t n = group == 0 ? spec.n1 : spec.n2;
        for (std::size_t i = 0; i < spec.m; ++i) {
            RngStream stream = RngStream::keyed(key.master_seed, key.replication,
                                                group + 1, i);
            auto col = g.feature(i);
            for (std::size_t k = 0; k < n; ++k) {
                const double eps = spec.noise == NoiseKind::Gaussian
                                       ? stream.next_gaussian()
                                       : stream.next_student_t(spec.noise_df) * t_scale;
                col[k] = mu[i] + sd[group] * eps;
            }
        }
    }
    return TwoSampleDataset(std::move(g1), std::move(g2));
}

enum class Method { Bh, Us, SsScreen, MsScreen, SplitSs, SplitMs };

inline const char* method_name(Method m) {
    switch (m) {
    case Method::Bh: return "bh";
    case Method::Us: return "us";
    case Method::SsScreen: return "ss-screen";
    case Method::MsScreen: return "ms-screen";
    case Method::SplitSs: return "split-ss";
    case Method::SplitMs: return "split-ms";
    }
    return "?";
}

struct ReplicationOutcome {
    double fdp = 0.0;
    double power = 0.0; // 0 when m1 == 0 (not applicable)
    std::size_t n_rejected = 0;
    double lambda_hat = 0.0; // 0 for the B-H method
    Method method = Method::Bh;
};

namespace detail {

inline ReplicationOutcome evaluate_rejections(const std::vector<std::size_t>& rejected,
                                              const GroundTruth& truth) {
    std::vector<char> is_null(truth.mu1.size(), 0);
    for (std::size_t i : truth.h0_set) is_null[i] = 1;
    std::size_t false_rej = 0;
    for (std::size_t i : rejected)
        if (is_null[i]) ++false_rej;

    ReplicationOutcome out;
    out.n_rejected = rejected.size();
    out.fdp = static_cast<double>(false_rej)
              / std::max<double>(1.0, static_cast<double>(rejected.size()));
    out.power = truth.m1 == 0
                    ? 0.0
                    : static_cast<double>(rejected.size() - false_rej)
                          / static_cast<double>(truth.m1);
    return out;
}

} // namespace detail

inline ReplicationOutcome evaluate_replication(const UsResult& result,
                                               const GroundTruth& truth,
                                               Method method = Method::Us) {
    ReplicationOutcome out = detail::evaluate_rejections(result.rejected, truth);
    out.lambda_hat = result.lambda_hat;
    out.method = method;
    return out;
}

inline ReplicationOutcome evaluate_replication(const BhResult& result,
                                               const GroundTruth& truth,
                                               Method method = Method::Bh) {
    ReplicationOutcome out = detail::evaluate_rejections(result.rejected, truth);
    out.method = method;
    return out;
}

struct ExperimentSummary {
    double alpha = 0.0;
    Method method = Method::Bh;
    double e_fdr = 0.0;
    double e_power = 0.0;
    std::size_t n_replications = 0;
    std::vector<double> fdp_trace;
    std::vector<double> power_trace;
    double mean_lambda_hat = 0.0;
    double mean_rejections = 0.0;
};

struct ExperimentOptions {
    int n_grid = 10;
    bool fixed_lambda = false;  // screen baselines use sqrt(2 log m)
    std::size_t n_screen = 0;   // split methods; 0 means half of each group
    unsigned n_threads = 0;     // 0: USFDR_THREADS env var, then hardware
};

namespace detail {

inline unsigned resolve_thread_count(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("USFDR_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

} // namespace detail

/// Runs n_reps replications; each replication generates one dataset shared
/// by every method and every alpha (paired comparison). Deterministic for a
/// fixed master seed regardless of thread schedule.
inline std::vector<ExperimentSummary>
run_experiment(const ModelSpec& spec, const std::vector<Method>& methods,
               const std::vector<double>& alphas, std::size_t n_reps,
               std::uint64_t master_seed, const ExperimentOptions& options = {}) {
    if (methods.empty())
        throw std::invalid_argument("run_experiment: no methods given");
    if (alphas.empty())
        throw std::invalid_argument("run_experiment: no alpha levels given");
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0))
            throw std::invalid_argument("run_experiment: alpha levels must be in (0, 1)");
    if (n_reps < 1)
        throw std::invalid_argument("run_experiment: need at least one replication");

    const GroundTruth truth = build_means(spec);
    const std::size_t n_cells = methods.size() * alphas.size();
    std::vector<std::vector<ReplicationOutcome>> outcomes(
        n_cells, std::vector<ReplicationOutcome>(n_reps));

    const bool wants_bh = std::find(methods.begin(), methods.end(), Method::Bh) != methods.end();
    const bool wants_screens =
        std::find(methods.begin(), methods.end(), Method::SsScreen) != methods.end()
        || std::find(methods.begin(), methods.end(), Method::MsScreen) != methods.end();

    std::atomic<std::size_t> next_rep{0};
    std::atomic<bool> failed{false};
    std::string failure;
    std::mutex failure_mutex;

    auto worker = [&]() {
        for (;;) {
            const std::size_t rep = next_rep.fetch_add(1);
            if (rep >= n_reps || failed.load()) return;
            try {
                const TwoSampleDataset data =
                    generate_dataset(spec, truth, {master_seed, rep});
                const TestStatistics stats =
                    compute_statistics(data, spec.variance_regime);
                std::vector<double> pvals;
                if (wants_bh) pvals = p_values_from_t(stats);
                BaselineScreens screens;
                if (wants_screens) screens = baseline_screens(data);

                for (std::size_t mi = 0; mi < methods.size(); ++mi) {
                    const Method method = methods[mi];
                    for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
                        const double alpha = alphas[ai];
                        ReplicationOutcome outcome;
                        switch (method) {
                        case Method::Bh:
                            outcome = evaluate_replication(
                                bh_procedure(pvals, alpha), truth, method);
                            break;
                        case Method::Us:
                            outcome = evaluate_replication(
                                us_procedure(stats, alpha, options.n_grid), truth, method);
                            break;
                        case Method::SsScreen:
                        case Method::MsScreen: {
                            const auto& screen = method == Method::SsScreen
                                                     ? screens.ss : screens.ms;
                            const LambdaRule rule = options.fixed_lambda
                                                        ? LambdaRule::FixedSqrt2LogM
                                                        : LambdaRule::GridSearch;
                            outcome = evaluate_replication(
                                screened_procedure(screen, stats, alpha, rule,
                                                   options.n_grid),
                                truth, method);
                            break;
                        }
                        case Method::SplitSs:
                        case Method::SplitMs: {
                            const std::size_t n_screen =
                                options.n_screen > 0 ? options.n_screen
                                                     : std::min(spec.n1, spec.n2) / 2;
                            const ScreenKind kind = method == Method::SplitSs
                                                        ? ScreenKind::SumOfSquares
                                                        : ScreenKind::Maximum;
                            outcome = evaluate_replication(
                                split_sample_procedure(data, alpha, kind, n_screen,
                                                       spec.variance_regime,
                                                       options.n_grid),
                                truth, method);
                            break;
                        }
                        }
                        outcomes[mi * alphas.size() + ai][rep] = outcome;
                    }
                }
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failed.exchange(true))
                    failure = "replication " + std::to_string(rep) + ": " + e.what();
                return;
            }
        }
    };

    const unsigned n_threads =
        static_cast<unsigned>(std::min<std::size_t>(
            detail::resolve_thread_count(options.n_threads), n_reps));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failed.load())
        throw std::runtime_error("run_experiment: " + failure);

    std::vector<ExperimentSummary> summaries;
    summaries.reserve(n_cells);
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
            const auto& cell = outcomes[mi * alphas.size() + ai];
            ExperimentSummary s;
            s.alpha = alphas[ai];
            s.method = methods[mi];
            s.n_replications = n_reps;
            s.fdp_trace.reserve(n_reps);
            s.power_trace.reserve(n_reps);
            double fdr = 0.0, power = 0.0, lambda = 0.0, rejections = 0.0;
            for (const ReplicationOutcome& o : cell) {
                s.fdp_trace.push_back(o.fdp);
                s.power_trace.push_back(o.power);
                fdr += o.fdp;
                power += o.power;
                lambda += o.lambda_hat;
                rejections += static_cast<double>(o.n_rejected);
            }
            const double denom = static_cast<double>(n_reps);
            s.e_fdr = fdr / denom;
            s.e_power = power / denom;
            s.mean_lambda_hat = lambda / denom;
            s.mean_rejections = rejections / denom;
            summaries.push_back(std::move(s));
        }
    }
    return summaries;
}

} // namespace usfdr
