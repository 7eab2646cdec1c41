#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "usfdr/simulation.hpp"

namespace usfdr {

/// Everything one `run` invocation needs; defaults follow the reference
/// study (m = 2000, n1 = n2 = 100, 500 replications, N = 10, alpha = i/20).
struct RunConfig {
    ModelSpec model;
    std::string model_name = "model1";
    std::vector<Method> methods{Method::Bh, Method::Us};
    std::vector<double> alphas;
    std::size_t n_reps = 500;
    int n_grid = 10;
    std::uint64_t master_seed = 1;
    bool fixed_lambda = false;
    std::size_t n_screen = 0;
    std::filesystem::path output_dir = "results";
};

namespace cli {

inline ModelKind model_kind_from_name(const std::string& name) {
    if (name == "model1") return ModelKind::Model1;
    if (name == "model2") return ModelKind::Model2;
    if (name == "model3") return ModelKind::Model3;
    if (name == "model4") return ModelKind::Model4;
    if (name == "model5") return ModelKind::Model5;
    if (name == "theta-beta") return ModelKind::ParametricThetaBeta;
    throw std::invalid_argument("unknown model: '" + name
                                + "' (expected model1..model5 or theta-beta)");
}

inline Method method_from_name(const std::string& name) {
    if (name == "bh") return Method::Bh;
    if (name == "us") return Method::Us;
    if (name == "ss-screen") return Method::SsScreen;
    if (name == "ms-screen") return Method::MsScreen;
    if (name == "split-ss") return Method::SplitSs;
    if (name == "split-ms") return Method::SplitMs;
    throw std::invalid_argument("unknown method: '" + name + "'");
}

/// Raw flag values; turned into a RunConfig by finalize_run_config.
struct RunFlags {
    std::string model;
    std::vector<std::string> methods{"bh", "us"};
    std::vector<double> alphas;
    std::size_t n_reps = 500;
    int n_grid = 10;
    std::uint64_t seed = 1;
    bool fixed_lambda = false;
    std::size_t n_screen = 0;
    std::string out_dir = "results";
    std::size_t m = 2000;
    std::size_t n1 = 100;
    std::size_t n2 = 100;
    std::string regime = "equal";
    std::string noise = "gaussian";
    double noise_df = 5.0;
    double theta = 1.0;
    double beta = 0.5;
};

inline void attach_run_options(CLI::App& app, RunFlags& f) {
    app.add_option("--model", f.model,
                   "model1..model5 or theta-beta")->required();
    app.add_option("--methods", f.methods,
                   "comma-separated: bh,us,ss-screen,ms-screen,split-ss,split-ms")
        ->delimiter(',');
    app.add_option("--alpha", f.alphas, "target FDR level(s); default i/20, i=1..20")
        ->delimiter(',');
    app.add_option("--n-reps", f.n_reps, "Monte Carlo replications");
    app.add_option("--n-grid", f.n_grid, "lambda grid resolution N");
    app.add_option("--seed", f.seed, "master seed for the replication streams");
    app.add_flag("--fixed-lambda", f.fixed_lambda,
                 "screen baselines use lambda = sqrt(2 log m) instead of the grid");
    app.add_option("--n-screen", f.n_screen,
                   "screening samples per group for split methods (default: half)");
    app.add_option("--out", f.out_dir, "output directory");
    app.add_option("--m", f.m, "feature count");
    app.add_option("--n1", f.n1, "group 1 sample size");
    app.add_option("--n2", f.n2, "group 2 sample size");
    app.add_option("--regime", f.regime, "equal or unequal variances");
    app.add_option("--noise", f.noise, "gaussian or student-t");
    app.add_option("--noise-df", f.noise_df, "df for student-t noise (must exceed 2)");
    app.add_option("--theta", f.theta, "theta-beta model: signal size multiplier");
    app.add_option("--beta", f.beta, "theta-beta model: sparsity exponent");
    app.set_config("--config", "", "flat key=value file mirroring the flag names");
}

inline RunConfig finalize_run_config(const RunFlags& f) {
    RunConfig cfg;
    cfg.model_name = f.model;
    cfg.model.kind = model_kind_from_name(f.model);
    cfg.model.m = f.m;
    cfg.model.n1 = f.n1;
    cfg.model.n2 = f.n2;
    if (f.regime == "equal")
        cfg.model.variance_regime = VarianceRegime::EqualVariances;
    else if (f.regime == "unequal")
        cfg.model.variance_regime = VarianceRegime::UnequalVariances;
    else
        throw std::invalid_argument("--regime must be 'equal' or 'unequal', got '"
                                    + f.regime + "'");
    if (f.noise == "gaussian")
        cfg.model.noise = NoiseKind::Gaussian;
    else if (f.noise == "student-t")
        cfg.model.noise = NoiseKind::ScaledStudentT;
    else
        throw std::invalid_argument("--noise must be 'gaussian' or 'student-t', got '"
                                    + f.noise + "'");
    cfg.model.noise_df = f.noise_df;
    cfg.model.theta = f.theta;
    cfg.model.beta = f.beta;

    if (f.methods.empty())
        throw std::invalid_argument("--methods must name at least one method");
    cfg.methods.clear();
    for (const std::string& name : f.methods)
        cfg.methods.push_back(method_from_name(name));

    cfg.alphas = f.alphas;
    if (cfg.alphas.empty()) {
        // i/20 grid, stopping at 0.95: target levels must stay inside (0, 1)
        for (int i = 1; i <= 19; ++i)
            cfg.alphas.push_back(static_cast<double>(i) / 20.0);
    }
    std::sort(cfg.alphas.begin(), cfg.alphas.end());
    for (std::size_t i = 0; i < cfg.alphas.size(); ++i) {
        if (!(cfg.alphas[i] > 0.0 && cfg.alphas[i] < 1.0))
            throw std::invalid_argument("--alpha values must lie in (0, 1)");
        if (i > 0 && cfg.alphas[i] == cfg.alphas[i - 1])
            throw std::invalid_argument("--alpha values must be distinct");
    }

    if (f.n_reps < 1)
        throw std::invalid_argument("--n-reps must be at least 1");
    if (f.n_grid < 1)
        throw std::invalid_argument("--n-grid must be at least 1");

    cfg.n_reps = f.n_reps;
    cfg.n_grid = f.n_grid;
    cfg.master_seed = f.seed;
    cfg.fixed_lambda = f.fixed_lambda;
    cfg.n_screen = f.n_screen;
    cfg.output_dir = f.out_dir;
    return cfg;
}

/// Parses `run` flags from an argument list (no program name). Throws
/// std::invalid_argument on anything a user got wrong.
inline RunConfig parse_run_config(const std::vector<std::string>& args) {
    CLI::App app{"usfdr run"};
    RunFlags flags;
    attach_run_options(app, flags);
    std::vector<const char*> argv;
    argv.push_back("run");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        throw std::invalid_argument(e.what());
    }
    return finalize_run_config(flags);
}

} // namespace cli
} // namespace usfdr
