// usfdr: uncorrelated-screening FDR control for large-scale two-sample
// t testing, with a Monte Carlo engine for FDR/power studies.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "usfdr/config.hpp"
#include "usfdr/dataset_io.hpp"
#include "usfdr/report.hpp"

namespace fs = std::filesystem;
using namespace usfdr;

namespace {

struct AnalyzeFlags {
    std::string data_path;
    std::string method = "us";
    double alpha = 0.1;
    std::string regime = "equal";
    int n_grid = 10;
    bool fixed_lambda = false;
    std::size_t n_screen = 0;
    std::string out_path;
};

struct ReproduceFlags {
    int figure = 1;
    std::size_t n_reps = 500;
    std::uint64_t seed = 1;
    std::string out_dir = "results";
};

void run_config_to_files(const RunConfig& cfg) {
    ExperimentOptions options;
    options.n_grid = cfg.n_grid;
    options.fixed_lambda = cfg.fixed_lambda;
    options.n_screen = cfg.n_screen;

    const auto summaries = run_experiment(cfg.model, cfg.methods, cfg.alphas,
                                          cfg.n_reps, cfg.master_seed, options);
    ResultsTable table;
    for (const auto& s : summaries)
        table.add(cfg.model_name, s, cfg.fixed_lambda ? "-fixed" : "");

    fs::create_directories(cfg.output_dir);
    const fs::path csv = cfg.output_dir / "results.csv";
    emit_csv(table, csv);
    const fs::path power_svg = cfg.output_dir / "power.svg";
    emit_plot(table, PlotAxis::Power, power_svg);
    const fs::path ratio_svg = cfg.output_dir / "fdr_ratio.svg";
    emit_plot(table, PlotAxis::FdrOverAlpha, ratio_svg);

    std::cout << "wrote " << csv.string() << "\n"
              << "wrote " << power_svg.string() << "\n"
              << "wrote " << ratio_svg.string() << "\n";
}

void analyze_dataset(const AnalyzeFlags& f) {
    const LabeledDataset labeled = read_dataset_csv(f.data_path);
    const TwoSampleDataset& data = labeled.data;
    const VarianceRegime regime = f.regime == "unequal"
                                      ? VarianceRegime::UnequalVariances
                                      : VarianceRegime::EqualVariances;
    if (f.regime != "equal" && f.regime != "unequal")
        throw std::invalid_argument("--regime must be 'equal' or 'unequal'");
    if (!(f.alpha > 0.0 && f.alpha < 1.0))
        throw std::invalid_argument("--alpha must lie in (0, 1)");
    const Method method = cli::method_from_name(f.method);

    const TestStatistics stats = compute_statistics(data, regime);
    const std::vector<double> pvals = p_values_from_t(stats);
    const std::size_t m = data.n_features();

    std::vector<std::size_t> rejected;
    std::vector<int> family(m, 0);
    double lambda_hat = 0.0, t1 = 0.0, t2 = 0.0;

    auto apply_us_style = [&](const UsResult& r) {
        rejected = r.rejected;
        lambda_hat = r.lambda_hat;
        t1 = r.t1_hat;
        t2 = r.t2_hat;
        for (std::size_t i : r.split.family1) family[i] = 1;
        for (std::size_t i : r.split.family2) family[i] = 2;
    };

    switch (method) {
    case Method::Bh: {
        const BhResult r = bh_procedure(pvals, f.alpha);
        rejected = r.rejected;
        break;
    }
    case Method::Us:
        apply_us_style(us_procedure(stats, f.alpha, f.n_grid));
        break;
    case Method::SsScreen:
    case Method::MsScreen: {
        const BaselineScreens screens = baseline_screens(data);
        const auto& screen = method == Method::SsScreen ? screens.ss : screens.ms;
        const LambdaRule rule = f.fixed_lambda ? LambdaRule::FixedSqrt2LogM
                                               : LambdaRule::GridSearch;
        apply_us_style(screened_procedure(screen, stats, f.alpha, rule, f.n_grid));
        break;
    }
    case Method::SplitSs:
    case Method::SplitMs: {
        const std::size_t n_screen =
            f.n_screen > 0 ? f.n_screen
                           : std::min(data.group1.n_samples(), data.group2.n_samples()) / 2;
        const ScreenKind kind = method == Method::SplitSs ? ScreenKind::SumOfSquares
                                                          : ScreenKind::Maximum;
        apply_us_style(split_sample_procedure(data, f.alpha, kind, n_screen,
                                              regime, f.n_grid));
        break;
    }
    }

    std::cout << "features:   " << m << "\n"
              << "samples:    " << data.group1.n_samples() << " + "
              << data.group2.n_samples() << "\n"
              << "method:     " << f.method << "\n"
              << "alpha:      " << f.alpha << "\n"
              << "rejections: " << rejected.size() << "\n";
    if (method != Method::Bh) {
        std::cout << "lambda_hat: " << lambda_hat << "\n"
                  << "t1_hat:     " << t1 << "\n"
                  << "t2_hat:     " << t2 << "\n";
    }

    if (!f.out_path.empty()) {
        std::ofstream out(f.out_path);
        if (!out)
            throw std::runtime_error("cannot open for writing: " + f.out_path);
        std::vector<char> is_rejected(m, 0);
        for (std::size_t i : rejected) is_rejected[i] = 1;
        out << "feature,t,p_value,screening,family,rejected\n";
        for (std::size_t i = 0; i < m; ++i) {
            out << labeled.feature_names[i] << ','
                << detail::format_g6(stats.t[i]) << ','
                << detail::format_g6(pvals[i]) << ','
                << detail::format_g6(stats.s[i]) << ','
                << family[i] << ','
                << static_cast<int>(is_rejected[i]) << '\n';
        }
        std::cout << "wrote " << f.out_path << "\n";
    }
}

std::vector<double> default_alpha_grid() {
    std::vector<double> alphas;
    for (int i = 1; i <= 19; ++i) alphas.push_back(static_cast<double>(i) / 20.0);
    return alphas;
}

void reproduce_figure(const ReproduceFlags& f) {
    if (f.figure < 1 || f.figure > 6)
        throw std::invalid_argument("--figure must be 1..6");
    fs::create_directories(f.out_dir);
    const std::vector<double> alphas = default_alpha_grid();

    ResultsTable table;
    PlotAxis axis = PlotAxis::Power;

    auto add_models_1_to_4 = [&](VarianceRegime regime) {
        for (int k = 1; k <= 4; ++k) {
            ModelSpec spec;
            spec.kind = static_cast<ModelKind>(k - 1);
            spec.variance_regime = regime;
            const auto summaries = run_experiment(spec, {Method::Bh, Method::Us},
                                                  alphas, f.n_reps, f.seed);
            for (const auto& s : summaries)
                table.add("model" + std::to_string(k), s);
            std::cout << "model" << k << " done\n";
        }
    };

    switch (f.figure) {
    case 1:
        add_models_1_to_4(VarianceRegime::EqualVariances);
        axis = PlotAxis::Power;
        break;
    case 2:
        add_models_1_to_4(VarianceRegime::UnequalVariances);
        axis = PlotAxis::Power;
        break;
    case 3:
        add_models_1_to_4(VarianceRegime::EqualVariances);
        axis = PlotAxis::FdrOverAlpha;
        break;
    case 4:
        add_models_1_to_4(VarianceRegime::UnequalVariances);
        axis = PlotAxis::FdrOverAlpha;
        break;
    case 5: {
        ModelSpec spec;
        spec.kind = ModelKind::Model4;
        for (const bool fixed : {false, true}) {
            ExperimentOptions options;
            options.fixed_lambda = fixed;
            const auto summaries =
                run_experiment(spec, {Method::SsScreen, Method::MsScreen}, alphas,
                               f.n_reps, f.seed, options);
            for (const auto& s : summaries)
                table.add("model4", s, fixed ? "-fixed" : "");
        }
        axis = PlotAxis::FdrOverAlpha;
        break;
    }
    case 6: {
        ModelSpec spec;
        spec.kind = ModelKind::Model5;
        const auto summaries = run_experiment(
            spec, {Method::Bh, Method::Us, Method::SplitSs, Method::SplitMs},
            alphas, f.n_reps, f.seed);
        for (const auto& s : summaries)
            table.add("model5", s);
        axis = PlotAxis::Power;
        break;
    }
    }

    const fs::path csv = fs::path(f.out_dir)
                         / ("figure" + std::to_string(f.figure) + ".csv");
    const fs::path svg = fs::path(f.out_dir)
                         / ("figure" + std::to_string(f.figure) + ".svg");
    emit_csv(table, csv);
    emit_plot(table, axis, svg);
    std::cout << "wrote " << csv.string() << "\n"
              << "wrote " << svg.string() << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"uncorrelated-screening FDR control for two-sample t tests"};
    app.require_subcommand(1);

    cli::RunFlags run_flags;
    CLI::App* run_cmd = app.add_subcommand(
        "run", "run a Monte Carlo experiment and write CSV + plots");
    cli::attach_run_options(*run_cmd, run_flags);

    AnalyzeFlags an;
    CLI::App* analyze_cmd =
        app.add_subcommand("analyze", "apply a procedure to a dataset CSV");
    analyze_cmd->add_option("--data", an.data_path, "dataset CSV (see README)")->required();
    analyze_cmd->add_option("--method", an.method, "bh, us, ss-screen, ms-screen, split-ss, split-ms");
    analyze_cmd->add_option("--alpha", an.alpha, "target FDR level");
    analyze_cmd->add_option("--regime", an.regime, "equal or unequal variances");
    analyze_cmd->add_option("--n-grid", an.n_grid, "lambda grid resolution N");
    analyze_cmd->add_flag("--fixed-lambda", an.fixed_lambda,
                          "screen baselines use lambda = sqrt(2 log m)");
    analyze_cmd->add_option("--n-screen", an.n_screen,
                            "screening samples per group for split methods");
    analyze_cmd->add_option("--out", an.out_path, "per-feature results CSV");

    ReproduceFlags rp;
    CLI::App* reproduce_cmd =
        app.add_subcommand("reproduce", "canned experiment configurations (figures 1-6)");
    reproduce_cmd->add_option("--figure", rp.figure, "figure number, 1..6")->required();
    reproduce_cmd->add_option("--n-reps", rp.n_reps, "Monte Carlo replications");
    reproduce_cmd->add_option("--seed", rp.seed, "master seed");
    reproduce_cmd->add_option("--out", rp.out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (run_cmd->parsed()) {
            run_config_to_files(cli::finalize_run_config(run_flags));
        } else if (analyze_cmd->parsed()) {
            analyze_dataset(an);
        } else if (reproduce_cmd->parsed()) {
            reproduce_figure(rp);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
