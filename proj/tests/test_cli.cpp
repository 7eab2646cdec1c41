#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "usfdr/config.hpp"
#include "usfdr/dataset_io.hpp"
#include "usfdr/report.hpp"

using namespace usfdr;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "usfdr_tests";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ResultsTable sample_table() {
    ResultsTable table;
    ExperimentSummary s;
    s.method = Method::Us;
    s.n_replications = 500;
    for (double alpha : {0.05, 0.1, 0.15, 0.2}) {
        s.alpha = alpha;
        s.e_fdr = 0.8 * alpha;
        s.e_power = 0.5 + alpha;
        s.mean_lambda_hat = 1.2345678;
        s.mean_rejections = 47.25;
        table.add("model1", s);
    }
    s.method = Method::Bh;
    for (double alpha : {0.05, 0.1, 0.15, 0.2}) {
        s.alpha = alpha;
        s.e_fdr = 0.9 * alpha;
        s.e_power = 0.1 + alpha;
        s.mean_lambda_hat = 0.0;
        s.mean_rejections = 12.0;
        table.add("model1", s);
    }
    return table;
}

} // namespace

TEST_CASE("parse_run_config fills the reference defaults") {
    const RunConfig cfg = cli::parse_run_config({"--model", "model1", "--methods", "bh,us"});
    REQUIRE(cfg.model.kind == ModelKind::Model1);
    REQUIRE(cfg.model.m == 2000);
    REQUIRE(cfg.model.n1 == 100);
    REQUIRE(cfg.model.n2 == 100);
    REQUIRE(cfg.n_reps == 500);
    REQUIRE(cfg.n_grid == 10);
    REQUIRE(cfg.methods == std::vector<Method>{Method::Bh, Method::Us});
    REQUIRE(cfg.alphas.front() == 0.05);
    REQUIRE(cfg.alphas.back() == 0.95);
}

TEST_CASE("alpha grid default is i/20 within (0, 1)") {
    const RunConfig cfg = cli::parse_run_config({"--model", "model3"});
    REQUIRE(cfg.alphas.size() == 19);
    for (int i = 1; i <= 19; ++i)
        REQUIRE(cfg.alphas[i - 1] == static_cast<double>(i) / 20.0);
}

TEST_CASE("single alpha value") {
    const RunConfig cfg = cli::parse_run_config({"--model", "model1", "--alpha", "0.3"});
    REQUIRE(cfg.alphas == std::vector<double>{0.3});
}

TEST_CASE("parse_run_config validation errors name the offender") {
    REQUIRE_THROWS_AS(cli::parse_run_config({"--model", "model1", "--n-reps", "0"}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(cli::parse_run_config({}), std::invalid_argument); // missing model
    REQUIRE_THROWS_AS(cli::parse_run_config({"--model", "nope"}), std::invalid_argument);
    REQUIRE_THROWS_AS(cli::parse_run_config({"--model", "model1", "--methods", "bh,zz"}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(cli::parse_run_config({"--model", "model1", "--alpha", "1.5"}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(cli::parse_run_config({"--model", "model1", "--alpha", "0.1,0.1"}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(cli::parse_run_config({"--model", "model1", "--bogus-flag", "1"}),
                      std::invalid_argument);

    try {
        cli::parse_run_config({"--model", "model1", "--methods", "bh,zz"});
    } catch (const std::invalid_argument& e) {
        REQUIRE(std::string(e.what()).find("zz") != std::string::npos);
    }
    try {
        cli::parse_run_config({"--model", "martian"});
    } catch (const std::invalid_argument& e) {
        REQUIRE(std::string(e.what()).find("martian") != std::string::npos);
    }
}

TEST_CASE("config file values are read and flags override them") {
    const fs::path file = temp_file("run.conf");
    {
        std::ofstream out(file);
        out << "model=model2\n"
            << "n-reps=7\n"
            << "seed=99\n";
    }
    const RunConfig from_file = cli::parse_run_config({"--config", file.string()});
    REQUIRE(from_file.model.kind == ModelKind::Model2);
    REQUIRE(from_file.n_reps == 7);
    REQUIRE(from_file.master_seed == 99);

    const RunConfig overridden =
        cli::parse_run_config({"--config", file.string(), "--n-reps", "9"});
    REQUIRE(overridden.n_reps == 9);
    REQUIRE(overridden.model.kind == ModelKind::Model2);
}

TEST_CASE("emit_csv is byte-deterministic and sorted") {
    const ResultsTable table = sample_table();
    const fs::path a = temp_file("results_a.csv");
    const fs::path b = temp_file("results_b.csv");
    emit_csv(table, a);
    emit_csv(table, b);
    const std::string text = slurp(a);
    REQUIRE(text == slurp(b));
    REQUIRE(text.rfind(kResultsCsvHeader, 0) == 0);

    // bh rows sort before us rows
    REQUIRE(text.find("model1,bh") < text.find("model1,us"));
    REQUIRE_THROWS_AS(emit_csv(table, fs::path("/nonexistent-dir/x.csv")),
                      std::runtime_error);
}

TEST_CASE("empty table emits a header-only file") {
    const fs::path p = temp_file("empty.csv");
    emit_csv(ResultsTable{}, p);
    REQUIRE(slurp(p) == std::string(kResultsCsvHeader) + "\n");
}

TEST_CASE("results CSV round trips at 6 significant digits") {
    const ResultsTable table = sample_table();
    const fs::path p = temp_file("roundtrip.csv");
    emit_csv(table, p);
    const ResultsTable back = parse_results_csv(p);
    REQUIRE(back.rows.size() == table.rows.size());

    ResultsTable sorted = table;
    sorted.sort();
    for (std::size_t i = 0; i < back.rows.size(); ++i) {
        REQUIRE(back.rows[i].model == sorted.rows[i].model);
        REQUIRE(back.rows[i].method == sorted.rows[i].method);
        REQUIRE(detail::format_g6(back.rows[i].alpha)
                == detail::format_g6(sorted.rows[i].alpha));
        REQUIRE(detail::format_g6(back.rows[i].e_fdr)
                == detail::format_g6(sorted.rows[i].e_fdr));
        REQUIRE(detail::format_g6(back.rows[i].e_power)
                == detail::format_g6(sorted.rows[i].e_power));
        REQUIRE(detail::format_g6(back.rows[i].mean_lambda_hat)
                == detail::format_g6(sorted.rows[i].mean_lambda_hat));
        REQUIRE(back.rows[i].n_reps == sorted.rows[i].n_reps);
    }
}

TEST_CASE("emit_plot draws one polyline per method") {
    ResultsTable table = sample_table();
    // keep a single method so the polyline count is unambiguous
    table.rows.erase(std::remove_if(table.rows.begin(), table.rows.end(),
                                    [](const ResultsRow& r) { return r.method != "us"; }),
                     table.rows.end());
    const fs::path p = temp_file("plot.svg");
    emit_plot(table, PlotAxis::Power, p);
    const std::string svg = slurp(p);

    std::size_t polylines = 0, pos = 0;
    while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
        ++polylines;
        ++pos;
    }
    REQUIRE(polylines == 1);
    REQUIRE(svg.find("power") != std::string::npos);
    REQUIRE(svg.find("alpha") != std::string::npos);
    REQUIRE(svg.find("stroke-dasharray") == std::string::npos);

    emit_plot(table, PlotAxis::FdrOverAlpha, p);
    const std::string ratio_svg = slurp(p);
    REQUIRE(ratio_svg.find("stroke-dasharray") != std::string::npos); // y = 1 reference

    REQUIRE_THROWS_AS(emit_plot(ResultsTable{}, PlotAxis::Power, p), std::invalid_argument);
}

TEST_CASE("identical run configuration gives byte-identical CSV") {
    const RunConfig cfg = cli::parse_run_config(
        {"--model", "model2", "--alpha", "0.1,0.25", "--n-reps", "4", "--m", "120",
         "--n1", "15", "--n2", "15", "--seed", "31"});

    auto produce = [&](const fs::path& path) {
        ExperimentOptions options;
        options.n_grid = cfg.n_grid;
        const auto summaries = run_experiment(cfg.model, cfg.methods, cfg.alphas,
                                              cfg.n_reps, cfg.master_seed, options);
        ResultsTable table;
        for (const auto& s : summaries) table.add(cfg.model_name, s);
        emit_csv(table, path);
    };

    const fs::path a = temp_file("repro_a.csv");
    const fs::path b = temp_file("repro_b.csv");
    produce(a);
    produce(b);
    const std::string text = slurp(a);
    REQUIRE(text == slurp(b));
    REQUIRE(text.find("model2,us,0.25") != std::string::npos);
}

TEST_CASE("dataset CSV reader") {
    const fs::path p = temp_file("data.csv");
    {
        std::ofstream out(p);
        out << "group,f1,f2\n"
            << "1,0.5,2.0\n"
            << "1,0.7,2.2\n"
            << "1,0.6,1.9\n"
            << "2,1.5,0.1\n"
            << "2,1.7,0.3\n";
    }
    const LabeledDataset ds = read_dataset_csv(p);
    REQUIRE(ds.feature_names == std::vector<std::string>{"f1", "f2"});
    REQUIRE(ds.data.group1.n_samples() == 3);
    REQUIRE(ds.data.group2.n_samples() == 2);
    REQUIRE(ds.data.n_features() == 2);
    REQUIRE(ds.data.group1.at(1, 0) == 0.7);
    REQUIRE(ds.data.group2.at(0, 1) == 0.1);
}

TEST_CASE("dataset CSV reader rejects malformed input") {
    const fs::path p = temp_file("bad.csv");

    auto write = [&](const std::string& text) {
        std::ofstream out(p);
        out << text;
    };

    write("f1,f2\n1,2\n");
    REQUIRE_THROWS_AS(read_dataset_csv(p), std::invalid_argument); // no group column

    write("group,f1\n3,1\n1,2\n1,3\n2,4\n2,5\n");
    REQUIRE_THROWS_AS(read_dataset_csv(p), std::invalid_argument); // bad group value

    write("group,f1\n1,1\n1,x\n2,3\n2,4\n");
    REQUIRE_THROWS_AS(read_dataset_csv(p), std::invalid_argument); // non-numeric

    write("group,f1\n1,1,9\n1,2\n2,3\n2,4\n");
    REQUIRE_THROWS_AS(read_dataset_csv(p), std::invalid_argument); // ragged row

    write("group,f1\n1,1\n2,3\n2,4\n");
    REQUIRE_THROWS_AS(read_dataset_csv(p), std::invalid_argument); // group 1 too small

    REQUIRE_THROWS_AS(read_dataset_csv(temp_file("missing.csv")), std::invalid_argument);
}
