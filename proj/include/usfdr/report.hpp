#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "usfdr/simulation.hpp"

namespace usfdr {

/// One aggregated result line, keyed by (model, method, alpha).
struct ResultsRow {
    std::string model;
    std::string method;
    double alpha = 0.0;
    double e_fdr = 0.0;
    double e_power = 0.0;
    double e_fdr_over_alpha = 0.0;
    std::size_t n_reps = 0;
    double mean_lambda_hat = 0.0;
    double mean_rejections = 0.0;
};

struct ResultsTable {
    std::vector<ResultsRow> rows;

    void add(const std::string& model, const ExperimentSummary& summary,
             const std::string& method_suffix = "") {
        ResultsRow row;
        row.model = model;
        row.method = method_name(summary.method) + method_suffix;
        row.alpha = summary.alpha;
        row.e_fdr = summary.e_fdr;
        row.e_power = summary.e_power;
        row.e_fdr_over_alpha = summary.e_fdr / summary.alpha;
        row.n_reps = summary.n_replications;
        row.mean_lambda_hat = summary.mean_lambda_hat;
        row.mean_rejections = summary.mean_rejections;
        rows.push_back(std::move(row));
    }

    void sort() {
        std::sort(rows.begin(), rows.end(), [](const ResultsRow& a, const ResultsRow& b) {
            if (a.model != b.model) return a.model < b.model;
            if (a.method != b.method) return a.method < b.method;
            return a.alpha < b.alpha;
        });
    }
};

namespace detail {

inline std::string format_g6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

} // namespace detail

inline constexpr const char* kResultsCsvHeader =
    "model,method,alpha,e_fdr,e_power,e_fdr_over_alpha,n_reps,mean_lambda_hat,mean_rejections";

/// Deterministic CSV: sorted rows, 6 significant digits.
inline void emit_csv(const ResultsTable& table, const std::filesystem::path& path) {
    ResultsTable sorted = table;
    sorted.sort();
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path.string());
    out << kResultsCsvHeader << "\n";
    for (const ResultsRow& r : sorted.rows) {
        out << r.model << ',' << r.method << ','
            << detail::format_g6(r.alpha) << ','
            << detail::format_g6(r.e_fdr) << ','
            << detail::format_g6(r.e_power) << ','
            << detail::format_g6(r.e_fdr_over_alpha) << ','
            << r.n_reps << ','
            << detail::format_g6(r.mean_lambda_hat) << ','
            << detail::format_g6(r.mean_rejections) << '\n';
    }
    if (!out)
        throw std::runtime_error("write failed: " + path.string());
}

/// Reads back a results CSV (round-trip checks and plotting existing files).
inline ResultsTable parse_results_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kResultsCsvHeader)
        throw std::runtime_error("bad results header in " + path.string());
    ResultsTable table;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 9)
            throw std::runtime_error("bad results row: " + line);
        ResultsRow r;
        r.model = fields[0];
        r.method = fields[1];
        r.alpha = std::stod(fields[2]);
        r.e_fdr = std::stod(fields[3]);
        r.e_power = std::stod(fields[4]);
        r.e_fdr_over_alpha = std::stod(fields[5]);
        r.n_reps = static_cast<std::size_t>(std::stoull(fields[6]));
        r.mean_lambda_hat = std::stod(fields[7]);
        r.mean_rejections = std::stod(fields[8]);
        table.rows.push_back(std::move(r));
    }
    return table;
}

enum class PlotAxis { Power, FdrOverAlpha };

namespace detail {

inline const char* plot_color(std::size_t k) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
    return palette[k % 8];
}

} // namespace detail

/// Standalone SVG: one panel per model, one polyline per method over the
/// alpha grid. Ratio plots get a dashed reference line at 1.
inline void emit_plot(const ResultsTable& table, PlotAxis y_axis,
                      const std::filesystem::path& path) {
    ResultsTable sorted = table;
    sorted.sort();
    if (sorted.rows.empty())
        throw std::invalid_argument("emit_plot: empty table");

    // panel per model; series per method
    std::vector<std::string> models;
    std::vector<std::string> methods;
    for (const ResultsRow& r : sorted.rows) {
        if (std::find(models.begin(), models.end(), r.model) == models.end())
            models.push_back(r.model);
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
            methods.push_back(r.method);
    }

    double y_max = 1.0;
    for (const ResultsRow& r : sorted.rows) {
        const double y = y_axis == PlotAxis::Power ? r.e_power : r.e_fdr_over_alpha;
        y_max = std::max(y_max, y);
    }
    y_max *= 1.05;

    const double panel_w = 320.0, panel_h = 260.0;
    const double margin_l = 52.0, margin_r = 16.0, margin_t = 34.0, margin_b = 46.0;
    const double legend_h = 26.0;
    const std::size_t per_row = std::min<std::size_t>(models.size(), 4);
    const std::size_t n_rows = (models.size() + per_row - 1) / per_row;
    const double width = per_row * panel_w;
    const double height = n_rows * panel_h + legend_h;

    double a_min = 1e30, a_max = -1e30;
    for (const ResultsRow& r : sorted.rows) {
        a_min = std::min(a_min, r.alpha);
        a_max = std::max(a_max, r.alpha);
    }
    if (!(a_max > a_min)) { a_min -= 0.01; a_max += 0.01; }

    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path.string());

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    const char* y_label = y_axis == PlotAxis::Power ? "power" : "eFDR / alpha";

    for (std::size_t pi = 0; pi < models.size(); ++pi) {
        const double ox = (pi % per_row) * panel_w;
        const double oy = legend_h + (pi / per_row) * panel_h;
        const double x0 = ox + margin_l, x1 = ox + panel_w - margin_r;
        const double y0 = oy + panel_h - margin_b, y1 = oy + margin_t;
        auto sx = [&](double a) { return x0 + (a - a_min) / (a_max - a_min) * (x1 - x0); };
        auto sy = [&](double v) { return y0 - v / y_max * (y0 - y1); };

        out << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << (x1 - x0)
            << "\" height=\"" << (y0 - y1)
            << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";
        out << "<text x=\"" << (ox + panel_w / 2) << "\" y=\"" << (oy + margin_t - 12)
            << "\" text-anchor=\"middle\" font-weight=\"bold\">" << models[pi] << "</text>\n";
        out << "<text x=\"" << (ox + panel_w / 2) << "\" y=\"" << (oy + panel_h - 10)
            << "\" text-anchor=\"middle\">alpha</text>\n";
        out << "<text x=\"" << (ox + 14) << "\" y=\"" << (oy + panel_h / 2)
            << "\" text-anchor=\"middle\" transform=\"rotate(-90 " << (ox + 14) << " "
            << (oy + panel_h / 2) << ")\">" << y_label << "</text>\n";

        for (int k = 0; k <= 4; ++k) {
            const double a = a_min + (a_max - a_min) * k / 4.0;
            const double v = y_max * k / 4.0;
            out << "<line x1=\"" << sx(a) << "\" y1=\"" << y0 << "\" x2=\"" << sx(a)
                << "\" y2=\"" << (y0 + 4) << "\" stroke=\"#333\"/>\n";
            out << "<text x=\"" << sx(a) << "\" y=\"" << (y0 + 16)
                << "\" text-anchor=\"middle\">" << detail::format_g6(a) << "</text>\n";
            out << "<line x1=\"" << (x0 - 4) << "\" y1=\"" << sy(v) << "\" x2=\"" << x0
                << "\" y2=\"" << sy(v) << "\" stroke=\"#333\"/>\n";
            out << "<text x=\"" << (x0 - 7) << "\" y=\"" << (sy(v) + 4)
                << "\" text-anchor=\"end\">" << detail::format_g6(v) << "</text>\n";
        }

        if (y_axis == PlotAxis::FdrOverAlpha && 1.0 <= y_max) {
            out << "<line x1=\"" << x0 << "\" y1=\"" << sy(1.0) << "\" x2=\"" << x1
                << "\" y2=\"" << sy(1.0)
                << "\" stroke=\"#999\" stroke-dasharray=\"5,4\"/>\n";
        }

        for (std::size_t si = 0; si < methods.size(); ++si) {
            std::vector<std::pair<double, double>> pts;
            for (const ResultsRow& r : sorted.rows) {
                if (r.model != models[pi] || r.method != methods[si]) continue;
                const double y = y_axis == PlotAxis::Power ? r.e_power : r.e_fdr_over_alpha;
                pts.emplace_back(r.alpha, y);
            }
            if (pts.empty()) continue;
            out << "<polyline fill=\"none\" stroke=\"" << detail::plot_color(si)
                << "\" stroke-width=\"1.6\" points=\"";
            for (const auto& [a, y] : pts) out << sx(a) << "," << sy(y) << " ";
            out << "\"/>\n";
        }
    }

    double lx = 10.0;
    for (std::size_t si = 0; si < methods.size(); ++si) {
        out << "<line x1=\"" << lx << "\" y1=\"14\" x2=\"" << (lx + 24)
            << "\" y2=\"14\" stroke=\"" << detail::plot_color(si)
            << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << (lx + 29) << "\" y=\"18\">" << methods[si] << "</text>\n";
        lx += 34.0 + 7.0 * methods[si].size();
    }

    out << "</svg>\n";
    if (!out)
        throw std::runtime_error("write failed: " + path.string());
}

} // namespace usfdr
