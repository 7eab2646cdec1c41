#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "usfdr/stats.hpp"

namespace usfdr {

struct LabeledDataset {
    TwoSampleDataset data;
    std::vector<std::string> feature_names;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

inline double parse_number(const std::string& s, std::size_t line_no) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw std::invalid_argument("dataset line " + std::to_string(line_no)
                                    + ": not a number: '" + s + "'");
    return v;
}

} // namespace detail

/// Reads a two-group dataset CSV: a header row with one `group` column
/// (values 1 or 2) and one column per feature; one row per sample.
inline LabeledDataset read_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open dataset: " + path.string());

    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("dataset is empty: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> header = detail::split_csv_line(line);
    std::optional<std::size_t> group_col;
    std::vector<std::string> names;
    std::vector<std::size_t> feature_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "group") {
            if (group_col)
                throw std::invalid_argument("dataset has two 'group' columns");
            group_col = c;
        } else {
            names.push_back(header[c]);
            feature_cols.push_back(c);
        }
    }
    if (!group_col)
        throw std::invalid_argument("dataset needs a 'group' column");
    if (feature_cols.empty())
        throw std::invalid_argument("dataset has no feature columns");

    std::vector<std::vector<double>> rows1, rows2;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw std::invalid_argument("dataset line " + std::to_string(line_no)
                                        + ": expected " + std::to_string(header.size())
                                        + " fields, got " + std::to_string(fields.size()));
        const double g = detail::parse_number(fields[*group_col], line_no);
        if (g != 1.0 && g != 2.0)
            throw std::invalid_argument("dataset line " + std::to_string(line_no)
                                        + ": group must be 1 or 2");
        std::vector<double> row(feature_cols.size());
        for (std::size_t j = 0; j < feature_cols.size(); ++j)
            row[j] = detail::parse_number(fields[feature_cols[j]], line_no);
        (g == 1.0 ? rows1 : rows2).push_back(std::move(row));
    }
    if (rows1.size() < 2 || rows2.size() < 2)
        throw std::invalid_argument("each group needs at least 2 samples");

    GroupSamples g1(rows1.size(), feature_cols.size());
    GroupSamples g2(rows2.size(), feature_cols.size());
    for (std::size_t k = 0; k < rows1.size(); ++k)
        for (std::size_t j = 0; j < feature_cols.size(); ++j)
            g1.at(k, j) = rows1[k][j];
    for (std::size_t k = 0; k < rows2.size(); ++k)
        for (std::size_t j = 0; j < feature_cols.size(); ++j)
            g2.at(k, j) = rows2[k][j];

    return LabeledDataset{TwoSampleDataset(std::move(g1), std::move(g2)),
                          std::move(names)};
}

} // namespace usfdr
