#pragma once

// JSON config / report plumbing and CSV readers and writers shared by the
// experiment harness and the CLI.

#include <cstdio>
#include <fstream>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "measure.hpp"
#include "numerics.hpp"
#include "objective.hpp"

namespace langevin {

using Json = nlohmann::ordered_json;

inline Json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    Json j;
    in >> j;
    return j;
}

inline void save_json(const Json& j, const std::string& path) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

inline std::string format_cell(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// CSV writer with fixed column order; all numeric cells are %.17g so that
// repeated runs with the same seed are byte-identical.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header)
        : out_() {
        std::filesystem::path p(path);
        if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
        out_.open(path);
        if (!out_) throw std::runtime_error("cannot write " + path);
        for (std::size_t i = 0; i < header.size(); ++i)
            out_ << (i ? "," : "") << header[i];
        out_ << "\n";
        cols_ = header.size();
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != cols_) throw std::logic_error("CsvWriter: column mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i)
            out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
    }

private:
    std::ofstream out_;
    std::size_t cols_;
};

inline std::vector<std::vector<double>> load_csv_numeric(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t pos = 0;
                row.push_back(std::stod(cell, &pos));
            } catch (...) {
                numeric = false;
                break;
            }
        }
        if (numeric && !row.empty()) rows.push_back(std::move(row));
        // non-numeric rows (headers) are skipped
    }
    return rows;
}

// Point cloud from a CSV of rows w_0[,w_1,...]; optional leading columns are
// selected with col0.
inline EmpiricalMeasure load_points_csv(const std::string& path, int col0 = 0) {
    const auto rows = load_csv_numeric(path);
    if (rows.empty()) throw std::runtime_error("no numeric rows in " + path);
    const int d = static_cast<int>(rows.front().size()) - col0;
    if (d < 1) throw std::runtime_error("no coordinate columns in " + path);
    Mat X(rows.size(), d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (static_cast<int>(rows[i].size()) - col0 != d)
            throw std::runtime_error("ragged CSV: " + path);
        for (int k = 0; k < d; ++k) X(i, k) = rows[i][col0 + k];
    }
    return EmpiricalMeasure(std::move(X));
}

inline std::map<std::string, double> params_from_json(const Json& j) {
    std::map<std::string, double> m;
    if (j.is_object())
        for (auto it = j.begin(); it != j.end(); ++it)
            if (it.value().is_number()) m[it.key()] = it.value().get<double>();
    return m;
}

} // namespace langevin
