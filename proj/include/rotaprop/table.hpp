#pragma once

// Result tables with a fixed column contract per experiment. CSV cells are
// written with 17 significant digits so reruns are bit-identical; every CSV
// gets a sibling .summary.json with per-column min/max and optional log-log
// slopes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace rotaprop {

using Cell = std::variant<std::string, double, long long, bool>;

inline std::string format_cell(const Cell& c) {
    if (std::holds_alternative<std::string>(c)) return std::get<std::string>(c);
    if (std::holds_alternative<bool>(c)) return std::get<bool>(c) ? "true" : "false";
    if (std::holds_alternative<long long>(c))
        return std::to_string(std::get<long long>(c));
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", std::get<double>(c));
    return buf;
}

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    // column pairs (x, y) whose log-log slope goes into the summary
    std::vector<std::pair<std::string, std::string>> slope_pairs;

    void add_row(std::vector<Cell> row) {
        if (row.size() != columns.size())
            throw std::invalid_argument("Table: row width mismatch");
        rows.push_back(std::move(row));
    }

    int column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return int(i);
        throw std::invalid_argument("Table: no column " + name);
    }

    std::vector<double> numeric_column(const std::string& name) const {
        const int ci = column_index(name);
        std::vector<double> out;
        for (const auto& r : rows) {
            if (std::holds_alternative<double>(r[ci]))
                out.push_back(std::get<double>(r[ci]));
            else if (std::holds_alternative<long long>(r[ci]))
                out.push_back(double(std::get<long long>(r[ci])));
        }
        return out;
    }
};

// least-squares slope of log|y| against log|x| over rows with x, y > 0
inline double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) continue;
        const double lx = std::log(xs[i]), ly = std::log(ys[i]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++n;
    }
    if (n < 2) return 0.0;
    const double den = n * sxx - sx * sx;
    return den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
}

// CSV plus the JSON summary; refuses empty tables and unwritable paths.
inline void emit(const Table& t, const std::string& path) {
    if (t.rows.empty()) throw std::invalid_argument("emit: table is empty");
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("emit: cannot write " + path);
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        out << (i ? "," : "") << t.columns[i];
    out << "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << format_cell(row[i]);
        out << "\n";
    }
    out.close();
    if (!out) throw std::runtime_error("emit: write failed for " + path);

    nlohmann::json summary;
    summary["rows"] = t.rows.size();
    for (std::size_t ci = 0; ci < t.columns.size(); ++ci) {
        std::vector<double> vals = t.numeric_column(t.columns[ci]);
        if (vals.empty()) continue;
        double mn = vals[0], mx = vals[0];
        for (double v : vals) {
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        summary["columns"][t.columns[ci]] = {{"min", mn}, {"max", mx}};
    }
    for (const auto& [xc, yc] : t.slope_pairs)
        summary["slopes"][xc + "->" + yc] =
            loglog_slope(t.numeric_column(xc), t.numeric_column(yc));

    std::filesystem::path sp = p;
    sp.replace_extension(".summary.json");
    std::ofstream sout(sp, std::ios::trunc);
    if (!sout) throw std::runtime_error("emit: cannot write " + sp.string());
    sout << summary.dump(2) << "\n";
}

}  // namespace rotaprop
