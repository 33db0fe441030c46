#ifndef LDG_CSV_HPP
#define LDG_CSV_HPP

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ldg/errors.hpp"
#include "ldg/exact.hpp"

namespace ldg {

// 17 significant digits: enough to round-trip any double exactly through
// decimal text.
inline std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_value(const std::string& field) {
    char* end = nullptr;
    double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str())
        throw IoError("csv: unparseable numeric field '" + field + "'");
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

// Table export: header `s,a,value...`, one value column per parameter index,
// one row per state-action pair in flat order.
inline void write_occupancy_csv(std::ostream& os, const OccupancyTable& occ,
                                Index num_actions) {
    os << "s,a,value\n";
    for (Index x = 0; x < occ.d.size(); ++x)
        os << x / num_actions << ',' << x % num_actions << ','
           << format_value(occ.d(x)) << '\n';
}

inline void write_grad_csv(std::ostream& os, const GradTable& grad,
                           Index num_actions) {
    os << "s,a";
    for (Index j = 0; j < grad.w.cols(); ++j) os << ",value" << j;
    os << '\n';
    for (Index x = 0; x < grad.w.rows(); ++x) {
        os << x / num_actions << ',' << x % num_actions;
        for (Index j = 0; j < grad.w.cols(); ++j)
            os << ',' << format_value(grad.w(x, j));
        os << '\n';
    }
}

// Generic numeric CSV: returns the header fields and all data rows. Used by
// the readers below and by tests that re-parse emitted files.
inline std::pair<std::vector<std::string>, Eigen::MatrixXd> read_csv(
    std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw IoError("csv: empty input");
    std::vector<std::string> header = split_csv_line(line);
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw IoError("csv: ragged row");
        std::vector<double> row;
        row.reserve(fields.size());
        for (const std::string& f : fields)
            row.push_back(f.empty()
                              ? std::numeric_limits<double>::quiet_NaN()
                              : parse_value(f));
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd data(static_cast<Index>(rows.size()),
                         static_cast<Index>(header.size()));
    for (Index i = 0; i < data.rows(); ++i)
        for (Index j = 0; j < data.cols(); ++j)
            data(i, j) = rows[static_cast<std::size_t>(i)]
                             [static_cast<std::size_t>(j)];
    return {header, data};
}

// Value columns of a `s,a,value...` table, rows restored to flat pair order.
inline Eigen::MatrixXd read_table_csv(std::istream& is) {
    auto [header, data] = read_csv(is);
    if (header.size() < 3 || header[0] != "s" || header[1] != "a")
        throw IoError("csv: expected table header s,a,value...");
    return data.rightCols(data.cols() - 2);
}

// Plain matrix export (no index columns); used for inspecting the saddle
// system blocks.
inline void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m) {
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) os << ',';
            os << format_value(m(i, j));
        }
        os << '\n';
    }
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    return os;
}

}  // namespace ldg

#endif
