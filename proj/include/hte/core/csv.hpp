#pragma once
#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hte/core/dataset.hpp"
#include "hte/core/error.hpp"

namespace hte {

// Column-role mapping for CSV ingestion. Every non-assigned column is a
// covariate, in file order. Categorical covariates must arrive pre-encoded
// as numeric codes.
struct CsvSchema {
    std::string outcome;
    std::string treatment;
    std::optional<std::string> propensity;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline double parse_numeric(const std::string& field, std::size_t row,
                            const std::string& col) {
    const char* first = field.data();
    const char* last = field.data() + field.size();
    while (first != last && (*first == ' ' || *first == '\t')) ++first;
    while (last != first && (*(last - 1) == ' ' || *(last - 1) == '\t')) --last;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw DataError("CSV: non-numeric cell at row " + std::to_string(row) + ", column " +
                        col + " ('" + field + "')");
    return value;
}

// Shortest representation that round-trips the exact double.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace detail

// Reads a UTF-8, comma-separated file with a header row. Lines starting with
// '#' (the provenance block written by the CLI) are skipped. Row numbers in
// error messages are 1-based data rows, not counting the header.
inline Dataset load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("CSV: cannot open file " + path);

    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] == '#') continue;
        header = detail::split_csv_line(line);
        break;
    }
    if (header.empty()) throw DataError("CSV: missing header row in " + path);

    auto find_col = [&](const std::string& name) -> std::size_t {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (header[j] == name) return j;
        throw DataError("CSV: missing column '" + name + "' in " + path);
    };

    const std::size_t y_col = find_col(schema.outcome);
    const std::size_t t_col = find_col(schema.treatment);
    std::optional<std::size_t> pi_col;
    if (schema.propensity) pi_col = find_col(*schema.propensity);
    if (y_col == t_col || (pi_col && (*pi_col == y_col || *pi_col == t_col)))
        throw DataError("CSV: outcome/treatment/propensity roles must name distinct columns");

    std::vector<std::size_t> x_cols;
    std::vector<std::string> x_names;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j == y_col || j == t_col || (pi_col && j == *pi_col)) continue;
        x_cols.push_back(j);
        x_names.push_back(header[j]);
    }
    if (x_cols.empty()) throw DataError("CSV: no covariate columns left in " + path);

    std::vector<double> y;
    std::vector<int> t;
    std::vector<double> pi;
    std::vector<double> x_flat;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') continue;
        ++row;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw DataError("CSV: row " + std::to_string(row) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(header.size()));
        y.push_back(detail::parse_numeric(fields[y_col], row, header[y_col]));
        const double tv = detail::parse_numeric(fields[t_col], row, header[t_col]);
        if (tv != 0.0 && tv != 1.0)
            throw DataError("CSV: treatment value outside {0,1} at row " + std::to_string(row) +
                            ", column " + header[t_col]);
        t.push_back(static_cast<int>(tv));
        if (pi_col) {
            const double pv = detail::parse_numeric(fields[*pi_col], row, header[*pi_col]);
            if (pv <= 0.0 || pv >= 1.0)
                throw DataError("CSV: propensity outside (0,1) at row " + std::to_string(row) +
                                ", column " + header[*pi_col]);
            pi.push_back(pv);
        }
        for (std::size_t jj : x_cols)
            x_flat.push_back(detail::parse_numeric(fields[jj], row, header[jj]));
    }
    if (row < 2) throw DataError("CSV: need at least 2 data rows in " + path);

    Matrix x(row, x_cols.size());
    x.data() = std::move(x_flat);
    return Dataset::create(std::move(x), std::move(y), std::move(t), std::move(pi),
                           std::move(x_names));
}

// Writes the dataset back out; numeric content round-trips exactly.
// `preamble` lines, if any, are written before the header prefixed with '#'.
inline void save_csv(const std::string& path, const Dataset& data,
                     const std::vector<std::string>& preamble = {},
                     const std::string& outcome_name = "y",
                     const std::string& treatment_name = "t",
                     const std::string& propensity_name = "pi") {
    std::ofstream out(path);
    if (!out) throw DataError("CSV: cannot write file " + path);
    for (const auto& note : preamble) out << "# " << note << "\n";
    out << outcome_name << "," << treatment_name;
    if (data.has_known_propensity()) out << "," << propensity_name;
    for (const auto& name : data.feature_names) out << "," << name;
    out << "\n";
    for (std::size_t i = 0; i < data.n(); ++i) {
        out << detail::format_double(data.y[i]) << "," << data.t[i];
        if (data.has_known_propensity()) out << "," << detail::format_double(data.pi_known[i]);
        for (std::size_t j = 0; j < data.p(); ++j)
            out << "," << detail::format_double(data.x(i, j));
        out << "\n";
    }
}

} // namespace hte
