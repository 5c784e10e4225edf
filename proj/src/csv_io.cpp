#include "bandcov/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

namespace bandcov {

namespace {

void split_row(const std::string& line, std::vector<std::string>& cells) {
    cells.clear();
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            cells.push_back(line.substr(start));
            return;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

double parse_cell(std::string cell, std::size_t row, std::size_t col,
                  const std::string& name) {
    const std::size_t lo = cell.find_first_not_of(" \t");
    const std::size_t hi = cell.find_last_not_of(" \t");
    cell = lo == std::string::npos ? std::string() : cell.substr(lo, hi - lo + 1);
    const std::string where = name + ": row " + std::to_string(row) +
                              ", column " + std::to_string(col);
    if (cell.empty()) {
        throw data_error(where + ": empty cell");
    }
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc() || res.ptr != end) {
        throw data_error(where + ": cannot parse '" + cell + "' as a number");
    }
    if (!std::isfinite(value)) {
        throw data_error(where + ": non-finite value '" + cell + "'");
    }
    return value;
}

}  // namespace

DataMatrix read_csv_matrix(std::istream& in, bool header,
                           const std::string& name) {
    std::vector<std::vector<double>> rows;
    std::vector<std::string> cells;
    std::string line;
    std::size_t lineno = 0;
    std::size_t width = 0;
    bool drop_next = header;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (first_content && line.size() >= 3 &&
            line.compare(0, 3, "\xef\xbb\xbf") == 0) {
            line.erase(0, 3);
        }
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        first_content = false;
        if (drop_next) {
            drop_next = false;
            continue;
        }
        split_row(line, cells);
        if (width == 0) {
            width = cells.size();
        } else if (cells.size() != width) {
            throw data_error(name + ": row " + std::to_string(lineno) +
                             " has " + std::to_string(cells.size()) +
                             " cells, expected " + std::to_string(width));
        }
        std::vector<double> row(width);
        for (std::size_t j = 0; j < width; ++j) {
            row[j] = parse_cell(cells[j], lineno, j + 1, name);
        }
        rows.push_back(std::move(row));
    }
    if (in.bad()) {
        throw data_error(name + ": read failure");
    }
    if (rows.size() < 4) {
        throw data_error(name + ": need at least 4 data rows, got " +
                         std::to_string(rows.size()));
    }
    if (width < 2) {
        throw data_error(name + ": need at least 2 columns, got " +
                         std::to_string(width));
    }
    DataMatrix x(rows.size(), width);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < width; ++j) {
            x.at(i, j) = rows[i][j];
        }
    }
    return x;
}

DataMatrix read_csv_file(const std::string& path, bool header) {
    if (path == "-") {
        return read_csv_matrix(std::cin, header, "stdin");
    }
    std::ifstream in(path);
    if (!in) {
        throw data_error(path + ": cannot open");
    }
    return read_csv_matrix(in, header, path);
}

}  // namespace bandcov
