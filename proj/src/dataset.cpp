#include "evmc/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace evmc {

std::string to_string(DataKind kind) {
    return kind == DataKind::exchangeable ? "exchangeable" : "time_series";
}

DataKind data_kind_from_string(const std::string& s) {
    if (s == "exchangeable") return DataKind::exchangeable;
    if (s == "time_series") return DataKind::time_series;
    throw std::invalid_argument("unknown data kind: " + s);
}

Dataset Dataset::make(std::size_t rows, std::size_t cols, DataKind kind,
                      std::vector<std::string> names) {
    Dataset ds;
    ds.rows = rows;
    ds.cols = cols;
    ds.kind = kind;
    ds.values.assign(rows * cols, 0.0);
    if (names.empty()) {
        for (std::size_t c = 0; c < cols; ++c) names.push_back("x" + std::to_string(c));
    }
    if (names.size() != cols) {
        throw std::invalid_argument("Dataset: column name count mismatch");
    }
    ds.column_names = std::move(names);
    return ds;
}

void Dataset::validate() const {
    if (rows == 0 || cols == 0) {
        throw std::invalid_argument("Dataset: empty");
    }
    if (values.size() != rows * cols) {
        throw std::invalid_argument("Dataset: value buffer mismatch");
    }
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("Dataset: non-finite entry");
        }
    }
}

std::size_t Dataset::column_index(const std::string& name) const {
    for (std::size_t c = 0; c < column_names.size(); ++c) {
        if (column_names[c] == name) return c;
    }
    throw std::invalid_argument("Dataset: no column named " + name);
}

void write_csv(const Dataset& ds, std::ostream& out) {
    for (std::size_t c = 0; c < ds.cols; ++c) {
        out << (c ? "," : "") << ds.column_names[c];
    }
    out << "\n";
    char buf[40];
    for (std::size_t r = 0; r < ds.rows; ++r) {
        for (std::size_t c = 0; c < ds.cols; ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", ds.at(r, c));
            out << (c ? "," : "") << buf;
        }
        out << "\n";
    }
}

void write_csv_file(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    write_csv(ds, out);
    if (!out) throw std::runtime_error("write failed: " + path);
}

Dataset read_csv(std::istream& in, DataKind kind) {
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("CSV: missing header row");
    }
    std::vector<std::string> names;
    {
        std::stringstream header(line);
        std::string tok;
        while (std::getline(header, tok, ',')) names.push_back(tok);
    }
    if (names.empty()) throw std::runtime_error("CSV: empty header");

    Dataset ds;
    ds.cols = names.size();
    ds.column_names = names;
    ds.kind = kind;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string tok;
        std::size_t c = 0;
        while (std::getline(row, tok, ',')) {
            ds.values.push_back(std::stod(tok));
            ++c;
        }
        if (c != ds.cols) {
            throw std::runtime_error("CSV: row " + std::to_string(ds.rows + 1) +
                                     " has " + std::to_string(c) + " fields, expected " +
                                     std::to_string(ds.cols));
        }
        ds.rows += 1;
    }
    ds.validate();
    return ds;
}

Dataset read_csv_file(const std::string& path, DataKind kind) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    return read_csv(in, kind);
}

} // namespace evmc
