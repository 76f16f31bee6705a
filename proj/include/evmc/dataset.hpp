#ifndef EVMC_DATASET_HPP
#define EVMC_DATASET_HPP

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace evmc {

enum class DataKind { exchangeable, time_series };

std::string to_string(DataKind kind);
DataKind data_kind_from_string(const std::string& s);

/// One simulated or observed dataset x_{1:N}: N rows of d columns.
struct Dataset {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values; // row-major
    DataKind kind = DataKind::exchangeable;
    std::vector<std::string> column_names;

    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

    static Dataset make(std::size_t rows, std::size_t cols, DataKind kind,
                        std::vector<std::string> names = {});

    /// Throws std::invalid_argument on empty data or non-finite entries.
    void validate() const;

    std::size_t column_index(const std::string& name) const;
};

/// CSV with a header row and one observation per line; numbers carry
/// 17 significant digits so round-trips are exact.
void write_csv(const Dataset& ds, std::ostream& out);
void write_csv_file(const Dataset& ds, const std::string& path);
Dataset read_csv(std::istream& in, DataKind kind);
Dataset read_csv_file(const std::string& path, DataKind kind);

} // namespace evmc

#endif
