#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mvks/field.hpp"
#include "mvks/history.hpp"
#include "mvks/particle.hpp"

namespace mvks {

/// Shortest round-trip form is not required; 17 significant digits always
/// parse back to the same double.
std::string format_double(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    /// Index of a header column; throws UsageError when absent.
    std::size_t column(const std::string& name) const;
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

/// Long form `t,x,p`, every `row_stride`-th populated row plus the last.
CsvTable density_table(const MarginalHistory& history, Index row_stride = 1);
/// Long form `t,x,c,dc`.
CsvTable field_table(const Grid1D& grid, const std::vector<ChemicalField>& fields,
                     Index row_stride = 1);
/// `t,l1,l2,linf`.
CsvTable error_table(const ErrorTable& errors);

/// Whitespace-separated columns with a `#` header; rows of a long-form table
/// are split into blocks (blank line) whenever the first column changes.
void write_gnuplot(const std::filesystem::path& path, const CsvTable& table,
                   bool block_on_first_column = false);

/// Two-column samples file (`x,value`, optional header line).
std::vector<std::pair<double, double>> read_samples(const std::filesystem::path& path);

/// Linear interpolation of samples onto the grid; zero outside their range.
Field resample(const Grid1D& grid, const std::vector<std::pair<double, double>>& samples);

} // namespace mvks
