#include "mvks/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace mvks {

namespace {

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, sep))
        out.push_back(cell);
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

bool parse_number(const std::string& text, double& out)
{
    const char* begin = text.c_str();
    while (*begin == ' ' || *begin == '\t')
        ++begin;
    char* end = nullptr;
    out = std::strtod(begin, &end);
    if (end == begin)
        return false;
    while (*end == ' ' || *end == '\t' || *end == '\r')
        ++end;
    return *end == '\0';
}

std::ofstream open_for_writing(const std::filesystem::path& path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw UsageError("cannot write " + path.string());
    return out;
}

} // namespace

std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::size_t CsvTable::column(const std::string& name) const
{
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
        throw UsageError("csv: no column named " + name);
    return static_cast<std::size_t>(it - header.begin());
}

void write_csv(const std::filesystem::path& path, const CsvTable& table)
{
    std::ofstream out = open_for_writing(path);
    for (std::size_t j = 0; j < table.header.size(); ++j)
        out << (j ? "," : "") << table.header[j];
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t j = 0; j < row.size(); ++j)
            out << (j ? "," : "") << format_double(row[j]);
        out << '\n';
    }
    if (!out)
        throw UsageError("failed writing " + path.string());
}

CsvTable read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw UsageError("cannot read " + path.string());
    CsvTable table;
    std::string line;
    if (!std::getline(in, line))
        throw UsageError(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    table.header = split(line, ',');
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r")
            continue;
        if (line.back() == '\r')
            line.pop_back();
        const auto cells = split(line, ',');
        if (cells.size() != table.header.size())
            throw UsageError(path.string() + ":" + std::to_string(lineno) + ": wrong column count");
        std::vector<double> row(cells.size());
        for (std::size_t j = 0; j < cells.size(); ++j)
            if (!parse_number(cells[j], row[j]))
                throw UsageError(path.string() + ":" + std::to_string(lineno) + ": not a number");
        table.rows.push_back(std::move(row));
    }
    return table;
}

namespace {

std::vector<Index> strided_rows(Index count, Index stride)
{
    if (stride < 1)
        throw UsageError("row stride must be positive");
    std::vector<Index> rows;
    for (Index k = 0; k < count; k += stride)
        rows.push_back(k);
    if (count > 0 && rows.back() != count - 1)
        rows.push_back(count - 1);
    return rows;
}

} // namespace

CsvTable density_table(const MarginalHistory& history, Index row_stride)
{
    CsvTable t{{"t", "x", "p"}, {}};
    for (const Index k : strided_rows(history.populated, row_stride))
        for (Index i = 0; i < history.grid.size(); ++i)
            t.rows.push_back({history.mesh.t(k), history.grid.x(i), history.densities(k, i)});
    return t;
}

CsvTable field_table(const Grid1D& grid, const std::vector<ChemicalField>& fields, Index row_stride)
{
    CsvTable t{{"t", "x", "c", "dc"}, {}};
    for (const Index k : strided_rows(static_cast<Index>(fields.size()), row_stride)) {
        const auto& f = fields[static_cast<std::size_t>(k)];
        for (Index i = 0; i < grid.size(); ++i)
            t.rows.push_back({f.time, grid.x(i), f.values[i], f.gradient[i]});
    }
    return t;
}

CsvTable error_table(const ErrorTable& errors)
{
    CsvTable t{{"t", "l1", "l2", "linf"}, {}};
    for (std::size_t k = 0; k < errors.t.size(); ++k)
        t.rows.push_back({errors.t[k], errors.l1[k], errors.l2[k], errors.linf[k]});
    return t;
}

void write_gnuplot(const std::filesystem::path& path, const CsvTable& table,
                   bool block_on_first_column)
{
    std::ofstream out = open_for_writing(path);
    out << '#';
    for (const auto& h : table.header)
        out << ' ' << h;
    out << '\n';
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (block_on_first_column && r > 0 && row[0] != table.rows[r - 1][0])
            out << '\n';
        for (std::size_t j = 0; j < row.size(); ++j)
            out << (j ? " " : "") << format_double(row[j]);
        out << '\n';
    }
}

std::vector<std::pair<double, double>> read_samples(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw UsageError("cannot read samples file " + path.string());
    std::vector<std::pair<double, double>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        std::replace(line.begin(), line.end(), '\t', ',');
        const auto cells = split(line, ',');
        double x = 0.0;
        double v = 0.0;
        if (cells.size() != 2 || !parse_number(cells[0], x) || !parse_number(cells[1], v)) {
            if (out.empty() && lineno == 1)
                continue; // header
            throw UsageError(path.string() + ":" + std::to_string(lineno)
                             + ": expected two numeric columns");
        }
        out.emplace_back(x, v);
    }
    if (out.size() < 2)
        throw UsageError(path.string() + ": need at least two samples");
    std::sort(out.begin(), out.end());
    return out;
}

Field resample(const Grid1D& grid, const std::vector<std::pair<double, double>>& samples)
{
    Field f = Field::Zero(grid.size());
    for (Index i = 0; i < grid.size(); ++i) {
        const double x = grid.x(i);
        if (x < samples.front().first || x > samples.back().first)
            continue;
        auto hi = std::lower_bound(samples.begin(), samples.end(), std::make_pair(x, -1e308));
        if (hi == samples.begin()) {
            f[i] = hi->second;
            continue;
        }
        auto lo = hi - 1;
        if (hi == samples.end()) {
            f[i] = lo->second;
            continue;
        }
        const double w = (x - lo->first) / (hi->first - lo->first);
        f[i] = (1.0 - w) * lo->second + w * hi->second;
    }
    return f;
}

} // namespace mvks
