#include "coarsen/csv.hpp"

#include <charconv>
#include <cmath>

#include "coarsen/errors.hpp"

namespace coarsen {

std::string format_number(double value)
{
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), columns_(header.size())
{
    if (!out_) throw Error("cannot open " + path.string() + " for writing");
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out_ << ',';
        out_ << header[i];
    }
    out_ << '\n';
}

void CsvWriter::row(std::initializer_list<double> values)
{
    row(std::vector<double>(values));
}

void CsvWriter::row(const std::vector<double>& values)
{
    if (values.size() != columns_) throw InvalidArgument("csv row width does not match header");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out_ << ',';
        out_ << format_number(values[i]);
    }
    out_ << '\n';
    if (!out_) throw Error("csv write failed");
}

const char* column_name(SeriesColumn c)
{
    switch (c) {
    case SeriesColumn::T: return "t";
    case SeriesColumn::L: return "L";
    case SeriesColumn::Lambda: return "Lambda";
    case SeriesColumn::E: return "E";
    case SeriesColumn::M: return "M";
    case SeriesColumn::N: return "N";
    case SeriesColumn::Mass: return "mass";
    case SeriesColumn::MassResidual: return "mass_residual";
    case SeriesColumn::C1: return "c1";
    case SeriesColumn::G: return "g";
    }
    return "?";
}

double column_value(const SeriesRecord& r, SeriesColumn c)
{
    switch (c) {
    case SeriesColumn::T: return r.t;
    case SeriesColumn::L: return r.L;
    case SeriesColumn::Lambda: return r.lambda;
    case SeriesColumn::E: return r.E;
    case SeriesColumn::M: return r.M;
    case SeriesColumn::N: return r.N;
    case SeriesColumn::Mass: return r.mass;
    case SeriesColumn::MassResidual: return r.mass_residual;
    case SeriesColumn::C1: return r.c1;
    case SeriesColumn::G: return r.g;
    }
    return not_available;
}

void write_series_csv(const std::filesystem::path& path, const TrajectorySeries& series,
                      const std::vector<SeriesColumn>& columns)
{
    std::vector<std::string> header;
    for (auto c : columns) header.emplace_back(column_name(c));
    CsvWriter w(path, header);
    std::vector<double> row(columns.size());
    for (const auto& r : series.records()) {
        for (std::size_t i = 0; i < columns.size(); ++i) row[i] = column_value(r, columns[i]);
        w.row(row);
    }
}

}  // namespace coarsen
