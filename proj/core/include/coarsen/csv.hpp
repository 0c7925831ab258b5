#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "coarsen/series.hpp"

namespace coarsen {

/// Shortest round-trip decimal form ('.' decimal point, locale independent).
/// NaN prints as "nan", infinities as "inf" / "-inf".
std::string format_number(double value);

/// Comma-separated writer with LF line endings.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

    void row(std::initializer_list<double> values);
    void row(const std::vector<double>& values);

private:
    std::ofstream out_;
    std::size_t columns_;
};

enum class SeriesColumn { T, L, Lambda, E, M, N, Mass, MassResidual, C1, G };

const char* column_name(SeriesColumn c);
double column_value(const SeriesRecord& r, SeriesColumn c);

void write_series_csv(const std::filesystem::path& path, const TrajectorySeries& series,
                      const std::vector<SeriesColumn>& columns);

}  // namespace coarsen
