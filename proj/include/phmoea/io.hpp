#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "phmoea/metrics.hpp"
#include "phmoea/series.hpp"

namespace phmoea {

class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Header row plus numeric body. Plain comma separation, '.' decimals.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(std::string_view name) const; // throws InputError
};

// With a non-empty only list, other columns are not parsed and hold NaN.
CsvTable parse_csv(std::string_view text, std::string_view origin = "<input>",
                   const std::vector<std::string>& only = {});
CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& only = {});

// f1, f2 columns of a front file; other columns may hold anything.
PointSet read_points(const std::filesystem::path& path);
Series read_series(const std::filesystem::path& path, std::vector<std::string>* header = nullptr);
void write_series(const std::filesystem::path& path, const Series& s, const std::vector<std::string>& header);

// Shortest representation that parses back to the same double.
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

} // namespace phmoea
