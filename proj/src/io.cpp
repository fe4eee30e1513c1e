#include "phmoea/io.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace phmoea {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> out;
    for (;;) {
        const auto pos = line.find(',');
        out.push_back(trim(line.substr(0, pos)));
        if (pos == std::string_view::npos) {
            return out;
        }
        line.remove_prefix(pos + 1);
    }
}

} // namespace

std::size_t CsvTable::column(std::string_view name) const
{
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return i;
        }
    }
    throw InputError(fmt::format("missing column '{}'", name));
}

CsvTable parse_csv(std::string_view text, std::string_view origin, const std::vector<std::string>& only)
{
    CsvTable table;
    std::size_t line_no = 0;
    bool have_header = false;
    while (!text.empty()) {
        const auto end = text.find('\n');
        const auto line = trim(text.substr(0, end));
        text.remove_prefix(end == std::string_view::npos ? text.size() : end + 1);
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto fields = split(line);
        if (!have_header) {
            for (auto f : fields) {
                table.header.emplace_back(f);
            }
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw InputError(fmt::format("{}:{}: expected {} fields, found {}", origin, line_no, table.header.size(),
                                         fields.size()));
        }
        std::vector<double> row;
        row.reserve(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const auto f = fields[c];
            if (!only.empty() && std::find(only.begin(), only.end(), table.header[c]) == only.end()) {
                row.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc{} || ptr != f.data() + f.size()) {
                throw InputError(fmt::format("{}:{}: '{}' is not a number", origin, line_no, f));
            }
            row.push_back(v);
        }
        table.rows.push_back(std::move(row));
    }
    if (!have_header) {
        throw InputError(fmt::format("{}: empty file", origin));
    }
    return table;
}

CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& only)
{
    return parse_csv(read_file(path), path.string(), only);
}

PointSet read_points(const std::filesystem::path& path)
{
    const auto table = read_csv(path, {"f1", "f2"});
    const auto c1 = table.column("f1");
    const auto c2 = table.column("f2");
    PointSet pts;
    pts.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        pts.push_back({row[c1], row[c2]});
    }
    return pts;
}

Series read_series(const std::filesystem::path& path, std::vector<std::string>* header)
{
    const auto table = read_csv(path);
    if (table.rows.empty()) {
        throw InputError(fmt::format("{}: no data rows", path.string()));
    }
    Series s(table.rows.size(), table.header.size());
    for (std::size_t t = 0; t < table.rows.size(); ++t) {
        for (std::size_t f = 0; f < table.header.size(); ++f) {
            s(t, f) = table.rows[t][f];
        }
    }
    if (header) {
        *header = table.header;
    }
    return s;
}

void write_series(const std::filesystem::path& path, const Series& s, const std::vector<std::string>& header)
{
    std::string out = fmt::format("{}\n", fmt::join(header, ","));
    for (std::size_t t = 0; t < s.rows(); ++t) {
        for (std::size_t f = 0; f < s.cols(); ++f) {
            out += format_double(s(t, f));
            out += f + 1 < s.cols() ? ',' : '\n';
        }
    }
    write_file(path, out);
}

std::string format_double(double v) { return fmt::format("{}", v); }

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError(fmt::format("cannot read {}", path.string()));
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw std::runtime_error(fmt::format("write to {} failed", path.string()));
    }
}

} // namespace phmoea
