#include "mpyro/csv.hpp"

#include "mpyro/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace mpyro::csv {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

} // namespace

std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

std::size_t Table::column(std::string_view name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
        throw ParseError(1, "missing column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
}

bool Table::has_column(std::string_view name) const {
    return std::find(header.begin(), header.end(), name) != header.end();
}

Table read(std::istream& in) {
    Table table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty())
            continue;
        if (!have_header) {
            if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
                line.erase(0, 3);
            table.header = split(line);
            have_header = true;
            continue;
        }
        Row row{line_no, split(line)};
        if (row.fields.size() != table.header.size())
            throw ParseError(line_no, "line " + std::to_string(line_no) + ": expected "
                                          + std::to_string(table.header.size()) + " fields, got "
                                          + std::to_string(row.fields.size()));
        table.rows.push_back(std::move(row));
    }
    if (!have_header)
        throw ParseError(0, "empty CSV input");
    return table;
}

Table read_file(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw IoError("file not found: " + path);
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    return read(in);
}

double to_double(const std::string& field, std::size_t line) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && *first == '+')
        ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value))
        throw ParseError(line, "line " + std::to_string(line) + ": not a number: '" + field + "'");
    return value;
}

} // namespace mpyro::csv
