#pragma once

// Minimal comma-separated reader for the project's flat CSV formats
// (no quoting, no embedded commas).

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace mpyro::csv {

struct Row {
    std::size_t line = 0; // 1-based line number in the source
    std::vector<std::string> fields;
};

struct Table {
    std::vector<std::string> header;
    std::vector<Row> rows;

    /// Column index of name, or throws ParseError(line 1).
    std::size_t column(std::string_view name) const;
    bool has_column(std::string_view name) const;
};

/// Reads a header line and data rows. Blank lines are skipped; a row whose
/// field count differs from the header is a ParseError carrying its line.
Table read(std::istream& in);
Table read_file(const std::string& path);

std::vector<std::string> split(std::string_view line);

/// Parses a finite double; throws ParseError(line) on failure.
double to_double(const std::string& field, std::size_t line);

} // namespace mpyro::csv
