#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spreadgrad::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name, or nullopt.
    [[nodiscard]] std::optional<std::size_t> column(std::string_view name) const;
    /// Column index by name; throws InputError naming the file when absent.
    [[nodiscard]] std::size_t require_column(std::string_view name) const;

    std::string source;  // file name used in error messages
};

/// Reads a header-first, comma-separated UTF-8 file. Quoted fields may contain commas and "" escapes.
Table read(const std::filesystem::path& path);
Table parse(std::istream& in, std::string source = "<stream>");

/// Parses a numeric cell; throws InputError naming row (1-based, header excluded) and column.
double to_double(const std::string& cell, std::size_t row, std::string_view column, std::string_view source);

/// Shortest decimal text that parses back to exactly the same double.
std::string format(double v);

/// Writes one row, quoting fields that need it.
void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace spreadgrad::csv
