#include "spreadgrad/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "spreadgrad/errors.hpp"

namespace spreadgrad::csv {

namespace {

std::vector<std::string> split_line(const std::string& line, std::size_t lineno, const std::string& source) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(ch);
        }
    }
    if (quoted) throw InputError(source + ": unterminated quote on line " + std::to_string(lineno));
    out.push_back(std::move(field));
    return out;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::optional<std::size_t> Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    return std::nullopt;
}

std::size_t Table::require_column(std::string_view name) const {
    if (auto c = column(name)) return *c;
    throw InputError(source + ": missing column '" + std::string(name) + "'");
}

Table parse(std::istream& in, std::string source) {
    Table t;
    t.source = std::move(source);
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!have_header) {
            // UTF-8 byte order mark
            if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
            if (trim(line).empty()) continue;
            for (auto& h : split_line(line, lineno, t.source)) t.header.push_back(trim(h));
            have_header = true;
            continue;
        }
        if (trim(line).empty()) continue;
        auto fields = split_line(line, lineno, t.source);
        if (fields.size() != t.header.size())
            throw InputError(t.source + ": line " + std::to_string(lineno) + " has " + std::to_string(fields.size()) +
                             " fields, expected " + std::to_string(t.header.size()));
        for (auto& f : fields) f = trim(std::move(f));
        t.rows.push_back(std::move(fields));
    }
    if (!have_header) throw InputError(t.source + ": empty file");
    return t;
}

Table read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    return parse(in, path.string());
}

double to_double(const std::string& cell, std::size_t row, std::string_view column, std::string_view source) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (!cell.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (cell.empty() || ec != std::errc{} || ptr != last || !std::isfinite(v)) {
        std::ostringstream msg;
        msg << source << ": row " << row << ", column '" << column << "': non-numeric value '" << cell << "'";
        throw InputError(msg.str());
    }
    return v;
}

std::string format(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        const auto& f = fields[i];
        if (f.find_first_of(",\"\n") != std::string::npos) {
            out << '"';
            for (char ch : f) {
                if (ch == '"') out << '"';
                out << ch;
            }
            out << '"';
        } else {
            out << f;
        }
    }
    out << '\n';
}

}  // namespace spreadgrad::csv
