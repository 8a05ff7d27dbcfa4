#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <system_error>
#include <vector>

#include "mdpricer/errors.hpp"

namespace mdpricer {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::string origin;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw DataError(origin + ": missing required column '" + name + "'");
    }
};

// Comma-separated values with optional double-quoted fields ("" escapes a
// quote). Whitespace around unquoted fields is trimmed; blank lines skipped.
inline std::vector<std::string> split_csv_line(const std::string& line, const std::string& where) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    if (quoted) throw DataError(where + ": unterminated quoted field");
    fields.push_back(cur);
    for (auto& f : fields) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t");
        f = b == std::string::npos ? "" : f.substr(b, e - b + 1);
    }
    return fields;
}

inline bool is_blank_line(const std::string& line) {
    for (char c : line)
        if (c != ' ' && c != '\t' && c != '\r' && c != '\n') return false;
    return true;
}

inline CsvTable read_csv(std::istream& in, const std::string& origin) {
    CsvTable table;
    table.origin = origin;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_blank_line(line)) continue;
        auto fields = split_csv_line(line, origin + ":" + std::to_string(lineno));
        if (table.header.empty()) {
            table.header = std::move(fields);
        } else {
            if (fields.size() != table.header.size())
                throw DataError(origin + ":" + std::to_string(lineno) + ": expected " +
                                std::to_string(table.header.size()) + " fields, got " +
                                std::to_string(fields.size()));
            table.rows.push_back(std::move(fields));
        }
    }
    if (table.header.empty()) throw DataError(origin + ": empty file");
    return table;
}

inline CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file '" + path + "'");
    return read_csv(in, path);
}

// Shortest representation that round-trips exactly.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw DataError("cannot format number");
    return std::string(buf, ptr);
}

inline double parse_double_field(const std::string& s, const std::string& where) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw DataError(where + ": cannot parse '" + s + "' as a number");
    return v;
}

inline long long parse_int_field(const std::string& s, const std::string& where) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw DataError(where + ": cannot parse '" + s + "' as an integer");
    return v;
}

// Write-then-rename so readers never observe a half-written file.
inline void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write file '" + tmp.string() + "'");
        out << content;
        if (!out.flush()) throw DataError("failed writing '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw DataError("cannot rename '" + tmp.string() + "' to '" + path + "': " + ec.message());
}

}  // namespace mdpricer
