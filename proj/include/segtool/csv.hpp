#pragma once

#include <charconv>
#include <string>
#include <vector>

namespace seg {

// Shortest round-trip decimal representation; keeps CSV artifacts
// byte-stable across runs.
inline std::string csv_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

std::vector<std::string> split_csv_line(const std::string& line);

// Minimal CSV document: header plus rows of plain (unquoted) fields.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const; // -1 if missing
};

CsvTable read_csv(const std::string& path);

} // namespace seg
