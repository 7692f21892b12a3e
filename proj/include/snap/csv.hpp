#pragma once

#include <string>
#include <vector>

namespace snap::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// Simple comma-separated files: no quoting or escaping, which none of the
// schemas here need. Empty fields are preserved as empty strings.
Table read_file(const std::string& path);

void write_file(const std::string& path, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows);

// Shortest representation that round-trips the exact double (to_chars).
std::string fmt(double v);
std::string fmt(long long v);

// Parses a double; empty string yields NaN (missing value). Throws
// ParseError with context on malformed input.
double parse_double(const std::string& field, const std::string& context);
long long parse_int(const std::string& field, const std::string& context);

} // namespace snap::csv
