#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tte::csv {

// Splits one CSV line on ','. No quoting: the formats handled here are
// plain numeric tables with simple identifiers.
std::vector<std::string_view> split(std::string_view line);

// Locale-independent parsing; returns false on any trailing garbage.
bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, long long& out);

// Shortest round-trip decimal representation ("nan"/"inf" for non-finite).
std::string format(double value);

std::string_view trim(std::string_view text);

}  // namespace tte::csv
