#ifndef TEMPANEL_CSV_HPP
#define TEMPANEL_CSV_HPP

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tempanel::csv {

/// Split one delimited line. No quoting: the panel schemas never embed the
/// delimiter. Trailing '\r' is stripped so files from any platform parse.
std::vector<std::string> split(std::string_view line, char delim = ',');

/// Strict full-string parses; empty or trailing garbage -> nullopt.
std::optional<double> parse_double(std::string_view field);
std::optional<long long> parse_int(std::string_view field);

std::string join(const std::vector<std::string>& fields, char delim = ',');

}  // namespace tempanel::csv

#endif
