#ifndef URGENCY_CSV_HPP_
#define URGENCY_CSV_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace urgency::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // Physical line on which each data row starts (1-based, header is line 1).
  std::vector<std::size_t> row_lines;

  std::optional<std::size_t> column(std::string_view name) const;
};

// RFC 4180 parser: comma separator, double-quote quoting with "" escapes,
// CRLF or LF record terminators, embedded newlines inside quoted fields.
// Throws DataError naming the offending line on malformed input or when a
// record's field count differs from the header's.
Table parse(std::string_view text);
Table read_file(const std::filesystem::path& path);

std::string escape_field(std::string_view field);
std::string format_row(const std::vector<std::string>& fields);

}  // namespace urgency::csv

#endif  // URGENCY_CSV_HPP_
