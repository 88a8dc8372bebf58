#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace volnet::csv {

struct Row {
  std::size_t line = 0;  // 1-based line number in the source file
  std::vector<std::string> fields;
};

/// A parsed CSV document. The first non-comment line is the header.
struct Document {
  std::vector<std::string> header;
  std::vector<Row> rows;

  /// Index of a header column, case-sensitive after trimming.
  std::optional<std::size_t> column(std::string_view name) const;
};

/// Splits one CSV record. Handles double-quoted fields with "" escapes;
/// embedded newlines are not supported.
std::vector<std::string> split_record(std::string_view line);

/// Parses CSV text. Lines starting with '#' are treated as comments and
/// skipped; blank lines are ignored. A UTF-8 BOM and CRLF endings are accepted.
Document parse(std::string_view text);

/// Reads and parses a file, throwing IoError when it cannot be opened.
Document read_file(const std::filesystem::path& path);

/// Quotes a field if it contains a delimiter, quote or whitespace at the ends.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

std::string trim(std::string_view text);

/// Shortest text that parses back to exactly the same double.
std::string format_double(double value);

std::optional<double> parse_double(std::string_view text);

}  // namespace volnet::csv
