#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ndm::csv {

/// One parsed data row together with its 1-based line number in the source.
struct Row {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

/// Minimal RFC-4180-ish reader: comma separated, optional double quotes,
/// first line is a header. Columns are addressed by header name.
class Reader {
 public:
  Reader(std::istream& in, std::string source_name);

  /// Resolves the column positions of `names`; throws DataError naming the
  /// first missing column.
  std::vector<std::size_t> require_columns(const std::vector<std::string>& names) const;

  bool next(Row& row);

  const std::vector<std::string>& header() const { return header_; }
  const std::string& source() const { return source_; }

 private:
  std::istream& in_;
  std::string source_;
  std::vector<std::string> header_;
  std::size_t line_ = 0;
};

std::vector<std::string> split_line(std::string_view line);

/// Strict conversions; `what` is used in error messages ("file:line column").
double parse_double(std::string_view text, const std::string& what);
int parse_int(std::string_view text, const std::string& what);

/// Empty, "NA", "NaN" and "." denote a missing value.
std::optional<double> parse_optional_double(std::string_view text, const std::string& what);

/// Round-trip formatting with 17 significant digits; NaN is written as NA.
std::string format_double(double value);

std::string trim(std::string_view text);

}  // namespace ndm::csv
