#include "ndm/csv.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "ndm/error.hpp"

namespace ndm::csv {

std::string trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(trim(current));
  return fields;
}

Reader::Reader(std::istream& in, std::string source_name) : in_(in), source_(std::move(source_name)) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // UTF-8 byte order mark
    if (line_ == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    header_ = split_line(line);
    return;
  }
  throw DataError(source_ + ": missing header line");
}

std::vector<std::size_t> Reader::require_columns(const std::vector<std::string>& names) const {
  std::vector<std::size_t> positions;
  positions.reserve(names.size());
  for (const auto& name : names) {
    std::size_t found = header_.size();
    for (std::size_t i = 0; i < header_.size(); ++i) {
      if (header_[i] == name) {
        found = i;
        break;
      }
    }
    if (found == header_.size()) throw DataError(source_ + ": missing column '" + name + "' in header");
    positions.push_back(found);
  }
  return positions;
}

bool Reader::next(Row& row) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    row.line = line_;
    row.fields = split_line(line);
    if (row.fields.size() < header_.size()) {
      throw DataError(source_ + ":" + std::to_string(line_) + ": expected " + std::to_string(header_.size()) +
                      " fields, found " + std::to_string(row.fields.size()));
    }
    return true;
  }
  return false;
}

double parse_double(std::string_view text, const std::string& what) {
  const std::string t = trim(text);
  double value = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (t.empty() || ec != std::errc() || ptr != last) {
    throw DataError(what + ": cannot parse '" + t + "' as a number");
  }
  return value;
}

int parse_int(std::string_view text, const std::string& what) {
  const std::string t = trim(text);
  int value = 0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (t.empty() || ec != std::errc() || ptr != last) {
    throw DataError(what + ": cannot parse '" + t + "' as an integer");
  }
  return value;
}

std::optional<double> parse_optional_double(std::string_view text, const std::string& what) {
  const std::string t = trim(text);
  if (t.empty() || t == "NA" || t == "NaN" || t == "nan" || t == ".") return std::nullopt;
  return parse_double(t, what);
}

std::string format_double(double value) {
  if (std::isnan(value)) return "NA";
  if (std::isinf(value)) return value > 0 ? "Inf" : "-Inf";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

}  // namespace ndm::csv
