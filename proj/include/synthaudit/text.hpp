#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "synthaudit/error.hpp"

namespace synthaudit {

inline std::string trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s, char sep = ',') {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

namespace csv {

/// RFC-4180 reader: comma separator, double-quote quoting with "" escapes,
/// LF or CRLF record ends. Quoted fields may span lines.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  /// Next record; returns false at end of input. A blank line yields an empty
  /// record (zero fields).
  bool next(std::vector<std::string>& fields) {
    fields.clear();
    int ch = in_.get();
    if (ch == std::char_traits<char>::eof()) return false;
    std::string field;
    bool quoted = false;
    bool any = false;
    while (true) {
      if (ch == std::char_traits<char>::eof()) {
        require(!quoted, ErrorCode::io, "unterminated quoted field at end of input");
        if (any || !field.empty()) fields.push_back(std::move(field));
        return true;
      }
      const char c = static_cast<char>(ch);
      if (quoted) {
        if (c == '"') {
          if (in_.peek() == '"') {
            in_.get();
            field.push_back('"');
          } else {
            quoted = false;
          }
        } else {
          field.push_back(c);
        }
      } else if (c == '"') {
        quoted = true;
        any = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
        any = true;
      } else if (c == '\n') {
        if (any || !field.empty()) fields.push_back(std::move(field));
        return true;
      } else if (c == '\r') {
        if (in_.peek() == '\n') in_.get();
        if (any || !field.empty()) fields.push_back(std::move(field));
        return true;
      } else {
        field.push_back(c);
      }
      ch = in_.get();
    }
  }

 private:
  std::istream& in_;
};

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << quote(fields[i]);
  }
  out << '\n';
}

}  // namespace csv

/// Flat key-value document: one `key = value` per line, `#` starts a comment,
/// blank lines ignored. Order and repeats are preserved.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

inline KeyValues parse_key_values(std::istream& in) {
  KeyValues out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::invalid_input,
            "line " + std::to_string(lineno) + ": expected 'key = value'");
    auto key = trim(std::string_view(line).substr(0, eq));
    require(!key.empty(), ErrorCode::invalid_input, "line " + std::to_string(lineno) + ": empty key");
    out.emplace_back(std::move(key), trim(std::string_view(line).substr(eq + 1)));
  }
  return out;
}

inline KeyValues parse_key_values(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_key_values(in);
}

}  // namespace synthaudit
