#include "wdmair/csv.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include "wdmair/core.hpp"

namespace wdmair::csv {

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out << ',';
    out << escape(fields[i]);
  }
  out << "\r\n";
}

std::vector<std::vector<std::string>> parse(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = true;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (field_started || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      field_started = false;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw Error("csv: unterminated quoted field");
  if (field_started || !field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

Table::Table(std::vector<std::vector<std::string>> rows) {
  if (rows.empty()) throw Error("csv: missing header line");
  header_ = std::move(rows.front());
  rows.erase(rows.begin());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != header_.size()) {
      throw Error("csv: row " + std::to_string(r + 1) + " has " + std::to_string(rows[r].size()) +
                  " fields, header has " + std::to_string(header_.size()));
    }
  }
  rows_ = std::move(rows);
}

const std::string& Table::at(std::size_t row, std::string_view column) const {
  for (std::size_t c = 0; c < header_.size(); ++c) {
    if (header_[c] == column) return rows_.at(row).at(c);
  }
  throw Error("csv: missing column '" + std::string(column) + "'");
}

double Table::number(std::size_t row, std::string_view column) const {
  const std::string& s = at(row, column);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error("csv: column '" + std::string(column) + "' is not numeric: '" + s + "'");
  }
  return v;
}

}  // namespace wdmair::csv
