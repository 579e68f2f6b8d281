#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace wdmair::csv {

/// Quote a field when it holds a comma, quote, CR or LF (RFC 4180).
std::string escape(std::string_view field);

/// Shortest round-trip decimal representation, '.' as decimal separator.
std::string format(double v);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Parse a whole RFC 4180 document; CRLF and LF line ends are accepted.
std::vector<std::vector<std::string>> parse(std::string_view text);

/// Rows as header-keyed records.
class Table {
 public:
  explicit Table(std::vector<std::vector<std::string>> rows);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t size() const { return rows_.size(); }
  /// Throws wdmair::Error naming the column when it is absent.
  const std::string& at(std::size_t row, std::string_view column) const;
  double number(std::size_t row, std::string_view column) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace wdmair::csv
