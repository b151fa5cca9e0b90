#pragma once

#include <string>
#include <vector>

#include "gal/common.hpp"

namespace gal {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;  // 1-based source line per data row
};

/// Strict comma-separated reader: no quoting, no escapes, uniform column
/// counts. Throws ParseError with the offending 1-based line number.
CsvTable read_csv(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

long long parse_int(const std::string& token, const std::string& context, std::size_t line);
double parse_real(const std::string& token, const std::string& context, std::size_t line);

}  // namespace gal
