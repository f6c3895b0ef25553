#pragma once

#include <string>
#include <vector>

#include "estimand/cli/config.hpp"

namespace estimand::cli {

/// Fixed 12 significant digits, '.' decimal separator.
std::string format_number(double v);

/// Column-ordered CSV with optional '#' provenance lines before the header.
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(const std::vector<double>& values);
  std::string str() const;
};

/// Numeric columns of a CSV (text cells become NaN), skipping comment lines; used by tests and the
/// Python layer to read emitted curves back.
struct ParsedCsv {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const;
  std::vector<double> values(const std::string& name) const;
};
ParsedCsv parse_numeric_csv(const std::string& text);

/// Writes to `path` through a temporary sibling and a rename.
void write_atomic(const std::string& path, const std::string& content);

Json scheme_json(const IntegrationScheme& scheme);
/// `scheme=<kind> [nodes=|points= scramble_seed=] tolerance=` for CSV comments.
std::string scheme_comment(const IntegrationScheme& scheme);

}  // namespace estimand::cli
