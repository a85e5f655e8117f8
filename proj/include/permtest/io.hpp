#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "permtest/calibration.hpp"

namespace permtest {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double x);

/// Columnar CSV with a header row. Blank lines and lines starting with '#'
/// are skipped; fields are trimmed; no quoting.
class CsvTable {
 public:
  static CsvTable parse(std::istream& in);
  static CsvTable read_file(const std::string& path);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return cells_.size(); }
  bool has_column(std::string_view name) const;
  std::size_t column_index(std::string_view name) const;

  /// Throws std::invalid_argument on an unknown column or a non-numeric cell.
  std::vector<double> numeric(std::size_t col) const;
  /// Positive integer categories; anything else is std::invalid_argument.
  std::vector<int> categories(std::size_t col) const;
  const std::string& cell(std::size_t row, std::size_t col) const { return cells_[row][col]; }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> cells_;
};

/// {test, statistic, critical_value, p_value, reject, alpha, B, seed}.
nlohmann::json outcome_json(std::string_view test, const TestOutcome& outcome);

/// "# permtest-csv v1 experiment=<name>".
void write_csv_preamble(std::ostream& out, std::string_view experiment);

}  // namespace permtest
