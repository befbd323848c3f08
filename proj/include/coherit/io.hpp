#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "coherit/errors.hpp"

namespace coherit {

// Parse/format failure with the 1-based data location that caused it.
class CsvError : public CoheritError {
 public:
  CsvError(const std::string& message, int row, int col)
      : CoheritError(message + " at row " + std::to_string(row) + ", column " +
                     std::to_string(col)),
        row_(row),
        col_(col) {}
  int row() const { return row_; }
  int col() const { return col_; }

 private:
  int row_ = 0;
  int col_ = 0;
};

// Shortest representation that round-trips a double exactly (17 significant
// digits); infinities serialize as "inf" / "-inf".
std::string format_double(double value);
double parse_double(const std::string& cell, int row, int col);

struct NumericCsv {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

// Comma-separated, one header row, numeric cells, no quoting. Lines starting
// with '#' are skipped.
NumericCsv read_numeric_csv(const std::string& path);

void write_rows_csv(std::ostream& os, const std::vector<std::vector<std::string>>& rows);
void write_rows_csv(const std::string& path, const std::vector<std::vector<std::string>>& rows);

void write_numeric_csv(const std::string& path, const std::vector<std::string>& header,
                       const Eigen::MatrixXd& values);

}  // namespace coherit
