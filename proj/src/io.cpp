#include "coherit/io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace coherit {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

double parse_double(const std::string& cell, int row, int col) {
  std::string trimmed = cell;
  while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.front())))
    trimmed.erase(trimmed.begin());
  while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back())))
    trimmed.pop_back();
  if (trimmed.empty()) throw CsvError("empty cell", row, col);
  if (trimmed == "inf" || trimmed == "+inf") return std::numeric_limits<double>::infinity();
  if (trimmed == "-inf") return -std::numeric_limits<double>::infinity();
  if (trimmed == "nan") return std::numeric_limits<double>::quiet_NaN();
  double value = 0.0;
  const char* begin = trimmed.data();
  const char* end = begin + trimmed.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw CsvError("non-numeric cell '" + trimmed + "'", row, col);
  return value;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  cells.push_back(cell);
  return cells;
}

}  // namespace

NumericCsv read_numeric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CoheritError("cannot open '" + path + "'");
  NumericCsv csv;
  std::string line;
  std::vector<std::vector<double>> rows;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto cells = split_line(line);
    if (!have_header) {
      csv.header = cells;
      have_header = true;
      continue;
    }
    if (cells.size() != csv.header.size())
      throw CsvError("expected " + std::to_string(csv.header.size()) + " cells, found " +
                         std::to_string(cells.size()),
                     line_no, 1);
    std::vector<double> row(cells.size());
    for (size_t j = 0; j < cells.size(); ++j) {
      row[j] = parse_double(cells[j], line_no, static_cast<int>(j) + 1);
    }
    rows.push_back(std::move(row));
  }
  if (!have_header) throw CoheritError("'" + path + "' has no header row");
  csv.values.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(csv.header.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < rows[i].size(); ++j) {
      csv.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return csv;
}

void write_rows_csv(std::ostream& os, const std::vector<std::vector<std::string>>& rows) {
  for (const auto& row : rows) {
    for (size_t j = 0; j < row.size(); ++j) {
      if (j) os << ',';
      os << row[j];
    }
    os << '\n';
  }
}

void write_rows_csv(const std::string& path, const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw CoheritError("cannot write '" + path + "'");
  write_rows_csv(out, rows);
}

void write_numeric_csv(const std::string& path, const std::vector<std::string>& header,
                       const Eigen::MatrixXd& values) {
  std::ofstream out(path);
  if (!out) throw CoheritError("cannot write '" + path + "'");
  for (size_t j = 0; j < header.size(); ++j) {
    if (j) out << ',';
    out << header[j];
  }
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j) out << ',';
      out << format_double(values(i, j));
    }
    out << '\n';
  }
}

}  // namespace coherit
