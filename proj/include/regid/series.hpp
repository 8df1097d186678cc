#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "regid/errors.hpp"

namespace regid {

/// An N-variate time series: T rows of observations over named variables.
struct MultivariateSeries {
  std::vector<std::string> names;
  Eigen::MatrixXd data;  // T x N
  long t0 = 0;

  int n_vars() const { return static_cast<int>(data.cols()); }
  long length() const { return static_cast<long>(data.rows()); }

  void validate() const {
    if (n_vars() < 2)
      throw UsageError("series needs at least 2 variables, got " +
                       std::to_string(n_vars()));
    if (length() < 2)
      throw UsageError("series needs at least 2 time steps, got " +
                       std::to_string(length()));
    if (names.size() != static_cast<std::size_t>(n_vars()))
      throw ShapeError("series has " + std::to_string(names.size()) +
                       " names for " + std::to_string(n_vars()) + " columns");
    if (!data.allFinite()) throw DataError("series contains non-finite entries");
  }
};

namespace detail {

inline std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, delim)) out.push_back(cell);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

inline std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace detail

/// Reads a series from CSV: first row variable names, one time step per row.
/// Missing or non-numeric cells are reported with their row and column.
inline MultivariateSeries read_csv(const std::string& path, char delimiter = ',') {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path + "' is empty");
  MultivariateSeries series;
  for (auto& name : detail::split_line(line, delimiter))
    series.names.push_back(detail::trim(name));
  const std::size_t n = series.names.size();
  if (n < 2)
    throw DataError("'" + path + "': header has " + std::to_string(n) +
                    " columns, need at least 2");

  std::vector<double> values;
  long rows = 0;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_line(line, delimiter);
    if (cells.size() != n)
      throw DataError("'" + path + "' row " + std::to_string(lineno) + ": has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(n));
    for (std::size_t c = 0; c < n; ++c) {
      std::string cell = detail::trim(cells[c]);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() ||
          !std::isfinite(v))
        throw DataError("'" + path + "' row " + std::to_string(lineno) +
                        " column " + std::to_string(c + 1) + " ('" +
                        series.names[c] + "'): bad cell '" + cell + "'");
      values.push_back(v);
    }
    ++rows;
  }
  if (rows < 2)
    throw DataError("'" + path + "': fewer than 2 data rows");

  series.data = Eigen::Map<
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), rows, static_cast<long>(n));
  series.validate();
  return series;
}

/// Writes the CSV counterpart of read_csv. Values use %.17g so a round trip
/// is bit exact.
inline void write_csv(const MultivariateSeries& series, const std::string& path,
                      char delimiter = ',') {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  for (std::size_t i = 0; i < series.names.size(); ++i) {
    if (i) out << delimiter;
    out << series.names[i];
  }
  out << "\n";
  char buf[32];
  for (long t = 0; t < series.length(); ++t) {
    for (int j = 0; j < series.n_vars(); ++j) {
      if (j) out << delimiter;
      std::snprintf(buf, sizeof(buf), "%.17g", series.data(t, j));
      out << buf;
    }
    out << "\n";
  }
  if (!out) throw DataError("failed writing '" + path + "'");
}

}  // namespace regid
