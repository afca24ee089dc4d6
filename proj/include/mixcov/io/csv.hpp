#pragma once

#include "../types.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace mixcov::io {

struct Table
{
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

namespace detail {

inline std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& line)
{
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ','))
    out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',')
    out.emplace_back();
  return out;
}

} // namespace detail

//! Numeric CSV with a header row. Any malformed content is BAD_SCHEMA.
inline Table read_numeric_csv(std::istream& in)
{
  Table t;
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorCode::bad_schema, "csv: missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
    line.erase(0, 3);
  t.header = detail::split(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty())
      continue;
    const auto cells = detail::split(line);
    if (cells.size() != t.header.size())
      throw Error(ErrorCode::bad_schema, "csv: line " + std::to_string(lineno) + " has " +
                                           std::to_string(cells.size()) + " fields, expected " +
                                           std::to_string(t.header.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (c.empty() || end != c.c_str() + c.size() || !std::isfinite(v))
        throw Error(ErrorCode::bad_schema, "csv: non-numeric or missing value '" + c + "' on line " +
                                             std::to_string(lineno));
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

//! Dataset from a CSV with a `y` column; every other column is a covariate.
inline Dataset read_dataset(std::istream& in)
{
  const Table t = read_numeric_csv(in);
  std::size_t ycol = t.header.size();
  for (std::size_t j = 0; j < t.header.size(); ++j)
    if (t.header[j] == "y")
      ycol = j;
  if (ycol == t.header.size())
    throw Error(ErrorCode::bad_schema, "csv: no 'y' column");
  if (t.rows.empty())
    throw Error(ErrorCode::bad_schema, "csv: no data rows");
  const auto n = static_cast<Index>(t.rows.size());
  const auto p = static_cast<Index>(t.header.size()) - 1;
  VectorXd y(n);
  MatrixXd x(n, p);
  for (Index i = 0; i < n; ++i) {
    Index k = 0;
    for (std::size_t j = 0; j < t.header.size(); ++j) {
      if (j == ycol)
        y(i) = t.rows[static_cast<std::size_t>(i)][j];
      else
        x(i, k++) = t.rows[static_cast<std::size_t>(i)][j];
    }
  }
  return Dataset(std::move(y), std::move(x));
}

inline Dataset read_dataset(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::bad_schema, "cannot open '" + path + "'");
  return read_dataset(in);
}

} // namespace mixcov::io
