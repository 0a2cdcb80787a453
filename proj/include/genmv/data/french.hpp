#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "genmv/common.hpp"

namespace genmv::data {

// A monthly return panel in the Kenneth R. French data-library layout:
// a header line naming the portfolio columns, then one row per month of
// "YYYYMM,v1,...,vd" with values in percent. Parsing converts percent to
// decimals and drops rows holding the library's missing-value sentinels
// (-99.99 and -999), recording which months were dropped.
struct MonthlyPanel {
  std::vector<int> months;           // YYYYMM, strictly increasing
  Mat returns;                       // n x d, decimal units
  std::vector<std::string> columns;  // d column names
  std::vector<int> dropped_months;   // excluded for sentinel values

  int n_months() const { return static_cast<int>(months.size()); }
  int dim() const { return static_cast<int>(columns.size()); }
  void validate() const;
};

// Parse from a stream; errors carry 1-based line numbers. Blank lines are
// skipped; every other line must match the schema exactly.
MonthlyPanel parse_industry_csv(std::istream& in);

MonthlyPanel load_industry_csv(const std::string& path);

// Writes the panel back in the same layout (percent units) with enough
// precision that load(write(panel)) reproduces `returns` bit for bit.
void write_industry_csv(const MonthlyPanel& panel, const std::string& path);

}  // namespace genmv::data
