#include "genmv/data/french.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <string>

namespace genmv::data {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

[[noreturn]] void fail(long line_no, const std::string& what) {
  throw ConfigError("industry csv: line " + std::to_string(line_no) + ": " + what);
}

bool is_date_header(const std::string& cell) {
  std::string low = cell;
  std::transform(low.begin(), low.end(), low.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return low.empty() || low == "date" || low == "month" || low == "yyyymm";
}

double parse_value(const std::string& cell, long line_no) {
  if (cell.empty()) fail(line_no, "empty value cell");
  size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    fail(line_no, "cannot parse value '" + cell + "'");
  }
  if (used != cell.size()) fail(line_no, "trailing characters in value '" + cell + "'");
  if (!std::isfinite(v)) fail(line_no, "non-finite value '" + cell + "'");
  return v;
}

int parse_month(const std::string& cell, long line_no) {
  if (cell.size() != 6 || !std::all_of(cell.begin(), cell.end(),
                                       [](unsigned char c) { return std::isdigit(c); }))
    fail(line_no, "date '" + cell + "' is not of the form YYYYMM");
  const int ym = std::stoi(cell);
  const int mm = ym % 100;
  if (mm < 1 || mm > 12) fail(line_no, "month part of '" + cell + "' is not in 01..12");
  return ym;
}

bool is_sentinel(double percent) { return percent == -99.99 || percent == -999.0; }

// Percent string whose parse, divided by 100, reproduces r exactly. Starting
// from r*100 and stepping a few ulps always reaches a preimage when one
// exists (in particular for any r that itself came from a percent cell).
std::string percent_string(double r) {
  double p = r * 100.0;
  double lo = p, hi = p;
  for (int k = 0; k < 16; ++k) {
    if (p / 100.0 == r) break;
    lo = std::nextafter(lo, -1e308);
    hi = std::nextafter(hi, 1e308);
    if (lo / 100.0 == r) {
      p = lo;
      break;
    }
    if (hi / 100.0 == r) {
      p = hi;
      break;
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", p);
  return buf;
}

}  // namespace

void MonthlyPanel::validate() const {
  if (columns.empty()) throw ConfigError("MonthlyPanel: no columns");
  std::set<std::string> names;
  for (const auto& c : columns) {
    if (c.empty()) throw ConfigError("MonthlyPanel: empty column name");
    if (!names.insert(c).second) throw ConfigError("MonthlyPanel: duplicate column '" + c + "'");
  }
  if (returns.rows() != n_months() || returns.cols() != dim())
    throw ConfigError("MonthlyPanel: return matrix shape mismatch");
  for (size_t i = 1; i < months.size(); ++i)
    if (months[i] <= months[i - 1])
      throw ConfigError("MonthlyPanel: months must be strictly increasing");
  if (n_months() > 0) {
    if (!returns.allFinite()) throw NumericError("MonthlyPanel: non-finite returns");
    if ((returns.array() <= -1.0).any())
      throw ConfigError("MonthlyPanel: returns at or below -100%");
  }
}

MonthlyPanel parse_industry_csv(std::istream& in) {
  MonthlyPanel panel;
  std::string line;
  long line_no = 0;
  bool have_header = false;
  std::vector<Vec> rows;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_csv(line);
    if (!have_header) {
      size_t first = 0;
      if (!cells.empty() && is_date_header(cells[0])) first = 1;
      if (cells.size() <= first) fail(line_no, "header names no columns");
      for (size_t i = first; i < cells.size(); ++i) {
        if (cells[i].empty()) fail(line_no, "empty column name in header");
        panel.columns.push_back(cells[i]);
      }
      have_header = true;
      continue;
    }
    const size_t want = panel.columns.size() + 1;
    if (cells.size() != want)
      fail(line_no, "expected " + std::to_string(want) + " cells, found " +
                        std::to_string(cells.size()));
    const int month = parse_month(cells[0], line_no);
    if (!panel.months.empty() || !panel.dropped_months.empty()) {
      const int prev = std::max(panel.months.empty() ? 0 : panel.months.back(),
                                panel.dropped_months.empty() ? 0 : panel.dropped_months.back());
      if (month <= prev) fail(line_no, "months must be strictly increasing");
    }
    Vec row(panel.dim());
    bool missing = false;
    for (int j = 0; j < panel.dim(); ++j) {
      const double percent = parse_value(cells[static_cast<size_t>(j) + 1], line_no);
      if (is_sentinel(percent)) missing = true;
      row[j] = percent / 100.0;
    }
    if (missing) {
      panel.dropped_months.push_back(month);
      continue;
    }
    panel.months.push_back(month);
    rows.push_back(std::move(row));
  }
  if (!have_header) throw ConfigError("industry csv: empty input (no header line)");

  panel.returns.resize(static_cast<long>(rows.size()), panel.dim());
  for (size_t i = 0; i < rows.size(); ++i) panel.returns.row(static_cast<long>(i)) = rows[i];
  panel.validate();
  return panel;
}

MonthlyPanel load_industry_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("industry csv: cannot open '" + path + "'");
  return parse_industry_csv(in);
}

void write_industry_csv(const MonthlyPanel& panel, const std::string& path) {
  panel.validate();
  std::ofstream out(path);
  if (!out) throw ConfigError("industry csv: cannot write '" + path + "'");
  out << "Date";
  for (const auto& c : panel.columns) out << ',' << c;
  out << '\n';
  for (int i = 0; i < panel.n_months(); ++i) {
    out << panel.months[static_cast<size_t>(i)];
    for (int j = 0; j < panel.dim(); ++j) out << ',' << percent_string(panel.returns(i, j));
    out << '\n';
  }
  if (!out) throw ConfigError("industry csv: write failed for '" + path + "'");
}

}  // namespace genmv::data
