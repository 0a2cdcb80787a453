#pragma once

#include <optional>
#include <string>
#include <vector>

#include "genmv/common.hpp"

namespace genmv::data {

// A block of simple returns (rows = periods, columns = assets), optionally
// preceded by a context window of observed returns in the same units.
struct ReturnPath {
  Mat values;                       // T x d, each entry > -1
  std::optional<Mat> context;       // T_ctx x d returns preceding `values`
  std::vector<std::string> labels;  // column names; empty or size d

  void validate() const;
};

// Compound prices from simple returns: row 0 is s1, row t+1 = row t .* (1 + r^{t+1}).
// Output has returns.rows() + 1 rows.
Mat returns_to_prices(const Mat& returns, const Vec& s1);

// Inverse of returns_to_prices: consumes a path with at least two rows of
// positive prices and emits the rows of simple returns between them.
Mat prices_to_returns(const Mat& prices);

}  // namespace genmv::data
