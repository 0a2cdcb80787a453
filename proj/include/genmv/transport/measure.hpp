#pragma once

#include "genmv/common.hpp"

namespace genmv::transport {

// Finite-support probability measure on R^d, one atom per row.
struct DiscreteMeasure {
  Mat points;   // n x d
  Vec weights;  // n, nonnegative, sums to 1

  int size() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }
  void validate() const;
};

// Exact squared-cost optimal transport; returns W2 (the root, not the square).
double w2(const DiscreteMeasure& mu, const DiscreteMeasure& nu);
double w2_squared(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// Both routes exposed so tests can cross-check sorting against the LP.
double w2_squared_sorted_1d(const DiscreteMeasure& mu, const DiscreteMeasure& nu);
double w2_squared_lp(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// min_pi sum_ij pi_ij * cost(i,j) over couplings of weight vectors p and q.
double ot_value(const Vec& p, const Vec& q, const Mat& cost);

}  // namespace genmv::transport
