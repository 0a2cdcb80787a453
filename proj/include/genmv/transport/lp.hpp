#pragma once

#include "genmv/common.hpp"

namespace genmv::transport {

struct LpSolution {
  Vec x;
  double value = 0.0;
};

// Dense two-phase primal simplex with Bland's anti-cycling rule for
//   min c'x  s.t.  Ax = b, x >= 0.
// Redundant equality rows are tolerated (dropped after phase 1). Throws
// NumericError on infeasible or unbounded instances. Intended for the small
// transport instances in this repo (a few thousand variables at most).
LpSolution lp_solve_min(const Mat& A, const Vec& b, const Vec& c);

}  // namespace genmv::transport
