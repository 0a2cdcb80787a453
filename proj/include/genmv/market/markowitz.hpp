#pragma once

#include "genmv/common.hpp"

namespace genmv::market {

// One-period Markowitz weights under no-shortselling, no-borrowing, full
// investment: argmax over the probability simplex of
//   a^T mean - (gamma/2) a^T cov a,
// solved by projected gradient ascent with the exact sorting-based simplex
// projection. cov must be symmetric PSD (eigenvalue floor -1e-8); gamma > 0.
// Deterministic given inputs.
Vec markowitz_simplex(const Vec& mean, const Mat& cov, double gamma,
                      int max_iter = 20000, double tol = 1e-14);

}  // namespace genmv::market
