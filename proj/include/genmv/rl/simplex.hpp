#pragma once

#include "genmv/common.hpp"

namespace genmv::rl {

// Euclidean projection of v onto the probability simplex
// {a : a_i >= 0, sum a_i = 1}, computed by the sorting method: with the
// entries sorted descending, find the largest k such that
// u_k + (1 - sum_{i<=k} u_i)/k > 0 and clamp at that threshold. O(d log d),
// exact and deterministic.
Vec project_simplex(const Vec& v);

}  // namespace genmv::rl
