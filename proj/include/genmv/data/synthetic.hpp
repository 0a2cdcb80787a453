#pragma once

#include <vector>

#include "genmv/common.hpp"

namespace genmv::data {

// Parameters of the i.i.d. Gaussian return model: monthly returns are drawn
// from N(mu / periods_per_year, sigma / periods_per_year).
struct SyntheticSpec {
  Vec mu;     // annualized mean, length d
  Mat sigma;  // annualized covariance, d x d, symmetric PSD
  int periods_per_year = 12;
  int T = 12;  // periods per generated path
  std::uint64_t seed = 1;
};

// The 10-asset benchmark parameter set used by the synthetic experiments
// (annualized units; the covariance is a correlation-block structure quoted
// to four decimals, which keeps it comfortably positive definite).
Vec synthetic10_mean();
Mat synthetic10_cov();

// Draws n_paths independent return paths, each T x d with i.i.d. rows.
// Deterministic per (seed, path index); rows producing a return <= -1 are
// redrawn (and counted; an excessive rejection rate aborts). The covariance
// may be singular (e.g., exactly zero), in which case the degenerate
// directions carry no noise.
std::vector<Mat> gen_synthetic(const SyntheticSpec& spec, int n_paths);

}  // namespace genmv::data
