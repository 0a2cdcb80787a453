#pragma once

#include <vector>

#include "genmv/market/hedge_dpp.hpp"

namespace genmv::market {

// Spearman rank correlation (average ranks on ties).
double spearman(const Vec& x, const Vec& y);

// Same-shape copy of `base` with every non-root price multiplied by an
// independent (1 + scale * U), U ~ Uniform(-1, 1). Requires scale in [0, 1)
// so prices stay positive.
ScenarioTree perturb_tree(const ScenarioTree& base, double scale, Rng& rng);

// Empirical stability study: perturb the base tree n times, and for each
// perturbation record the adapted-Wasserstein distance to the base and the
// shift |v*(base) - v*(perturbed)| of the dual mean-variance value. The
// report fits the tightest linear envelope dv <= C * aw2 + tol over points
// with aw2 > tol and checks every point against 1.05 * C * aw2 + tol.
struct StabilityConfig {
  int n_perturb = 30;
  double scale = 0.05;  // largest magnitude; runs ramp geometrically up from scale/1000
  std::uint64_t seed = 1;
  double gamma = 1.5;
  double tol = 1e-6;  // grid/refinement tolerance absorbed by the envelope
  ConstraintSet K = ConstraintSet::box1(-1.0, 1.0);
  DualMvConfig dual;
};

struct StabilityResult {
  Vec aw2_dist;  // n_perturb
  Vec dv;        // n_perturb
  double v_base = 0.0;
  double spearman_rho = 0.0;
  double envelope_C = 0.0;
  bool all_below_envelope = false;
};

StabilityResult stability_experiment(const ScenarioTree& base,
                                     const StabilityConfig& cfg);

}  // namespace genmv::market
