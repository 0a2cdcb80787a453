#pragma once

#include <vector>

#include "genmv/market/tree.hpp"

namespace genmv::market {

// Discretization for the quadratic-hedging dynamic program.
//
// Default mode: one uniform wealth grid shared by all nodes, sized to cover
// every wealth reachable from w0 under the worst-case |a^T dS| accumulation;
// off-grid wealths met during backup are linearly interpolated.
//
// exact_reachable mode: each (level, node) carries exactly the finite set of
// wealths reachable from w0 under action-grid strategies, so the backup never
// interpolates and the program equals exhaustive strategy enumeration to
// floating-point accuracy. Set sizes grow like action_points^level per node;
// intended for small trees (oracles, duality and stability studies).
struct HedgeGrids {
  int wealth_points = 201;
  int action_points = 21;
  bool exact_reachable = false;
  double w0 = 0.0;
  // Uniform mode only: override the auto-computed per-level band radius. A
  // radius too small for the tree makes reachable wealth escape the grid,
  // which aborts with a bound report.
  double wealth_radius = -1.0;
};

// Value/argmin tables over wealth for one (level, node).
struct WealthTable {
  Vec wealths;  // sorted ascending
  Vec values;
  Mat actions;  // one row per wealth point; empty at the terminal level

  // Linear interpolation inside the range; linear extrapolation from the end
  // segments outside (queries during the solve never leave the range).
  double value_at(double w) const;
  // Action of the nearest grid wealth (ties toward the lower point).
  Vec action_at(double w) const;
};

// Solution of V(t, w, node) = min_a E[ V(t+1, w + a^T dS, child) | node ],
// V(T, w) = (c - w)^2, actions restricted to a deterministic grid over K,
// argmin ties broken toward the smallest action index.
struct HedgeValue {
  double c = 0.0;
  HedgeGrids grids;
  std::vector<std::vector<WealthTable>> table;  // [level][position in level]

  const WealthTable& at(int level, int pos) const;
  double root_value(double w) const;
  double root_value() const;  // at grids.w0
};

HedgeValue solve_hedge_dpp(const ScenarioTree& tree, double c,
                           const ConstraintSet& K, const HedgeGrids& grids);

// Mean-variance objective E[W] - (gamma/2) Var[W] of a weighted terminal
// wealth sample. Weights must be nonnegative and sum to 1.
double mv_value(const Vec& wealths, const Vec& weights, double gamma);

// Duality search v* = sup_{a >= 0} { -(gamma/2) V(1/gamma + a) + 1/(2 gamma) + a }
// over a multiplier grid with iterative local refinement around the argmax.
struct DualMvConfig {
  double a_max = -1.0;    // < 0 means 5 / gamma
  int a_points = 101;
  int refine_rounds = 3;  // re-grid between the argmax's grid neighbors
  HedgeGrids grids;
};
struct DualMvResult {
  double v_star = 0.0;
  double a_star = 0.0;
  HedgeValue hedge;          // solved at the optimal multiplier
  bool argmax_at_cap = false;  // a* landed on the a_max boundary
};
DualMvResult dual_mv(const ScenarioTree& tree, double gamma,
                     const ConstraintSet& K, const DualMvConfig& cfg);

}  // namespace genmv::market
