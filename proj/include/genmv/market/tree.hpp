#pragma once

#include <functional>
#include <vector>

#include <json.hpp>

#include "genmv/common.hpp"
#include "genmv/transport/adapted.hpp"

namespace genmv::market {

// Finite scenario tree of price levels S^{1:T} for d assets. The underlying
// adapted measure must have a single depth-1 node: the time-1 price is
// deterministic. All prices must be strictly positive.
struct ScenarioTree {
  transport::AdaptedMeasure measure;

  int horizon() const { return measure.depth(); }  // T
  int dim() const { return measure.dim(); }        // d
  const Vec& root_price() const;
  void validate() const;

  // Adapted-measure JSON plus a "prices": true marker.
  nlohmann::json to_json() const;
  static ScenarioTree from_json(const nlohmann::json& doc);
};

// Flat, index-based view of a ScenarioTree for dynamic programming. Nodes are
// stored in depth-first order; `levels[l]` lists the nodes carrying the price
// S^{l+1} (so level 0 is the deterministic root).
struct TreeIndex {
  struct Node {
    Vec price;
    double cond_prob = 1.0;  // P(node | parent)
    double path_prob = 1.0;  // P(node)
    int parent = -1;
    int level = 0;
    std::vector<int> children;
  };
  std::vector<Node> nodes;
  std::vector<std::vector<int>> levels;

  int horizon() const { return static_cast<int>(levels.size()); }
  static TreeIndex build(const ScenarioTree& tree);
};

// Closed convex bounded action set K.
struct ConstraintSet {
  enum class Kind { Box, Simplex };
  Kind kind = Kind::Box;
  int d = 1;
  Vec lo, hi;  // per-dimension bounds, Box only

  void validate() const;
  bool contains(const Vec& a, double tol = 1e-9) const;
  // Deterministic uniform grid over K: Cartesian product of per-dimension
  // grids for a box; all compositions i/(points-1) summing to 1 for the
  // simplex. Order is lexicographic, which the smallest-index tie-break in
  // the dynamic program relies on.
  std::vector<Vec> action_grid(int points_per_dim) const;

  static ConstraintSet box(const Vec& lo, const Vec& hi);
  static ConstraintSet box1(double lo, double hi);
  static ConstraintSet simplex(int d);
};

enum class WealthMode { Shares, Proportions };

// Wealth sequence along one price path (rows of `prices` are times 1..T).
// Shares mode: w_{t+1} = w_t + a^T (S^{t+1} - S^t).
// Proportions mode: w_{t+1} = w_t (1 + a^T r^{t+1}), r the simple returns.
// `strategy(t, w)` is called with the 0-based step index t = 0..T-2 and the
// current wealth; its output must lie in the caller's constraint set.
Vec wealth_path(const Mat& prices, const std::function<Vec(int, double)>& strategy,
                WealthMode mode, double w0 = 0.0);

// Per-node non-degeneracy margin: the largest delta such that
// |E[a^T dS | node]|^2 <= (1 - delta) E[|a^T dS|^2 | node] for every action a,
// i.e. delta = 1 - m^T A^+ m with m, A the conditional first/second moments
// of the price increment. delta <= 0 flags a riskless-profit (arbitrage-like)
// node.
struct NodeDelta {
  int level = 0;  // level of the conditioning node
  int node = 0;   // flat TreeIndex id
  double delta = 1.0;
};
struct NonDegeneracyReport {
  std::vector<NodeDelta> nodes;
  double min_delta = 1.0;
  bool ok() const { return min_delta > 0.0; }
};
NonDegeneracyReport check_non_degeneracy(const ScenarioTree& tree);

}  // namespace genmv::market
