#pragma once

#include <vector>

#include <json.hpp>

#include "genmv/common.hpp"
#include "genmv/transport/measure.hpp"

namespace genmv::transport {

// Node of an adapted (tree-structured) measure. `weight` is the conditional
// probability of this node given its parent; sibling weights sum to 1.
struct AdaptedNode {
  Vec value;
  double weight = 1.0;
  std::vector<AdaptedNode> children;
};

// Law of a discrete-time path x^{1:T} in R^d as a weighted tree of depth T.
struct AdaptedMeasure {
  std::vector<AdaptedNode> roots;  // depth-1 nodes; weights sum to 1

  int depth() const;
  int dim() const;
  void validate() const;

  // All root-to-leaf trajectories, flattened to (T*d)-vectors, with their
  // joint probabilities.
  void enumerate_paths(Mat& paths, Vec& probs) const;
  DiscreteMeasure flatten() const;

  nlohmann::json to_json() const;
  static AdaptedMeasure from_json(const nlohmann::json& doc);
};

// Adapted Wasserstein distance (order 2) by exact backward induction; child
// optimal transports are solved as dense LPs. Returns the root (AW2).
double aw2(const AdaptedMeasure& mu, const AdaptedMeasure& nu);
double aw2_squared(const AdaptedMeasure& mu, const AdaptedMeasure& nu);

struct BicausalResult {
  double value = 0.0;  // squared cost: min sum |x^{1:T}-y^{1:T}|^2 pi
  Mat coupling;        // n_mu_paths x n_nu_paths joint weights
  Mat mu_paths, nu_paths;
  Vec mu_probs, nu_probs;
};

// One-shot LP over path-pair weights with marginal plus linearized causality
// constraints in both directions. Independent oracle for aw2; small instances
// only (at most 16 paths per side).
BicausalResult bicausal_lp(const AdaptedMeasure& mu, const AdaptedMeasure& nu);

// Quantizes each coordinate to the grid delta*Z (ties rounded half away from
// zero), merges equal prefixes, and weights nodes by empirical frequency.
// Each path is a T x d matrix, rows = time.
AdaptedMeasure adapted_empirical(const std::vector<Mat>& paths, double delta);

}  // namespace genmv::transport
