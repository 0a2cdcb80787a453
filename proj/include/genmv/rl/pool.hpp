#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "genmv/common.hpp"
#include "genmv/diffusion/sampler.hpp"
#include "genmv/market/tree.hpp"

namespace genmv::rl {

// One environment scenario: a price path s^1..s^T (rows) and the feature
// path h^1..h^T the agent conditions on (row t-1 holds the feature available
// when the time-t decision is made).
struct Scenario {
  Mat prices;    // T x d
  Mat features;  // T x d_feat
};

// Fixed-capacity store of generator-produced scenarios serving as the agent's
// environment. All entries share one shape and one initial price s0 (the
// deterministic time-0 price used for return reconstruction). An optional
// verifier recomputes the feature path from the price path at insertion so a
// stale or hand-edited feature path cannot enter the pool.
class ScenarioPool {
 public:
  ScenarioPool(int capacity, Vec s0);

  // verifier(prices) -> expected features; insertion checks agreement to tol.
  void set_verifier(std::function<Mat(const Mat&)> verifier, double tol = 1e-8);

  void insert(Mat prices, Mat features);
  int size() const { return static_cast<int>(entries_.size()); }
  int capacity() const { return capacity_; }
  int horizon() const;   // T
  int dim() const;       // d
  int feat_dim() const;  // d_feat
  const Vec& s0() const { return s0_; }
  const Scenario& at(int i) const;

 private:
  int capacity_ = 0;
  Vec s0_;
  std::vector<Scenario> entries_;
  std::function<Mat(const Mat&)> verifier_;
  double verifier_tol_ = 1e-8;
};

// Pool over the root-to-leaf paths of a scenario tree, with the per-path copy
// count proportional to the path probability (largest-remainder rounding, so
// the counts sum exactly to capacity). Features are the prices themselves.
ScenarioPool pool_from_tree(const market::ScenarioTree& tree, int capacity);

// Pool of i.i.d. Gaussian-return paths: s^t = s^{t-1} (1 + r^t) with
// r^t ~ N(mean, cov) per period and s^0 = ones. Rejects draws with any
// 1 + r <= 0 (resampled, counted; > 1% rejections aborts).
ScenarioPool pool_from_gaussian(const Vec& mean, const Mat& cov, int T, int capacity,
                                std::uint64_t seed);

// Pool sampled from a trained generator: return paths from the adaptive
// reverse chain become price paths via s^t = s^{t-1}(1 + r^t), s^0 = ones,
// and the features are the encoder states h^1..h^T. The pool's verifier is
// wired to the model's encoder. `context` rows are observed returns (data
// units) warm-starting the encoder.
ScenarioPool pool_from_generator(const diffusion::ScoreModel& model,
                                 const diffusion::PathSampleConfig& cfg,
                                 const std::optional<Mat>& context = std::nullopt);

// Price features for deployments longer than the training horizon: at time
// t = kT + t0 (t0 in [1, T]) the feature is s0 . s^t / s^{kT} elementwise,
// which rescales each cycle to the first one; for t <= T it is s^t itself.
// `prices` rows are s^1..s^n; `boundary` is updated to s^{kT} as t crosses
// cycle boundaries when the caller streams prices one row at a time.
Mat cycle_normalized_features(const Mat& prices, const Vec& s0, int T);

}  // namespace genmv::rl
