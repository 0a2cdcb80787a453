#include "genmv/rl/pool.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include <Eigen/Cholesky>

namespace genmv::rl {

ScenarioPool::ScenarioPool(int capacity, Vec s0) : capacity_(capacity), s0_(std::move(s0)) {
  if (capacity_ < 1) throw ConfigError("ScenarioPool: capacity must be positive");
  if (s0_.size() < 1 || !s0_.allFinite() || s0_.minCoeff() <= 0.0)
    throw ConfigError("ScenarioPool: s0 must be positive and finite");
  entries_.reserve(static_cast<size_t>(capacity_));
}

void ScenarioPool::set_verifier(std::function<Mat(const Mat&)> verifier, double tol) {
  verifier_ = std::move(verifier);
  verifier_tol_ = tol;
}

void ScenarioPool::insert(Mat prices, Mat features) {
  if (size() >= capacity_) throw ConfigError("ScenarioPool: pool is full");
  if (prices.rows() < 2) throw ConfigError("ScenarioPool: need at least two price rows");
  if (prices.cols() != s0_.size()) throw ConfigError("ScenarioPool: price dim mismatch");
  if (features.rows() != prices.rows())
    throw ConfigError("ScenarioPool: feature path length mismatch");
  if (!entries_.empty() && features.cols() != entries_.front().features.cols())
    throw ConfigError("ScenarioPool: feature dim mismatch");
  if (!prices.allFinite() || prices.minCoeff() <= 0.0)
    throw NumericError("ScenarioPool: prices must be positive and finite");
  if (!features.allFinite()) throw NumericError("ScenarioPool: non-finite features");
  if (verifier_) {
    const Mat expect = verifier_(prices);
    if (expect.rows() != features.rows() || expect.cols() != features.cols() ||
        (expect - features).cwiseAbs().maxCoeff() > verifier_tol_)
      throw ConfigError(
          "ScenarioPool: stored features disagree with the encoder's recomputation");
  }
  entries_.push_back({std::move(prices), std::move(features)});
}

int ScenarioPool::horizon() const {
  if (entries_.empty()) throw ConfigError("ScenarioPool: empty pool");
  return static_cast<int>(entries_.front().prices.rows());
}

int ScenarioPool::dim() const { return static_cast<int>(s0_.size()); }

int ScenarioPool::feat_dim() const {
  if (entries_.empty()) throw ConfigError("ScenarioPool: empty pool");
  return static_cast<int>(entries_.front().features.cols());
}

const Scenario& ScenarioPool::at(int i) const {
  if (i < 0 || i >= size()) throw ConfigError("ScenarioPool: index out of range");
  return entries_[static_cast<size_t>(i)];
}

ScenarioPool pool_from_tree(const market::ScenarioTree& tree, int capacity) {
  tree.validate();
  Mat paths;
  Vec probs;
  tree.measure.enumerate_paths(paths, probs);
  const int T = tree.horizon();
  const int d = tree.dim();
  const long n = paths.rows();
  if (capacity < n)
    throw ConfigError("pool_from_tree: capacity smaller than the number of tree paths");

  // Largest-remainder allocation of `capacity` copies across paths.
  std::vector<long> count(n);
  std::vector<std::pair<double, long>> rem(n);
  long assigned = 0;
  for (long i = 0; i < n; ++i) {
    const double share = probs[i] * capacity;
    count[i] = static_cast<long>(std::floor(share));
    rem[i] = {share - static_cast<double>(count[i]), i};
    assigned += count[i];
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    return a.first > b.first;  // largest remainder first; ties keep path order
  });
  for (long k = 0; k < capacity - assigned; ++k) ++count[rem[static_cast<size_t>(k)].second];

  ScenarioPool pool(capacity, tree.root_price());
  for (long i = 0; i < n; ++i) {
    Mat prices(T, d);
    for (int t = 0; t < T; ++t) prices.row(t) = paths.row(i).segment(t * d, d);
    for (long k = 0; k < count[i]; ++k) pool.insert(prices, prices);
  }
  return pool;
}

ScenarioPool pool_from_gaussian(const Vec& mean, const Mat& cov, int T, int capacity,
                                std::uint64_t seed) {
  const int d = static_cast<int>(mean.size());
  if (d < 1 || cov.rows() != d || cov.cols() != d)
    throw ConfigError("pool_from_gaussian: mean/cov shape mismatch");
  if (T < 2) throw ConfigError("pool_from_gaussian: need T >= 2");
  if (!mean.allFinite() || !cov.allFinite())
    throw NumericError("pool_from_gaussian: non-finite inputs");
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success)
    throw ConfigError("pool_from_gaussian: covariance is not positive definite");
  const Mat L = llt.matrixL();

  ScenarioPool pool(capacity, Vec::Ones(d));
  long rejected = 0;
  for (int i = 0; i < capacity; ++i) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(i));
    Mat prices(T, d);
    Vec prev = Vec::Ones(d);
    for (int t = 0; t < T; ++t) {
      Vec r;
      for (;;) {
        r = mean + L * randn_vec(d, rng);
        if ((1.0 + r.array()).minCoeff() > 0.0) break;
        if (++rejected > capacity * T / 100 + 10)
          throw NumericError(
              "pool_from_gaussian: too many return draws at or below -100%");
      }
      prev = prev.cwiseProduct(Vec::Ones(d) + r);
      prices.row(t) = prev.transpose();
    }
    pool.insert(prices, prices);
  }
  return pool;
}

ScenarioPool pool_from_generator(const diffusion::ScoreModel& model,
                                 const diffusion::PathSampleConfig& cfg,
                                 const std::optional<Mat>& context) {
  const int d = model.config().d;
  const int T = static_cast<int>(cfg.length);
  if (T < 2) throw ConfigError("pool_from_generator: need path length >= 2");

  const diffusion::SampledPaths sampled = diffusion::sample_paths(model, cfg, context);

  // Feature paths are recomputed through the encoder from scratch so they are
  // bitwise-identical to what the pool's verifier recomputes at insertion.
  Vec h0 = Vec::Zero(model.config().hidden_dim);
  if (context && context->rows() > 0) {
    Mat ctx(context->rows(), d);
    for (long t = 0; t < context->rows(); ++t)
      ctx.row(t) = model.normalize(context->row(t).transpose()).transpose();
    const Mat states = model.encoder().encode(ctx);
    h0 = states.row(states.rows() - 1).transpose();
  }
  const nn::GruEncoder enc = model.encoder();
  const Vec norm_mean = model.norm_mean, norm_std = model.norm_std;
  const auto features_of = [enc, h0, norm_mean, norm_std](const Mat& prices) {
    Mat returns(prices.rows(), prices.cols());
    Vec prev = Vec::Ones(prices.cols());
    for (long t = 0; t < prices.rows(); ++t) {
      const Vec r = prices.row(t).transpose().cwiseQuotient(prev) - Vec::Ones(prices.cols());
      returns.row(t) = ((r - norm_mean).cwiseQuotient(norm_std)).transpose();
      prev = prices.row(t).transpose();
    }
    return enc.encode(returns, h0);
  };

  ScenarioPool pool(static_cast<int>(cfg.n_paths), Vec::Ones(d));
  pool.set_verifier(features_of);
  for (long i = 0; i < cfg.n_paths; ++i) {
    Mat prices(T, d);
    Vec prev = Vec::Ones(d);
    for (int t = 0; t < T; ++t) {
      const Vec r = sampled.paths[static_cast<size_t>(i)].row(t).transpose();
      if ((1.0 + r.array()).minCoeff() <= 0.0)
        throw NumericError("pool_from_generator: generated return at or below -100%");
      prev = prev.cwiseProduct(Vec::Ones(d) + r);
      prices.row(t) = prev.transpose();
    }
    pool.insert(prices, features_of(prices));
  }
  return pool;
}

Mat cycle_normalized_features(const Mat& prices, const Vec& s0, int T) {
  if (T < 1) throw ConfigError("cycle_normalized_features: need T >= 1");
  if (prices.cols() != s0.size())
    throw ConfigError("cycle_normalized_features: dim mismatch");
  if (!prices.allFinite() || prices.rows() < 1 || prices.minCoeff() <= 0.0 ||
      s0.minCoeff() <= 0.0)
    throw ConfigError("cycle_normalized_features: prices must be positive");
  Mat out(prices.rows(), prices.cols());
  for (long i = 0; i < prices.rows(); ++i) {
    const long t = i + 1;           // prices row i holds s^t
    const long k = (t - 1) / T;     // cycle index; 0 while t <= T
    const Vec boundary = (k == 0) ? s0 : Vec(prices.row(k * T - 1).transpose());
    out.row(i) = s0.cwiseProduct(prices.row(i).transpose()).cwiseQuotient(boundary);
  }
  return out;
}

}  // namespace genmv::rl
