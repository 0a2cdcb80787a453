#pragma once

#include <vector>

#include "genmv/common.hpp"

namespace genmv::nn {

enum class Act { Identity, Tanh, Relu };

// Gradient buffers shaped like a DenseNet's parameters.
struct DenseGrads {
  std::vector<Mat> dW;
  std::vector<Vec> db;
  void zero();
  Vec flatten() const;
  void add_scaled(const DenseGrads& other, double s);
};

// Plain fully-connected network, one activation per layer, batch-first:
// matrices carry one sample per row.
class DenseNet {
 public:
  DenseNet() = default;
  // sizes = {in, hidden..., out}; acts has sizes.size()-1 entries.
  DenseNet(std::vector<int> sizes, std::vector<Act> acts);

  // Uniform fan-in init: W_ij ~ U(-1/sqrt(in), 1/sqrt(in)), b = 0.
  static DenseNet init(std::vector<int> sizes, std::vector<Act> acts, Rng& rng);

  int in_dim() const { return sizes_.front(); }
  int out_dim() const { return sizes_.back(); }
  int n_layers() const { return static_cast<int>(W_.size()); }
  const std::vector<int>& sizes() const { return sizes_; }
  const std::vector<Act>& acts() const { return acts_; }

  Mat& W(int l) { return W_[l]; }
  Vec& b(int l) { return b_[l]; }
  const Mat& W(int l) const { return W_[l]; }
  const Vec& b(int l) const { return b_[l]; }

  Vec forward(const Vec& x) const;
  Mat forward(const Mat& X) const;

  // Post-activation values per layer; acts[0] is the input batch.
  struct Cache {
    std::vector<Mat> a;
  };
  Mat forward(const Mat& X, Cache& cache) const;

  // Accumulates parameter gradients into g and returns d(loss)/d(input).
  Mat backward(const Cache& cache, const Mat& d_out, DenseGrads& g) const;

  DenseGrads grads_like() const;
  long param_count() const;
  Vec flatten() const;
  void set_flat(const Vec& flat);

 private:
  std::vector<int> sizes_;
  std::vector<Act> acts_;
  std::vector<Mat> W_;  // out x in
  std::vector<Vec> b_;
};

// Activation applied elementwise (batch form) and its derivative expressed
// through the post-activation value, which is all backward needs.
double act_eval(Act a, double z);
double act_deriv_from_post(Act a, double post);

// Sinusoidal positional features of a scalar u (callers normalize to [0,1]):
// [sin(2pi 2^k u), cos(2pi 2^k u)] for k = 0..width/2-1. width must be even.
Vec time_features(double u, int width);

}  // namespace genmv::nn
