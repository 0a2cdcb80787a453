#pragma once

#include <utility>
#include <vector>

#include "genmv/common.hpp"

namespace genmv::nn {

// Single GRU-style gated cell implementing the feature recursion
// h^t = R(s^t, h^{t-1}). Initial hidden state convention: zeros.
class GruEncoder {
 public:
  GruEncoder() = default;
  GruEncoder(int in_dim, int hidden_dim);
  static GruEncoder init(int in_dim, int hidden_dim, Rng& rng);

  int in_dim() const { return d_; }
  int hidden_dim() const { return dh_; }

  struct StepCache {
    Mat X, H_prev, Z, R, Hc;
  };

  // One gated update, batch rows. H = (1-Z).H_prev + Z.Hc.
  Mat step(const Mat& X, const Mat& H_prev, StepCache& cache) const;
  Mat step(const Mat& X, const Mat& H_prev) const;
  Vec step(const Vec& x, const Vec& h_prev) const;

  // Hidden states (h^1..h^T) for one path given as T x d, rows = time.
  Mat encode(const Mat& path, const Vec& h0) const;
  Mat encode(const Mat& path) const;  // h0 = zeros

  struct Grads {
    Mat dWz, dWr, dWh, dUz, dUr, dUh;
    Vec dbz, dbr, dbh;
    void zero();
    Vec flatten() const;
  };
  Grads grads_like() const;

  // Accumulates parameter grads for one step; returns (dX, dH_prev).
  std::pair<Mat, Mat> step_backward(const StepCache& c, const Mat& dH, Grads& g) const;

  long param_count() const;
  Vec flatten() const;
  void set_flat(const Vec& flat);

  Mat Wz, Wr, Wh;  // dh x d
  Mat Uz, Ur, Uh;  // dh x dh
  Vec bz, br, bh;  // dh

 private:
  int d_ = 0, dh_ = 0;
};

}  // namespace genmv::nn
