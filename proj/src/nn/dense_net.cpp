#include "genmv/nn/dense_net.hpp"

#include <cmath>

namespace genmv::nn {

double act_eval(Act a, double z) {
  switch (a) {
    case Act::Identity: return z;
    case Act::Tanh: return std::tanh(z);
    case Act::Relu: return z > 0.0 ? z : 0.0;
  }
  return z;
}

double act_deriv_from_post(Act a, double post) {
  switch (a) {
    case Act::Identity: return 1.0;
    case Act::Tanh: return 1.0 - post * post;
    case Act::Relu: return post > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

Vec time_features(double u, int width) {
  if (width <= 0 || width % 2 != 0) throw ConfigError("time_features: width must be positive even");
  Vec f(width);
  double omega = 2.0 * M_PI;
  for (int k = 0; k < width / 2; ++k) {
    f[2 * k] = std::sin(omega * u);
    f[2 * k + 1] = std::cos(omega * u);
    omega *= 2.0;
  }
  return f;
}

void DenseGrads::zero() {
  for (auto& m : dW) m.setZero();
  for (auto& v : db) v.setZero();
}

Vec DenseGrads::flatten() const {
  long n = 0;
  for (const auto& m : dW) n += m.size();
  for (const auto& v : db) n += v.size();
  Vec out(n);
  long at = 0;
  for (size_t l = 0; l < dW.size(); ++l) {
    out.segment(at, dW[l].size()) = Eigen::Map<const Vec>(dW[l].data(), dW[l].size());
    at += dW[l].size();
    out.segment(at, db[l].size()) = db[l];
    at += db[l].size();
  }
  return out;
}

void DenseGrads::add_scaled(const DenseGrads& other, double s) {
  for (size_t l = 0; l < dW.size(); ++l) {
    dW[l] += s * other.dW[l];
    db[l] += s * other.db[l];
  }
}

DenseNet::DenseNet(std::vector<int> sizes, std::vector<Act> acts)
    : sizes_(std::move(sizes)), acts_(std::move(acts)) {
  if (sizes_.size() < 2 || acts_.size() != sizes_.size() - 1)
    throw ConfigError("DenseNet: need >=2 sizes and one activation per layer");
  for (int s : sizes_)
    if (s <= 0) throw ConfigError("DenseNet: layer sizes must be positive");
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    W_.emplace_back(Mat::Zero(sizes_[l + 1], sizes_[l]));
    b_.emplace_back(Vec::Zero(sizes_[l + 1]));
  }
}

DenseNet DenseNet::init(std::vector<int> sizes, std::vector<Act> acts, Rng& rng) {
  DenseNet net(std::move(sizes), std::move(acts));
  for (int l = 0; l < net.n_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(net.W_[l].cols()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (long i = 0; i < net.W_[l].size(); ++i) net.W_[l].data()[i] = u(rng);
  }
  return net;
}

Vec DenseNet::forward(const Vec& x) const {
  Mat X = x.transpose();
  return forward(X).row(0).transpose();
}

Mat DenseNet::forward(const Mat& X) const {
  Cache c;
  return forward(X, c);
}

Mat DenseNet::forward(const Mat& X, Cache& cache) const {
  if (X.cols() != in_dim()) throw ConfigError("DenseNet::forward: input dim mismatch");
  cache.a.clear();
  cache.a.reserve(W_.size() + 1);
  cache.a.push_back(X);
  for (size_t l = 0; l < W_.size(); ++l) {
    Mat z = cache.a.back() * W_[l].transpose();
    z.rowwise() += b_[l].transpose();
    for (long i = 0; i < z.size(); ++i) z.data()[i] = act_eval(acts_[l], z.data()[i]);
    cache.a.push_back(std::move(z));
  }
  return cache.a.back();
}

Mat DenseNet::backward(const Cache& cache, const Mat& d_out, DenseGrads& g) const {
  if (d_out.rows() != cache.a.back().rows() || d_out.cols() != out_dim())
    throw ConfigError("DenseNet::backward: upstream shape mismatch");
  Mat d = d_out;
  for (int l = n_layers() - 1; l >= 0; --l) {
    const Mat& post = cache.a[l + 1];
    Mat d_pre = d;
    for (long i = 0; i < d_pre.size(); ++i)
      d_pre.data()[i] *= act_deriv_from_post(acts_[l], post.data()[i]);
    g.dW[l] += d_pre.transpose() * cache.a[l];
    g.db[l] += d_pre.colwise().sum().transpose();
    d = d_pre * W_[l];
  }
  return d;
}

DenseGrads DenseNet::grads_like() const {
  DenseGrads g;
  for (size_t l = 0; l < W_.size(); ++l) {
    g.dW.push_back(Mat::Zero(W_[l].rows(), W_[l].cols()));
    g.db.push_back(Vec::Zero(b_[l].size()));
  }
  return g;
}

long DenseNet::param_count() const {
  long n = 0;
  for (size_t l = 0; l < W_.size(); ++l) n += W_[l].size() + b_[l].size();
  return n;
}

Vec DenseNet::flatten() const {
  Vec out(param_count());
  long at = 0;
  for (size_t l = 0; l < W_.size(); ++l) {
    out.segment(at, W_[l].size()) = Eigen::Map<const Vec>(W_[l].data(), W_[l].size());
    at += W_[l].size();
    out.segment(at, b_[l].size()) = b_[l];
    at += b_[l].size();
  }
  return out;
}

void DenseNet::set_flat(const Vec& flat) {
  if (flat.size() != param_count()) throw ConfigError("DenseNet::set_flat: size mismatch");
  long at = 0;
  for (size_t l = 0; l < W_.size(); ++l) {
    Eigen::Map<Vec>(W_[l].data(), W_[l].size()) = flat.segment(at, W_[l].size());
    at += W_[l].size();
    b_[l] = flat.segment(at, b_[l].size());
    at += b_[l].size();
  }
}

}  // namespace genmv::nn
