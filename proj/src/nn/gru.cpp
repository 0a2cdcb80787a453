#include "genmv/nn/gru.hpp"

#include <cmath>

namespace genmv::nn {

namespace {
inline Mat sigmoid(Mat z) {
  for (long i = 0; i < z.size(); ++i) z.data()[i] = 1.0 / (1.0 + std::exp(-z.data()[i]));
  return z;
}
inline Mat tanh_m(Mat z) {
  for (long i = 0; i < z.size(); ++i) z.data()[i] = std::tanh(z.data()[i]);
  return z;
}
}  // namespace

GruEncoder::GruEncoder(int in_dim, int hidden_dim) : d_(in_dim), dh_(hidden_dim) {
  if (in_dim <= 0 || hidden_dim <= 0) throw ConfigError("GruEncoder: dims must be positive");
  Wz = Wr = Wh = Mat::Zero(dh_, d_);
  Uz = Ur = Uh = Mat::Zero(dh_, dh_);
  bz = br = bh = Vec::Zero(dh_);
}

GruEncoder GruEncoder::init(int in_dim, int hidden_dim, Rng& rng) {
  GruEncoder e(in_dim, hidden_dim);
  auto fill = [&rng](Mat& m) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(m.cols()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (long i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  };
  fill(e.Wz); fill(e.Wr); fill(e.Wh);
  fill(e.Uz); fill(e.Ur); fill(e.Uh);
  return e;
}

Mat GruEncoder::step(const Mat& X, const Mat& H_prev, StepCache& c) const {
  if (X.cols() != d_ || H_prev.cols() != dh_ || X.rows() != H_prev.rows())
    throw ConfigError("GruEncoder::step: shape mismatch");
  c.X = X;
  c.H_prev = H_prev;
  Mat az = X * Wz.transpose() + H_prev * Uz.transpose();
  az.rowwise() += bz.transpose();
  c.Z = sigmoid(std::move(az));
  Mat ar = X * Wr.transpose() + H_prev * Ur.transpose();
  ar.rowwise() += br.transpose();
  c.R = sigmoid(std::move(ar));
  Mat ah = X * Wh.transpose() + (c.R.array() * H_prev.array()).matrix() * Uh.transpose();
  ah.rowwise() += bh.transpose();
  c.Hc = tanh_m(std::move(ah));
  return ((1.0 - c.Z.array()) * H_prev.array() + c.Z.array() * c.Hc.array()).matrix();
}

Mat GruEncoder::step(const Mat& X, const Mat& H_prev) const {
  StepCache c;
  return step(X, H_prev, c);
}

Vec GruEncoder::step(const Vec& x, const Vec& h_prev) const {
  Mat X = x.transpose(), H = h_prev.transpose();
  return step(X, H).row(0).transpose();
}

Mat GruEncoder::encode(const Mat& path, const Vec& h0) const {
  if (path.cols() != d_) throw ConfigError("GruEncoder::encode: input dim mismatch");
  if (h0.size() != dh_) throw ConfigError("GruEncoder::encode: h0 dim mismatch");
  Mat out(path.rows(), dh_);
  Vec h = h0;
  for (long t = 0; t < path.rows(); ++t) {
    h = step(Vec(path.row(t).transpose()), h);
    out.row(t) = h.transpose();
  }
  return out;
}

Mat GruEncoder::encode(const Mat& path) const { return encode(path, Vec::Zero(dh_)); }

void GruEncoder::Grads::zero() {
  dWz.setZero(); dWr.setZero(); dWh.setZero();
  dUz.setZero(); dUr.setZero(); dUh.setZero();
  dbz.setZero(); dbr.setZero(); dbh.setZero();
}

Vec GruEncoder::Grads::flatten() const {
  const Mat* ms[] = {&dWz, &dWr, &dWh, &dUz, &dUr, &dUh};
  const Vec* vs[] = {&dbz, &dbr, &dbh};
  long n = 0;
  for (auto* m : ms) n += m->size();
  for (auto* v : vs) n += v->size();
  Vec out(n);
  long at = 0;
  for (auto* m : ms) {
    out.segment(at, m->size()) = Eigen::Map<const Vec>(m->data(), m->size());
    at += m->size();
  }
  for (auto* v : vs) {
    out.segment(at, v->size()) = *v;
    at += v->size();
  }
  return out;
}

GruEncoder::Grads GruEncoder::grads_like() const {
  Grads g;
  g.dWz = g.dWr = g.dWh = Mat::Zero(dh_, d_);
  g.dUz = g.dUr = g.dUh = Mat::Zero(dh_, dh_);
  g.dbz = g.dbr = g.dbh = Vec::Zero(dh_);
  return g;
}

std::pair<Mat, Mat> GruEncoder::step_backward(const StepCache& c, const Mat& dH,
                                              Grads& g) const {
  // H = (1-Z).H_prev + Z.Hc with Hc = tanh(X Wh' + (R.H_prev) Uh' + bh).
  Mat dZ = (dH.array() * (c.Hc.array() - c.H_prev.array())).matrix();
  Mat dHc = (dH.array() * c.Z.array()).matrix();
  Mat dH_prev = (dH.array() * (1.0 - c.Z.array())).matrix();

  Mat dAh = (dHc.array() * (1.0 - c.Hc.array().square())).matrix();
  Mat rh = (c.R.array() * c.H_prev.array()).matrix();
  g.dWh += dAh.transpose() * c.X;
  g.dUh += dAh.transpose() * rh;
  g.dbh += dAh.colwise().sum().transpose();
  Mat dRH = dAh * Uh;
  Mat dR = (dRH.array() * c.H_prev.array()).matrix();
  dH_prev += (dRH.array() * c.R.array()).matrix();

  Mat dAr = (dR.array() * c.R.array() * (1.0 - c.R.array())).matrix();
  g.dWr += dAr.transpose() * c.X;
  g.dUr += dAr.transpose() * c.H_prev;
  g.dbr += dAr.colwise().sum().transpose();
  dH_prev += dAr * Ur;

  Mat dAz = (dZ.array() * c.Z.array() * (1.0 - c.Z.array())).matrix();
  g.dWz += dAz.transpose() * c.X;
  g.dUz += dAz.transpose() * c.H_prev;
  g.dbz += dAz.colwise().sum().transpose();
  dH_prev += dAz * Uz;

  Mat dX = dAh * Wh + dAr * Wr + dAz * Wz;
  return {std::move(dX), std::move(dH_prev)};
}

long GruEncoder::param_count() const {
  return 3L * dh_ * d_ + 3L * dh_ * dh_ + 3L * dh_;
}

Vec GruEncoder::flatten() const {
  const Mat* ms[] = {&Wz, &Wr, &Wh, &Uz, &Ur, &Uh};
  const Vec* vs[] = {&bz, &br, &bh};
  Vec out(param_count());
  long at = 0;
  for (auto* m : ms) {
    out.segment(at, m->size()) = Eigen::Map<const Vec>(m->data(), m->size());
    at += m->size();
  }
  for (auto* v : vs) {
    out.segment(at, v->size()) = *v;
    at += v->size();
  }
  return out;
}

void GruEncoder::set_flat(const Vec& flat) {
  if (flat.size() != param_count()) throw ConfigError("GruEncoder::set_flat: size mismatch");
  Mat* ms[] = {&Wz, &Wr, &Wh, &Uz, &Ur, &Uh};
  Vec* vs[] = {&bz, &br, &bh};
  long at = 0;
  for (auto* m : ms) {
    Eigen::Map<Vec>(m->data(), m->size()) = flat.segment(at, m->size());
    at += m->size();
  }
  for (auto* v : vs) {
    *v = flat.segment(at, v->size());
    at += v->size();
  }
}

}  // namespace genmv::nn
