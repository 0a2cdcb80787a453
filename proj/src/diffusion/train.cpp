#include "genmv/diffusion/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace genmv::diffusion {

void TrainBatch::validate(const NoiseSchedule& sched, int d) const {
  if (paths.empty()) throw ConfigError("TrainBatch: empty");
  const long T = paths.front().rows();
  const long M = static_cast<long>(paths.size());
  for (const Mat& p : paths) {
    if (p.rows() != T || p.cols() != d) throw ConfigError("TrainBatch: path shape mismatch");
  }
  if (taus.size() != M) throw ConfigError("TrainBatch: taus size mismatch");
  if (zs.rows() != M || zs.cols() != d) throw ConfigError("TrainBatch: zs shape mismatch");
  for (long m = 0; m < M; ++m) {
    if (taus[m] < sched.tau0 - 1e-12 || taus[m] > sched.horizon + 1e-12)
      throw ConfigError("TrainBatch: tau outside [tau0, horizon]");
  }
}

DsmResult dsm_loss(const ScoreModel& model, const TrainBatch& batch) {
  const NoiseSchedule& sched = model.schedule();
  const int d = model.config().d;
  batch.validate(sched, d);
  const long M = static_cast<long>(batch.paths.size());
  const long T = batch.paths.front().rows();
  const int dh = model.config().hidden_dim;

  Vec h1v(M), sqrt_h2v(M);
  for (long m = 0; m < M; ++m) {
    h1v[m] = sched.h1(batch.taus[m]);
    sqrt_h2v[m] = std::sqrt(sched.h2(batch.taus[m]));
  }

  // Stacked per-time inputs: Xs[t] row m = path m's return at time t+1.
  std::vector<Mat> Xs(T, Mat(M, d));
  for (long t = 0; t < T; ++t)
    for (long m = 0; m < M; ++m) Xs[t].row(m) = batch.paths[m].row(t);

  // Forward recursion across the batch. H[k] = encoder state after k returns;
  // prediction of the (t+1)-th return conditions on H[t].
  std::vector<Mat> H(T);
  H[0] = Mat::Zero(M, dh);
  std::vector<nn::GruEncoder::StepCache> caches(std::max<long>(T - 1, 0));
  for (long k = 1; k < T; ++k) H[k] = model.encoder().step(Xs[k - 1], H[k - 1], caches[k - 1]);

  nn::GruEncoder::Grads enc_g = model.encoder().grads_like();
  enc_g.zero();
  nn::DenseGrads head_g = model.head().grads_like();
  head_g.zero();

  const double scale = 1.0 / static_cast<double>(T * M);
  double loss = 0.0;
  std::vector<Mat> dH(T);
  for (long t = 0; t < T; ++t) {
    Mat Xtau = h1v.asDiagonal() * Xs[t];
    for (long m = 0; m < M; ++m) Xtau.row(m) += sqrt_h2v[m] * batch.zs.row(m);
    ScoreModel::EvalCache cache;
    Mat S = model.score_rows(batch.taus, H[t], Xtau, cache);
    Mat R = sqrt_h2v.asDiagonal() * S + batch.zs;
    loss += R.squaredNorm();
    Mat dS = (2.0 * scale) * (sqrt_h2v.asDiagonal() * R);
    dH[t] = model.score_backward(cache, dS, head_g);
  }
  loss *= scale;

  // Backprop through time: caches[k-1] produced H[k] from H[k-1].
  Mat carry = Mat::Zero(M, dh);
  for (long k = T - 1; k >= 1; --k) {
    Mat total = dH[k] + carry;
    auto [dX, dHprev] = model.encoder().step_backward(caches[k - 1], total, enc_g);
    carry = std::move(dHprev);
  }
  // dH[0] targets the fixed zero initial state: no parameter flows through it.

  DsmResult out;
  out.loss = loss;
  out.grad = Vec(model.param_count());
  Vec ge = enc_g.flatten(), gh = head_g.flatten();
  out.grad << ge, gh;
  if (!std::isfinite(loss) || !out.grad.allFinite())
    throw NumericError("dsm_loss: non-finite loss or gradient");
  return out;
}

GeneratorTrainResult train_generator(const std::vector<Mat>& data, NoiseSchedule sched,
                                     ScoreModelConfig mcfg, GeneratorTrainConfig tcfg) {
  sched.validate();
  if (data.empty()) throw ConfigError("train_generator: no training paths");
  const long T = data.front().rows();
  const long n = static_cast<long>(data.size());
  for (const Mat& p : data) {
    if (p.rows() != T || p.cols() != mcfg.d)
      throw ConfigError("train_generator: path shape mismatch");
  }
  if (T < 1) throw ConfigError("train_generator: paths must have at least one row");
  if (tcfg.epochs < 0 || tcfg.batch_size < 1) throw ConfigError("train_generator: bad config");

  Rng init_rng = make_stream(tcfg.seed, 0);
  GeneratorTrainResult res{ScoreModel(sched, mcfg, init_rng), {}};
  ScoreModel& model = res.model;

  if (tcfg.standardize) {
    Vec mean = Vec::Zero(mcfg.d), sq = Vec::Zero(mcfg.d);
    const double cnt = static_cast<double>(n * T);
    for (const Mat& p : data) {
      mean += p.colwise().sum().transpose();
      sq += p.array().square().colwise().sum().matrix().transpose();
    }
    mean /= cnt;
    Vec var = (sq / cnt - mean.cwiseProduct(mean)).cwiseMax(0.0);
    Vec sd = var.cwiseSqrt();
    for (int j = 0; j < mcfg.d; ++j)
      if (sd[j] < 1e-12) sd[j] = 1.0;
    model.norm_mean = mean;
    model.norm_std = sd;
  }
  std::vector<Mat> norm(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    norm[i] = data[i];
    for (long t = 0; t < T; ++t)
      norm[i].row(t) =
          (data[i].row(t).transpose() - model.norm_mean).cwiseQuotient(model.norm_std).transpose();
  }

  Vec params = model.flatten();
  nn::Optimizer opt(tcfg.opt);
  nn::EmaTracker ema(params, tcfg.ema_decay, tcfg.ema_warmup);
  Rng rng = make_stream(tcfg.seed, 1);

  std::vector<long> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::uniform_real_distribution<double> utau(sched.tau0, sched.horizon);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (int ep = 0; ep < tcfg.epochs; ++ep) {
    if (tcfg.lr_final >= 0.0 && tcfg.epochs > 1) {
      const double c = 0.5 * (1.0 + std::cos(M_PI * ep / (tcfg.epochs - 1)));
      opt.set_lr(tcfg.lr_final + (tcfg.opt.lr - tcfg.lr_final) * c);
    }
    std::shuffle(order.begin(), order.end(), rng);
    double ep_loss = 0.0;
    for (long start = 0; start < n; start += tcfg.batch_size) {
      const long stop = std::min(n, start + tcfg.batch_size);
      TrainBatch batch;
      batch.taus = Vec(stop - start);
      batch.zs = Mat(stop - start, mcfg.d);
      for (long i = start; i < stop; ++i) {
        batch.paths.push_back(norm[order[i]]);
        batch.taus[i - start] = utau(rng);
        for (int j = 0; j < mcfg.d; ++j) batch.zs(i - start, j) = gauss(rng);
      }
      DsmResult r = dsm_loss(model, batch);
      ep_loss += r.loss * static_cast<double>(stop - start);
      if (tcfg.grad_clip > 0.0) {
        const double gn = r.grad.norm();
        if (gn > tcfg.grad_clip) r.grad *= tcfg.grad_clip / gn;
      }
      opt.step(params, std::move(r.grad));
      model.set_flat(params);
      ema.update(params);
    }
    res.epoch_losses.push_back(ep_loss / static_cast<double>(n));
  }

  if (tcfg.epochs > 0) model.set_flat(ema.shadow());
  return res;
}

}  // namespace genmv::diffusion
