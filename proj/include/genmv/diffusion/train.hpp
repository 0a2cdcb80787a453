#pragma once

#include <vector>

#include "genmv/diffusion/score_model.hpp"
#include "genmv/nn/optimizer.hpp"

namespace genmv::diffusion {

// One minibatch for denoising score matching: M paths (each T x d, already in
// normalized units), one diffusive time and one noise draw per path, shared
// across the path's T prediction targets.
struct TrainBatch {
  std::vector<Mat> paths;
  Vec taus;  // M entries in [tau0, horizon]
  Mat zs;    // M x d
  void validate(const NoiseSchedule& sched, int d) const;
};

struct DsmResult {
  double loss = 0.0;
  Vec grad;  // layout matches ScoreModel::flatten(): [encoder | head]
};

// (1/(T M)) sum_{t,m} | sqrt(h2(tau_m)) s_theta(tau_m, h^{t-1}_m, x_tau) + z_m |^2
// with x_tau = perturb(s^t_m, tau_m, z_m); gradients flow into the head and,
// through backprop-through-time, into the encoder.
DsmResult dsm_loss(const ScoreModel& model, const TrainBatch& batch);

struct GeneratorTrainConfig {
  int epochs = 200;
  int batch_size = 64;
  nn::OptimizerConfig opt{nn::OptKind::AdamW, 1e-3, 0.9, 0.999, 1e-8, 1e-2};
  double lr_final = 1e-5;   // cosine-decay target over the epochs; <0 keeps lr fixed
  double ema_decay = 0.999;
  bool ema_warmup = true;   // ramp decay so short runs are not stuck at init
  double grad_clip = 1.0;   // max gradient norm; <= 0 disables clipping
  std::uint64_t seed = 1;
  bool standardize = true;  // z-score per asset before training
};

struct GeneratorTrainResult {
  ScoreModel model;  // carries EMA weights
  std::vector<double> epoch_losses;
};

// Trains the conditional score model on raw-unit paths (each T x d).
GeneratorTrainResult train_generator(const std::vector<Mat>& data, NoiseSchedule sched,
                                     ScoreModelConfig mcfg, GeneratorTrainConfig tcfg);

}  // namespace genmv::diffusion
