#pragma once

#include "genmv/common.hpp"

namespace genmv::nn {

enum class OptKind { Adam, AdamW };

struct OptimizerConfig {
  OptKind kind = OptKind::Adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // L2 for Adam, decoupled for AdamW
};

// Adam/AdamW on a flat parameter vector; bias-corrected moments.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

  void step(Vec& params, Vec grads);
  long step_count() const { return t_; }
  const OptimizerConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }

 private:
  OptimizerConfig cfg_;
  Vec m_, v_;
  long t_ = 0;
};

// Exponential moving average of a flat parameter vector. With warmup, the
// effective decay ramps as min(decay, (1+t)/(10+t)) so short runs are not
// pinned to the initialization.
class EmaTracker {
 public:
  EmaTracker(Vec initial, double decay, bool warmup = false)
      : shadow_(std::move(initial)), decay_(decay), warmup_(warmup) {
    if (decay <= 0.0 || decay >= 1.0) throw ConfigError("EmaTracker: decay must be in (0,1)");
  }

  void update(const Vec& current);
  const Vec& shadow() const { return shadow_; }

 private:
  Vec shadow_;
  double decay_;
  bool warmup_;
  long t_ = 0;
};

// target <- rho*target + (1-rho)*online
void polyak_update(Vec& target, const Vec& online, double rho);

}  // namespace genmv::nn
