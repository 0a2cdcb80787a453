#include "genmv/nn/optimizer.hpp"

#include <cmath>

namespace genmv::nn {

void Optimizer::step(Vec& params, Vec grads) {
  if (params.size() != grads.size()) throw ConfigError("Optimizer::step: shape mismatch");
  if (t_ == 0) {
    m_ = Vec::Zero(params.size());
    v_ = Vec::Zero(params.size());
  }
  ++t_;
  if (cfg_.kind == OptKind::Adam && cfg_.weight_decay != 0.0)
    grads += cfg_.weight_decay * params;  // classic L2 coupling
  m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grads;
  v_ = cfg_.beta2 * v_.array().matrix() +
       (1.0 - cfg_.beta2) * grads.array().square().matrix();
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  Vec update = (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + cfg_.eps);
  if (cfg_.kind == OptKind::AdamW && cfg_.weight_decay != 0.0)
    params -= cfg_.lr * cfg_.weight_decay * params;  // decoupled decay
  params -= cfg_.lr * update.matrix();
}

void EmaTracker::update(const Vec& current) {
  if (current.size() != shadow_.size()) throw ConfigError("EmaTracker::update: shape mismatch");
  double rho = decay_;
  if (warmup_) rho = std::min(decay_, (1.0 + t_) / (10.0 + t_));
  ++t_;
  shadow_ = rho * shadow_ + (1.0 - rho) * current;
}

void polyak_update(Vec& target, const Vec& online, double rho) {
  if (target.size() != online.size()) throw ConfigError("polyak_update: shape mismatch");
  if (rho < 0.0 || rho > 1.0) throw ConfigError("polyak_update: rho must lie in [0,1]");
  target = rho * target + (1.0 - rho) * online;
}

}  // namespace genmv::nn
