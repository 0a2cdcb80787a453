#include "genmv/diffusion/schedule.hpp"

#include <cmath>

namespace genmv::diffusion {

double NoiseSchedule::beta(double tau) const {
  if (kind == ScheduleKind::ConstantBeta) return beta_min;
  return beta_min + (beta_max - beta_min) * (tau / horizon);
}

double NoiseSchedule::B(double tau) const {
  if (kind == ScheduleKind::ConstantBeta) return beta_min * tau;
  return beta_min * tau + 0.5 * (beta_max - beta_min) * tau * tau / horizon;
}

double NoiseSchedule::h1(double tau) const { return std::exp(-0.5 * B(tau)); }

double NoiseSchedule::h2(double tau) const { return 1.0 - std::exp(-B(tau)); }

void NoiseSchedule::validate() const {
  if (!(beta_min > 0.0) || !(beta_max >= beta_min))
    throw ConfigError("NoiseSchedule: need 0 < beta_min <= beta_max");
  if (!(horizon > 0.0)) throw ConfigError("NoiseSchedule: horizon must be positive");
  if (n_pre < 1) throw ConfigError("NoiseSchedule: n_pre must be >= 1");
  if (n_cor < 0) throw ConfigError("NoiseSchedule: n_cor must be >= 0");
  if (!(tau0 > 0.0) || !(tau0 < horizon))
    throw ConfigError("NoiseSchedule: tau0 must lie in (0, horizon)");
}

NoiseSchedule NoiseSchedule::constant_beta(double beta, double horizon) {
  NoiseSchedule s;
  s.kind = ScheduleKind::ConstantBeta;
  s.beta_min = s.beta_max = beta;
  s.horizon = horizon;
  return s;
}

NoiseSchedule NoiseSchedule::linear_vp(double beta_min, double beta_max, double horizon) {
  NoiseSchedule s;
  s.kind = ScheduleKind::LinearVP;
  s.beta_min = beta_min;
  s.beta_max = beta_max;
  s.horizon = horizon;
  return s;
}

nlohmann::json NoiseSchedule::to_json() const {
  return {{"kind", kind == ScheduleKind::ConstantBeta ? "constant-beta" : "linear-vp"},
          {"beta_min", beta_min},
          {"beta_max", beta_max},
          {"horizon", horizon},
          {"n_pre", n_pre},
          {"n_cor", n_cor},
          {"tau0", tau0},
          {"snr_r", snr_r}};
}

NoiseSchedule NoiseSchedule::from_json(const nlohmann::json& j) {
  NoiseSchedule s;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant-beta")
    s.kind = ScheduleKind::ConstantBeta;
  else if (kind == "linear-vp")
    s.kind = ScheduleKind::LinearVP;
  else
    throw ConfigError("NoiseSchedule: unknown kind '" + kind + "'");
  s.beta_min = j.at("beta_min").get<double>();
  s.beta_max = j.at("beta_max").get<double>();
  s.horizon = j.at("horizon").get<double>();
  s.n_pre = j.at("n_pre").get<int>();
  s.n_cor = j.at("n_cor").get<int>();
  s.tau0 = j.at("tau0").get<double>();
  s.snr_r = j.value("snr_r", 0.16);
  s.validate();
  return s;
}

Vec perturb(const Vec& x0, double tau, const Vec& z, const NoiseSchedule& sched) {
  if (tau < 0.0 || tau > sched.horizon)
    throw ConfigError("perturb: tau outside [0, horizon]");
  if (x0.size() != z.size()) throw ConfigError("perturb: x0/z dimension mismatch");
  return sched.h1(tau) * x0 + std::sqrt(sched.h2(tau)) * z;
}

Vec analytic_gaussian_score(double tau, const Vec& x, const Vec& m, double sigma2,
                            const NoiseSchedule& sched) {
  if (sigma2 < 0.0) throw ConfigError("analytic_gaussian_score: variance must be >= 0");
  if (x.size() != m.size()) throw ConfigError("analytic_gaussian_score: dim mismatch");
  const double h1 = sched.h1(tau);
  const double h2 = sched.h2(tau);
  const double denom = sigma2 * h1 * h1 + h2;
  if (denom <= 0.0)
    throw ConfigError("analytic_gaussian_score: degenerate marginal (tau=0 with sigma=0)");
  return -(x - m * h1) / denom;
}

}  // namespace genmv::diffusion
