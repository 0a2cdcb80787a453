#pragma once

#include <json.hpp>

#include "genmv/common.hpp"

namespace genmv::diffusion {

enum class ScheduleKind { ConstantBeta, LinearVP };

// Variance-preserving forward noising family. With B(tau) = int_0^tau beta,
// the transition scalars are h1 = exp(-B/2) and h2 = 1 - exp(-B), so
// h1^2 + h2 = 1 identically. Constant beta = 2 recovers the plain OU kernel
// h1 = e^-tau, h2 = 1 - e^-2tau.
struct NoiseSchedule {
  ScheduleKind kind = ScheduleKind::LinearVP;
  double beta_min = 0.01;
  double beta_max = 10.0;
  double horizon = 1.0;  // maximal diffusive time
  int n_pre = 1000;      // predictor steps
  int n_cor = 1;         // corrector steps per predictor step
  double tau0 = 1e-3;    // early-stop floor
  double snr_r = 0.16;   // corrector signal-to-noise ratio parameter

  double beta(double tau) const;
  double B(double tau) const;
  double h1(double tau) const;
  double h2(double tau) const;
  void validate() const;

  static NoiseSchedule constant_beta(double beta = 2.0, double horizon = 5.0);
  static NoiseSchedule linear_vp(double beta_min = 0.01, double beta_max = 10.0,
                                 double horizon = 1.0);

  nlohmann::json to_json() const;
  static NoiseSchedule from_json(const nlohmann::json& j);
};

// x_tau = h1(tau) x0 + sqrt(h2(tau)) z; the forward kernel in closed form.
Vec perturb(const Vec& x0, double tau, const Vec& z, const NoiseSchedule& sched);

// Exact perturbed score when the data law is N(m, sigma2 I):
//   -(x - m h1) / (sigma2 h1^2 + h2).
Vec analytic_gaussian_score(double tau, const Vec& x, const Vec& m, double sigma2,
                            const NoiseSchedule& sched);

}  // namespace genmv::diffusion
