#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "genmv/diffusion/score_model.hpp"

namespace genmv::diffusion {

// Batched score evaluation at a common noise level; rows are independent
// chains (conditioning, if any, is baked into the callable).
using ScoreFn = std::function<Mat(double tau, const Mat& X)>;

// Reverse-time predictor-corrector chain on a uniform grid horizon -> tau0
// with n_pre Euler-Maruyama steps,
//   X += (beta/2 X + beta s) dt + sqrt(beta dt) xi,
// each followed by n_cor Langevin corrector sweeps with step size
// e = min(2 r^2, h2(tau)) clipped to [1e-6, 1e-1]: the signal-to-noise rule
// at its population value for standardized variance-preserving chains, with a
// stability cap for the stiff -x/h2 score component near tau0. rngs supplies
// one generator per row; the noise draws of row i come only from rngs[i].
// Returns the state at tau0.
Mat reverse_pc_sample(const NoiseSchedule& sched, const ScoreFn& score, Mat X,
                      std::vector<Rng>& rngs);

// Same chain started from the stationary prior N(0, I), d columns.
Mat reverse_pc_sample(const NoiseSchedule& sched, const ScoreFn& score, long n_rows, int d,
                      std::vector<Rng>& rngs);

// One-step-ahead draws in data units: row i of the result is a sample of the
// next return conditioned on encoder state H.row(i).
Mat sample_next(const ScoreModel& model, const Mat& H, std::vector<Rng>& rngs);

struct PathSampleConfig {
  long n_paths = 1;
  long length = 1;  // returns generated per path
  std::uint64_t seed = 1;
  int threads = 1;
};

struct SampledPaths {
  std::vector<Mat> paths;   // each length x d, data units
  std::vector<Mat> hidden;  // each length x d', encoder state the step conditioned on
};

// Autoregressive rollout: each generated return is fed back through the
// encoder to condition the next draw. An optional context (rows of observed
// returns, data units) warm-starts the encoder state shared by all paths.
// Path i draws from its own stream derived from (seed, i), so output is
// independent of threads and a prefix of paths is unchanged when n_paths
// grows.
SampledPaths sample_paths(const ScoreModel& model, const PathSampleConfig& cfg,
                          const std::optional<Mat>& context = std::nullopt);

}  // namespace genmv::diffusion
