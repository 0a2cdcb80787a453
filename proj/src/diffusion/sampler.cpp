#include "genmv/diffusion/sampler.hpp"

#include <cmath>
#include <string>
#include <thread>

namespace genmv::diffusion {

namespace {

void check_finite(const Mat& X, const char* phase, int step) {
  if (!X.allFinite())
    throw NumericError(std::string("reverse_pc_sample: non-finite state after ") + phase +
                       " step " + std::to_string(step));
}

}  // namespace

Mat reverse_pc_sample(const NoiseSchedule& sched, const ScoreFn& score, Mat X,
                      std::vector<Rng>& rngs) {
  sched.validate();
  const long M = X.rows();
  const int d = static_cast<int>(X.cols());
  if (static_cast<long>(rngs.size()) != M)
    throw ConfigError("reverse_pc_sample: need one rng per row");

  const double dt = (sched.horizon - sched.tau0) / sched.n_pre;
  constexpr double kEMin = 1e-6, kEMax = 1e-1;
  for (int k = 0; k < sched.n_pre; ++k) {
    const double tau = sched.horizon - k * dt;
    const double beta = sched.beta(tau);
    Mat S = score(tau, X);
    for (long i = 0; i < M; ++i) {
      Vec xi = randn_vec(d, rngs[i]);
      X.row(i) += dt * (0.5 * beta * X.row(i) + beta * S.row(i)) +
                  std::sqrt(beta * dt) * xi.transpose();
    }
    check_finite(X, "predictor", k);

    const double tau_next = sched.horizon - (k + 1) * dt;
    // Langevin step size: the signal-to-noise rule evaluated at its
    // population values for a variance-preserving chain on standardized data
    // (noise and score norms both ~ sqrt(d)), so e = 2 r^2 independent of the
    // state. Feeding realized norms into the rule makes e state-dependent,
    // and an uncorrected Langevin chain with state-dependent steps has the
    // wrong invariant measure: on the exact N(0,1) score it equilibrates near
    // variance 2pt3 instead of 1. The h2 cap keeps the step stable against
    // the stiff -x/h2 component any dissipative score carries near tau0.
    const double e = std::max(kEMin, std::min({2.0 * sched.snr_r * sched.snr_r,
                                               sched.h2(tau_next), kEMax}));
    for (int c = 0; c < sched.n_cor; ++c) {
      Mat Sc = score(tau_next, X);
      for (long i = 0; i < M; ++i) {
        Vec xi = randn_vec(d, rngs[i]);
        X.row(i) += e * Sc.row(i) + std::sqrt(2.0 * e) * xi.transpose();
      }
      check_finite(X, "corrector", k);
    }
  }
  return X;
}

Mat reverse_pc_sample(const NoiseSchedule& sched, const ScoreFn& score, long n_rows, int d,
                      std::vector<Rng>& rngs) {
  if (static_cast<long>(rngs.size()) != n_rows)
    throw ConfigError("reverse_pc_sample: need one rng per row");
  Mat X(n_rows, d);
  for (long i = 0; i < n_rows; ++i) X.row(i) = randn_vec(d, rngs[i]).transpose();
  return reverse_pc_sample(sched, score, std::move(X), rngs);
}

Mat sample_next(const ScoreModel& model, const Mat& H, std::vector<Rng>& rngs) {
  const int d = model.config().d;
  ScoreFn fn = [&](double tau, const Mat& X) { return model.score(tau, H, X); };
  Mat X = reverse_pc_sample(model.schedule(), fn, H.rows(), d, rngs);
  for (long i = 0; i < X.rows(); ++i)
    X.row(i) = model.denormalize(X.row(i).transpose()).transpose();
  return X;
}

SampledPaths sample_paths(const ScoreModel& model, const PathSampleConfig& cfg,
                          const std::optional<Mat>& context) {
  if (cfg.n_paths < 1 || cfg.length < 1) throw ConfigError("sample_paths: bad config");
  const int d = model.config().d;
  const int dh = model.config().hidden_dim;

  Vec h0 = Vec::Zero(dh);
  if (context && context->rows() > 0) {
    if (context->cols() != d) throw ConfigError("sample_paths: context column mismatch");
    Mat ctx = *context;
    for (long t = 0; t < ctx.rows(); ++t)
      ctx.row(t) = model.normalize(context->row(t).transpose()).transpose();
    Mat states = model.encoder().encode(ctx);
    h0 = states.row(states.rows() - 1).transpose();
  }

  SampledPaths out;
  out.paths.assign(cfg.n_paths, Mat(cfg.length, d));
  out.hidden.assign(cfg.n_paths, Mat(cfg.length, dh));

  // Each path is generated in isolation (its own rng stream, single-row score
  // evaluations). Batching paths through shared matrix products would tie the
  // floating-point reduction order to the batch shape, and with it the output
  // bits, to how paths are grouped across threads.
  auto run_path = [&](long i) {
    std::vector<Rng> rngs{make_stream(cfg.seed, i)};
    Mat H = h0.transpose();
    ScoreFn fn = [&](double tau, const Mat& X) { return model.score(tau, H, X); };
    for (long t = 0; t < cfg.length; ++t) {
      out.hidden[i].row(t) = H.row(0);
      Mat X = reverse_pc_sample(model.schedule(), fn, 1, d, rngs);
      out.paths[i].row(t) = model.denormalize(X.row(0).transpose()).transpose();
      H = model.encoder().step(X, H);
    }
  };

  const int threads = std::max(1, cfg.threads);
  if (threads == 1 || cfg.n_paths == 1) {
    for (long i = 0; i < cfg.n_paths; ++i) run_path(i);
  } else {
    std::vector<std::thread> pool;
    const long per = (cfg.n_paths + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      const long lo = w * per, hi = std::min<long>(cfg.n_paths, lo + per);
      if (lo >= hi) break;
      pool.emplace_back([&, lo, hi] {
        for (long i = lo; i < hi; ++i) run_path(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

}  // namespace genmv::diffusion
