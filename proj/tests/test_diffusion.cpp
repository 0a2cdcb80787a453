#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "genmv/diffusion/sampler.hpp"
#include "genmv/diffusion/schedule.hpp"
#include "genmv/diffusion/score_model.hpp"
#include "genmv/diffusion/train.hpp"

using namespace genmv;
using namespace genmv::diffusion;

namespace {

double normal_quantile(double p) {
  // Bisection on the standard normal CDF; plenty accurate for test use.
  double lo = -10.0, hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

Vec scalar(double v) { return Vec::Constant(1, v); }

// tau checkpoints used by the score-accuracy checks: half log-spaced to
// resolve the small-tau regime, half linear across the full range.
std::vector<double> tau_grid(const NoiseSchedule& s, int n_log, int n_lin) {
  std::vector<double> g;
  for (int i = 0; i < n_log; ++i)
    g.push_back(s.tau0 * std::pow(s.horizon / s.tau0, double(i) / (n_log - 1)));
  for (int i = 0; i < n_lin; ++i)
    g.push_back(s.tau0 + (s.horizon - s.tau0) * double(i) / (n_lin - 1));
  return g;
}

// Density-weighted score error at one tau for a 1-D Gaussian conditional law
// N(m, s2) in the model's normalized units: draws x ~ p_tau, compares the
// model head against the exact perturbed score.
double score_mse_at(const ScoreModel& model, const Vec& h, double tau, double m, double s2,
                    int n, Rng& rng) {
  const auto& sc = model.schedule();
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat H(n, h.size()), X(n, 1);
  for (int i = 0; i < n; ++i) {
    H.row(i) = h.transpose();
    const double x0 = m + std::sqrt(s2) * gauss(rng);
    X(i, 0) = sc.h1(tau) * x0 + std::sqrt(sc.h2(tau)) * gauss(rng);
  }
  Mat S = model.score(tau, H, X);
  double mse = 0.0;
  for (int i = 0; i < n; ++i) {
    const double star = analytic_gaussian_score(tau, scalar(X(i, 0)), scalar(m), s2, sc)[0];
    mse += (S(i, 0) - star) * (S(i, 0) - star);
  }
  return mse / n;
}

double mean_score_mse(const ScoreModel& model, const Vec& h, double m, double s2, int n_per,
                      std::uint64_t seed) {
  Rng rng = make_stream(seed, 99);
  const auto grid = tau_grid(model.schedule(), 12, 12);
  double acc = 0.0;
  for (double tau : grid) acc += score_mse_at(model, h, tau, m, s2, n_per, rng);
  return acc / grid.size();
}

// 500 i.i.d. N(0.5, 0.04) observations as length-1 paths; the workhorse for
// the Gaussian-oracle checks.
const GeneratorTrainResult& gauss_run() {
  static GeneratorTrainResult res = [] {
    Rng rng = make_stream(42, 7);
    std::normal_distribution<double> gauss(0.5, 0.2);
    std::vector<Mat> data(500);
    for (auto& p : data) p = Mat::Constant(1, 1, gauss(rng));
    ScoreModelConfig mcfg;
    mcfg.d = 1;
    mcfg.hidden_dim = 4;
    GeneratorTrainConfig tcfg;
    tcfg.epochs = 320;
    tcfg.seed = 11;
    return train_generator(data, NoiseSchedule::constant_beta(2.0, 5.0), mcfg, tcfg);
  }();
  return res;
}

// 600 AR(1) pairs, rho = 0.6, stationary N(0,1) marginals.
const GeneratorTrainResult& ar1_run() {
  static GeneratorTrainResult res = [] {
    Rng rng = make_stream(43, 7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Mat> data(600);
    for (auto& p : data) {
      p = Mat(2, 1);
      p(0, 0) = gauss(rng);
      p(1, 0) = 0.6 * p(0, 0) + 0.8 * gauss(rng);
    }
    ScoreModelConfig mcfg;
    mcfg.d = 1;
    mcfg.hidden_dim = 4;
    GeneratorTrainConfig tcfg;
    tcfg.epochs = 320;
    tcfg.seed = 12;
    return train_generator(data, NoiseSchedule::constant_beta(2.0, 5.0), mcfg, tcfg);
  }();
  return res;
}

ScoreModel small_model(std::uint64_t seed, int d = 2, double bound = 5.0) {
  ScoreModelConfig cfg;
  cfg.d = d;
  cfg.hidden_dim = 3;
  cfg.time_embed = 4;
  cfg.head_hidden = {8};
  cfg.head_bound = bound;
  auto sched = NoiseSchedule::linear_vp(0.01, 6.0, 1.0);
  sched.tau0 = 0.05;
  sched.n_pre = 30;
  Rng rng = make_stream(seed, 3);
  return ScoreModel(sched, cfg, rng);
}

}  // namespace

TEST_CASE("schedule: variance-preserving identity holds on a fine grid") {
  for (auto sched : {NoiseSchedule::constant_beta(2.0, 5.0), NoiseSchedule::linear_vp()}) {
    double prev_h1 = 2.0, prev_h2 = -1.0;
    for (int i = 0; i <= 400; ++i) {
      const double tau = sched.horizon * i / 400.0;
      const double h1 = sched.h1(tau), h2 = sched.h2(tau);
      CHECK(std::abs(h1 * h1 + h2 - 1.0) < 1e-12);
      CHECK(h1 > 0.0);
      CHECK(h1 <= 1.0);
      CHECK(h2 >= 0.0);
      CHECK(h2 < 1.0);
      CHECK(h1 < prev_h1);
      CHECK(h2 > prev_h2);
      prev_h1 = h1;
      prev_h2 = h2;
    }
  }
}

TEST_CASE("schedule: constant beta=2 gives the plain OU closed forms") {
  auto sched = NoiseSchedule::constant_beta(2.0, 5.0);
  for (double tau : {0.0, 0.1, 0.69314718055994531, 1.0, 3.5}) {
    CHECK(sched.h1(tau) == doctest::Approx(std::exp(-tau)).epsilon(1e-14));
    CHECK(sched.h2(tau) == doctest::Approx(1.0 - std::exp(-2.0 * tau)).epsilon(1e-14));
  }
}

TEST_CASE("schedule: linear ramp integral matches Simpson quadrature") {
  auto sched = NoiseSchedule::linear_vp(0.01, 10.0, 1.0);
  for (double tau : {0.05, 0.3, 0.77, 1.0}) {
    const int n = 2000;
    double acc = sched.beta(0.0) + sched.beta(tau);
    for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * sched.beta(tau * i / n);
    acc *= tau / (3.0 * n);
    CHECK(sched.B(tau) == doctest::Approx(acc).epsilon(1e-10));
  }
}

TEST_CASE("schedule: invalid parameters rejected, json round-trips") {
  auto s = NoiseSchedule::linear_vp();
  s.validate();
  auto bad = s;
  bad.beta_min = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = s;
  bad.tau0 = 2.0;  // >= horizon
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = s;
  bad.n_pre = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  s.n_pre = 77;
  s.n_cor = 2;
  s.snr_r = 0.2;
  auto back = NoiseSchedule::from_json(s.to_json());
  CHECK(back.kind == s.kind);
  CHECK(back.beta_max == s.beta_max);
  CHECK(back.n_pre == 77);
  CHECK(back.n_cor == 2);
  CHECK(back.tau0 == s.tau0);
  CHECK(back.snr_r == 0.2);
}

TEST_CASE("forward kernel: boundary and hand-worked values") {
  auto sched = NoiseSchedule::constant_beta(2.0, 20.0);

  // tau = 0: no noise has acted.
  Vec x0(2);
  x0 << 1.5, -0.25;
  Vec z(2);
  z << 3.0, -1.0;
  CHECK((perturb(x0, 0.0, z, sched) - x0).norm() == 0.0);

  // tau = horizon = 20: h1 = e^-20 ~ 2e-9, the draw is essentially the
  // injected noise; the residual is 5 h1 - 0.3 (1 - sqrt(h2)) = 1.03e-8.
  const double at_horizon = perturb(scalar(5.0), 20.0, scalar(0.3), sched)[0];
  CHECK(std::abs(at_horizon - 0.3) < 2e-8);
  CHECK(at_horizon == doctest::Approx(5.0 * sched.h1(20.0) +
                                      0.3 * std::sqrt(sched.h2(20.0))).epsilon(1e-15));

  // tau = ln 2: h1 = 1/2 exactly.
  CHECK(perturb(scalar(1.0), std::log(2.0), scalar(0.0), sched)[0] ==
        doctest::Approx(0.5).epsilon(1e-14));

  CHECK_THROWS_AS(perturb(scalar(1.0), -0.1, scalar(0.0), sched), ConfigError);
  CHECK_THROWS_AS(perturb(scalar(1.0), 20.5, scalar(0.0), sched), ConfigError);
  CHECK_THROWS_AS(perturb(x0, 1.0, scalar(0.0), sched), ConfigError);
}

TEST_CASE("gaussian score: stationary law and hand-worked values") {
  auto sched = NoiseSchedule::constant_beta(2.0, 30.0);
  // Unit-variance centered data: the perturbed law is N(0,1) at every tau.
  for (double tau : {0.001, 0.5, 3.0, 30.0}) {
    Vec x(3);
    x << -1.0, 0.2, 4.0;
    CHECK((analytic_gaussian_score(tau, x, Vec::Zero(3), 1.0, sched) + x).norm() < 1e-12);
  }
  // Late time forgets the data law entirely.
  Vec x = scalar(0.8);
  CHECK(std::abs(analytic_gaussian_score(25.0, x, scalar(3.0), 0.25, sched)[0] + 0.8) < 1e-9);
  // x equal to the perturbed mean m*h1 = 2 * 1/2: score vanishes.
  CHECK(analytic_gaussian_score(std::log(2.0), scalar(1.0), scalar(2.0), 0.25, sched)[0] ==
        doctest::Approx(0.0).epsilon(1e-14));

  CHECK_THROWS_AS(analytic_gaussian_score(0.5, x, scalar(0.0), -1.0, sched), ConfigError);
  CHECK_THROWS_AS(analytic_gaussian_score(0.0, x, scalar(0.0), 0.0, sched), ConfigError);
}

TEST_CASE("score model: bounded denoising factor and deterministic evaluation") {
  ScoreModel model = small_model(1);
  const auto& sc = model.schedule();
  const double M = model.config().head_bound;
  Rng rng = make_stream(2, 0);
  std::uniform_real_distribution<double> utau(sc.tau0, sc.horizon);
  for (int i = 0; i < 200; ++i) {
    const double tau = utau(rng);
    Vec h = randn_vec(3, rng), x = 3.0 * randn_vec(2, rng);
    Vec s = model.score(tau, h, x);
    // Recover the bounded factor D from s = (-x + h1 D)/h2.
    Vec D = (x + sc.h2(tau) * s) / sc.h1(tau);
    CHECK(D.cwiseAbs().maxCoeff() <= M + 1e-9);
    CHECK((model.score(tau, h, x) - s).norm() == 0.0);
  }
  Vec wrong = Vec::Zero(2);
  CHECK_THROWS_AS(model.score(0.5, wrong, wrong), ConfigError);
}

TEST_CASE("score model: head gradient and conditioning gradient match finite differences") {
  ScoreModel model = small_model(3);
  Rng rng = make_stream(4, 0);
  const long n = 5;
  Mat H = randn_mat(n, 3, rng), X = randn_mat(n, 2, rng), W = randn_mat(n, 2, rng);
  Vec taus(n);
  for (long i = 0; i < n; ++i) taus[i] = 0.3 + 0.12 * double(i);

  auto loss_of = [&](const ScoreModel& m, const Mat& Hin) {
    return m.score_rows(taus, Hin, X).cwiseProduct(W).sum();
  };

  ScoreModel::EvalCache cache;
  model.score_rows(taus, H, X, cache);
  nn::DenseGrads hg = model.head().grads_like();
  hg.zero();
  Mat dH = model.score_backward(cache, W, hg);

  const double eps = 1e-5;
  // Conditioning-state sensitivity.
  for (long r = 0; r < n; ++r)
    for (int c = 0; c < 3; ++c) {
      Mat Hp = H, Hm = H;
      Hp(r, c) += eps;
      Hm(r, c) -= eps;
      const double fd = (loss_of(model, Hp) - loss_of(model, Hm)) / (2 * eps);
      CHECK(std::abs(dH(r, c) - fd) < 1e-6 + 1e-4 * std::abs(fd));
    }
  // Head parameters through the flat interface.
  Vec hflat = model.head().flatten();
  Vec ghead = hg.flatten();
  for (long k = 0; k < hflat.size(); k += 7) {
    ScoreModel mp = model, mm = model;
    Vec vp = hflat, vm = hflat;
    vp[k] += eps;
    vm[k] -= eps;
    mp.head().set_flat(vp);
    mm.head().set_flat(vm);
    const double fd = (loss_of(mp, H) - loss_of(mm, H)) / (2 * eps);
    CHECK(std::abs(ghead[k] - fd) < 1e-6 + 1e-4 * std::abs(fd));
  }
}

TEST_CASE("score model: checkpoint round trip preserves behavior") {
  ScoreModel model = small_model(5);
  model.norm_mean = Vec::Constant(2, 0.3);
  model.norm_std = Vec::Constant(2, 1.7);
  auto ck = model.to_checkpoint();
  ScoreModel back = ScoreModel::from_checkpoint(nn::Checkpoint::parse(ck.dump()));
  CHECK((back.flatten() - model.flatten()).norm() == 0.0);
  CHECK((back.norm_mean - model.norm_mean).norm() == 0.0);
  CHECK(back.config().head_bound == model.config().head_bound);
  CHECK(back.schedule().tau0 == model.schedule().tau0);
  Rng rng = make_stream(6, 0);
  Vec h = randn_vec(3, rng), x = randn_vec(2, rng);
  CHECK((back.score(0.4, h, x) - model.score(0.4, h, x)).norm() == 0.0);
}

TEST_CASE("dsm loss: exact score of a point mass gives zero loss and gradient") {
  ScoreModelConfig cfg;
  cfg.d = 1;
  cfg.hidden_dim = 2;
  cfg.head_hidden = {};  // single linear layer so the exact score is reachable
  auto sched = NoiseSchedule::constant_beta(2.0, 5.0);
  Rng rng = make_stream(7, 0);
  ScoreModel model(sched, cfg, rng);
  // Rig the head to raw = -x/h2 at the chosen noise level: the identity skip
  // cancels, D == 0, and s = -x/h2 is the exact perturbed score of data
  // identically zero.
  const double tau = 0.7;
  model.head().W(0).setZero();
  model.head().b(0).setZero();
  model.head().W(0)(0, cfg.time_embed + cfg.hidden_dim) = -1.0 / sched.h2(tau);
  TrainBatch batch;
  batch.paths.assign(3, Mat::Zero(4, 1));
  batch.taus = Vec::Constant(3, tau);
  batch.zs = randn_mat(3, 1, rng);
  auto res = dsm_loss(model, batch);
  CHECK(res.loss < 1e-24);
  CHECK(res.grad.norm() < 1e-12);
}

TEST_CASE("dsm loss: full gradient matches finite differences") {
  ScoreModel model = small_model(8);
  auto sched = model.schedule();
  Rng rng = make_stream(9, 0);
  TrainBatch batch;
  for (int m = 0; m < 3; ++m) batch.paths.push_back(randn_mat(3, 2, rng));
  batch.taus = Vec(3);
  batch.taus << 0.31, 0.52, 0.87;
  batch.zs = randn_mat(3, 2, rng);

  Vec g = dsm_loss(model, batch).grad;
  Vec flat = model.flatten();
  const double eps = 1e-5;
  double worst = 0.0;
  Vec fd(flat.size());
  for (long k = 0; k < flat.size(); ++k) {
    ScoreModel mp = model, mm = model;
    Vec vp = flat, vm = flat;
    vp[k] += eps;
    vm[k] -= eps;
    mp.set_flat(vp);
    mm.set_flat(vm);
    fd[k] = (dsm_loss(mp, batch).loss - dsm_loss(mm, batch).loss) / (2 * eps);
  }
  worst = (g - fd).cwiseAbs().maxCoeff() / std::max(1.0, fd.cwiseAbs().maxCoeff());
  CHECK(worst < 1e-4);
}

TEST_CASE("dsm loss: malformed batches and non-finite parameters rejected") {
  ScoreModel model = small_model(10);
  TrainBatch batch;
  CHECK_THROWS_AS(dsm_loss(model, batch), ConfigError);
  Rng rng = make_stream(11, 0);
  batch.paths.push_back(randn_mat(3, 2, rng));
  batch.taus = scalar(0.001);  // below tau0 = 0.05
  batch.zs = randn_mat(1, 2, rng);
  CHECK_THROWS_AS(dsm_loss(model, batch), ConfigError);
  batch.taus = scalar(0.5);
  batch.zs = randn_mat(1, 1, rng);
  CHECK_THROWS_AS(dsm_loss(model, batch), ConfigError);

  batch.zs = randn_mat(1, 2, rng);
  ScoreModel broken = model;
  broken.set_flat(Vec::Constant(model.param_count(),
                                std::numeric_limits<double>::quiet_NaN()));
  CHECK_THROWS_AS(dsm_loss(broken, batch), NumericError);
}

TEST_CASE("training: zero epochs returns the seeded initialization unchanged") {
  Rng rng = make_stream(12, 0);
  std::vector<Mat> data(20);
  for (auto& p : data) p = randn_mat(2, 1, rng);
  ScoreModelConfig mcfg;
  mcfg.d = 1;
  mcfg.hidden_dim = 3;
  GeneratorTrainConfig tcfg;
  tcfg.epochs = 0;
  tcfg.seed = 5;
  auto sched = NoiseSchedule::constant_beta(2.0, 5.0);
  auto res = train_generator(data, sched, mcfg, tcfg);
  Rng ref_rng = make_stream(5, 0);
  ScoreModel ref(sched, mcfg, ref_rng);
  CHECK((res.model.flatten() - ref.flatten()).norm() == 0.0);
  CHECK(res.epoch_losses.empty());
  CHECK(res.model.norm_std[0] > 0.0);

  CHECK_THROWS_AS(train_generator({}, sched, mcfg, tcfg), ConfigError);
  data.push_back(randn_mat(3, 1, rng));
  CHECK_THROWS_AS(train_generator(data, sched, mcfg, tcfg), ConfigError);
}

TEST_CASE("training: loss decreases toward the conditional-variance floor") {
  const auto& run = gauss_run();
  REQUIRE(run.epoch_losses.size() == 320);
  CHECK(run.epoch_losses.back() < run.epoch_losses.front());
  for (double l : run.epoch_losses) CHECK(std::isfinite(l));

  const ScoreModel& model = run.model;
  const auto& sched = model.schedule();
  const double mn = (0.5 - model.norm_mean[0]) / model.norm_std[0];
  const double sn2 = 0.04 / (model.norm_std[0] * model.norm_std[0]);

  // Monte Carlo floor: the residual of the exact score under the same
  // objective, E over tau ~ U[tau0, T], x0, z.
  Rng rng = make_stream(100, 0);
  std::uniform_real_distribution<double> utau(sched.tau0, sched.horizon);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n_floor = 150000;
  double floor = 0.0;
  for (int i = 0; i < n_floor; ++i) {
    const double tau = utau(rng);
    const double x0 = mn + std::sqrt(sn2) * gauss(rng);
    const double z = gauss(rng);
    const double x = sched.h1(tau) * x0 + std::sqrt(sched.h2(tau)) * z;
    const double s = analytic_gaussian_score(tau, scalar(x), scalar(mn), sn2, sched)[0];
    const double r = std::sqrt(sched.h2(tau)) * s + z;
    floor += r * r;
  }
  floor /= n_floor;

  // Fresh evaluation batch, normalized with the model's stored stats.
  const int n_eval = 20000;
  TrainBatch batch;
  batch.taus = Vec(n_eval);
  batch.zs = Mat(n_eval, 1);
  for (int i = 0; i < n_eval; ++i) {
    const double raw = 0.5 + 0.2 * gauss(rng);
    batch.paths.push_back(
        Mat::Constant(1, 1, (raw - model.norm_mean[0]) / model.norm_std[0]));
    batch.taus[i] = utau(rng);
    batch.zs(i, 0) = gauss(rng);
  }
  const double trained = dsm_loss(model, batch).loss;
  INFO("floor=", floor, " trained=", trained);
  CHECK(trained < 1.10 * floor);
  CHECK(trained > 0.75 * floor);
}

TEST_CASE("training: learned score tracks the gaussian oracle across noise levels") {
  const ScoreModel& model = gauss_run().model;
  const double mn = (0.5 - model.norm_mean[0]) / model.norm_std[0];
  const double sn2 = 0.04 / (model.norm_std[0] * model.norm_std[0]);
  const double mse = mean_score_mse(model, Vec::Zero(model.config().hidden_dim), mn, sn2,
                                    2000, 101);
  INFO("tau-averaged weighted score mse=", mse);
  CHECK(mse < 0.05);
}

TEST_CASE("sampling: trained gaussian model reproduces the target moments") {
  ScoreModel model = gauss_run().model;  // copy so the step count can be eased
  model.schedule().n_pre = 400;
  PathSampleConfig cfg;
  cfg.n_paths = 5000;
  cfg.length = 1;
  cfg.seed = 202;
  cfg.threads = 2;
  auto out = sample_paths(model, cfg);
  double mean = 0.0, sq = 0.0;
  for (const Mat& p : out.paths) {
    mean += p(0, 0);
    sq += p(0, 0) * p(0, 0);
  }
  mean /= cfg.n_paths;
  const double var = sq / cfg.n_paths - mean * mean;
  INFO("sampled mean=", mean, " var=", var);
  CHECK(std::abs(mean - 0.5) < 3.0 * 0.2 / std::sqrt(5000.0) + 0.005);
  CHECK(var > 0.8 * 0.04);
  CHECK(var < 1.2 * 0.04);
}

TEST_CASE("training: conditional score matches the ar(1) oracle and generation follows") {
  const ScoreModel& model = ar1_run().model;
  const double mu = model.norm_mean[0], sd = model.norm_std[0];

  // Conditional law of the second coordinate given the first: N(0.6 x1, 0.64).
  for (double x1 : {-1.0, 0.0, 1.0}) {
    Vec h = model.encoder().step(scalar((x1 - mu) / sd),
                                 Vec::Zero(model.config().hidden_dim));
    const double mc = (0.6 * x1 - mu) / sd;
    const double sc2 = 0.64 / (sd * sd);
    const double mse = mean_score_mse(model, h, mc, sc2, 1500, 300 + int(x1 * 7));
    INFO("x1=", x1, " conditional mse=", mse);
    CHECK(mse < 0.1);
  }

  // Conditional generation given a held prefix: mean tracks rho * x1.
  ScoreModel fast = model;
  fast.schedule().n_pre = 400;
  for (double x1 : {-1.0, 1.0}) {
    PathSampleConfig cfg;
    cfg.n_paths = 800;
    cfg.length = 1;
    cfg.seed = 404;
    cfg.threads = 2;
    auto out = sample_paths(fast, cfg, Mat::Constant(1, 1, x1));
    double mean = 0.0;
    for (const Mat& p : out.paths) mean += p(0, 0);
    mean /= cfg.n_paths;
    INFO("x1=", x1, " conditional sample mean=", mean);
    CHECK(std::abs(mean - 0.6 * x1) < 0.1);
  }

  // Unconditional pairs: OLS slope of x2 on x1 near rho.
  PathSampleConfig cfg;
  cfg.n_paths = 2000;
  cfg.length = 2;
  cfg.seed = 505;
  cfg.threads = 2;
  auto out = sample_paths(fast, cfg);
  double m1 = 0.0, m2 = 0.0, c11 = 0.0, c12 = 0.0;
  for (const Mat& p : out.paths) {
    m1 += p(0, 0);
    m2 += p(1, 0);
  }
  m1 /= cfg.n_paths;
  m2 /= cfg.n_paths;
  for (const Mat& p : out.paths) {
    c11 += (p(0, 0) - m1) * (p(0, 0) - m1);
    c12 += (p(0, 0) - m1) * (p(1, 0) - m2);
  }
  const double slope = c12 / c11;
  INFO("generated ar(1) slope=", slope);
  CHECK(slope > 0.45);
  CHECK(slope < 0.75);
}

TEST_CASE("sampler: exact stationary score reproduces the standard normal") {
  auto sched = NoiseSchedule::constant_beta(2.0, 5.0);
  ScoreFn stationary = [](double, const Mat& X) { return Mat(-X); };
  const long n = 5000;
  std::vector<Rng> rngs;
  for (long i = 0; i < n; ++i) rngs.push_back(make_stream(77, i));
  Mat X = reverse_pc_sample(sched, stationary, n, 1, rngs);
  std::vector<double> xs(X.col(0).data(), X.col(0).data() + n);
  std::sort(xs.begin(), xs.end());
  double w2sq = 0.0, mean = 0.0, sq = 0.0;
  for (long i = 0; i < n; ++i) {
    const double q = normal_quantile((i + 0.5) / n);
    w2sq += (xs[i] - q) * (xs[i] - q);
    mean += xs[i];
    sq += xs[i] * xs[i];
  }
  w2sq /= n;
  mean /= n;
  INFO("w2=", std::sqrt(w2sq), " mean=", mean, " var=", sq / n - mean * mean);
  CHECK(std::sqrt(w2sq) < 0.05);
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(sq / n - mean * mean - 1.0) < 0.1);
}

TEST_CASE("sampler: point-mass score contracts samples to the early-stop width") {
  // G == 0 means s = -x/h2: the exact score when the data law is a point mass
  // at zero, so the chain should land near N(0, h2(tau0)).
  auto sched = NoiseSchedule::constant_beta(2.0, 5.0);
  ScoreFn point = [&](double tau, const Mat& X) { return Mat(-X / sched.h2(tau)); };
  const long n = 500;
  std::vector<Rng> rngs;
  for (long i = 0; i < n; ++i) rngs.push_back(make_stream(78, i));
  Mat X = reverse_pc_sample(sched, point, n, 1, rngs);
  double sq = 0.0;
  for (long i = 0; i < n; ++i) sq += X(i, 0) * X(i, 0);
  CHECK(std::sqrt(sq / n) < 0.12);
}

TEST_CASE("sampler: predictor-only chain equals a straight-line replay") {
  auto sched = NoiseSchedule::constant_beta(2.0, 2.0);
  sched.n_pre = 3;
  sched.n_cor = 0;
  sched.tau0 = 0.5;
  ScoreFn stationary = [](double, const Mat& X) { return Mat(-X); };
  std::vector<Rng> rngs{make_stream(9, 0)};
  Mat X0 = Mat::Constant(1, 1, 1.3);
  Mat got = reverse_pc_sample(sched, stationary, X0, rngs);

  Rng replay = make_stream(9, 0);
  double x = 1.3;
  const double dt = (2.0 - 0.5) / 3.0;
  for (int k = 0; k < 3; ++k) {
    const double xi = randn_vec(1, replay)[0];
    x += dt * (0.5 * 2.0 * x + 2.0 * (-x)) + std::sqrt(2.0 * dt) * xi;
  }
  CHECK(got(0, 0) == doctest::Approx(x).epsilon(1e-15));
}

TEST_CASE("sampler: non-finite scores abort with the failing step") {
  auto sched = NoiseSchedule::constant_beta(2.0, 1.0);
  sched.n_pre = 4;
  ScoreFn bad = [](double, const Mat& X) {
    return Mat(Mat::Constant(X.rows(), X.cols(), std::nan("")));
  };
  std::vector<Rng> rngs{make_stream(10, 0)};
  try {
    reverse_pc_sample(sched, bad, 1, 1, rngs);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("predictor step 0") != std::string::npos);
  }
}

TEST_CASE("sampling: deterministic, thread-invariant, and prefix-causal") {
  ScoreModel model = small_model(20);
  PathSampleConfig cfg;
  cfg.n_paths = 5;
  cfg.length = 4;
  cfg.seed = 31;
  cfg.threads = 1;
  auto a = sample_paths(model, cfg);
  auto b = sample_paths(model, cfg);
  cfg.threads = 3;
  auto c = sample_paths(model, cfg);
  for (int i = 0; i < 5; ++i) {
    CHECK((a.paths[i] - b.paths[i]).norm() == 0.0);
    CHECK((a.paths[i] - c.paths[i]).norm() == 0.0);
    CHECK((a.hidden[i] - c.hidden[i]).norm() == 0.0);
  }

  // More paths extend, never rewrite, the earlier ones.
  cfg.n_paths = 9;
  auto wide = sample_paths(model, cfg);
  for (int i = 0; i < 5; ++i) CHECK((wide.paths[i] - a.paths[i]).norm() == 0.0);

  // A shorter run is a prefix of a longer one path by path.
  cfg.n_paths = 5;
  cfg.length = 2;
  auto shorter = sample_paths(model, cfg);
  for (int i = 0; i < 5; ++i)
    CHECK((shorter.paths[i] - a.paths[i].topRows(2)).norm() == 0.0);

  // Single path with no context reduces to sample_next at the zero state.
  cfg.n_paths = 1;
  cfg.length = 1;
  auto single = sample_paths(model, cfg);
  std::vector<Rng> rngs{make_stream(31, 0)};
  Mat next = sample_next(model, Mat::Zero(1, model.config().hidden_dim), rngs);
  CHECK((single.paths[0].row(0) - next.row(0)).norm() == 0.0);
}

TEST_CASE("sampling: context warm-starts the encoder state") {
  ScoreModel model = small_model(21);
  Rng rng = make_stream(22, 0);
  Mat ctx = randn_mat(3, 2, rng);
  PathSampleConfig cfg;
  cfg.n_paths = 2;
  cfg.length = 1;
  cfg.seed = 33;
  auto out = sample_paths(model, cfg, ctx);
  // Expected state: encode the normalized context and take the last row.
  Mat normed = ctx;
  for (long t = 0; t < 3; ++t)
    normed.row(t) = model.normalize(ctx.row(t).transpose()).transpose();
  Mat states = model.encoder().encode(normed);
  for (int i = 0; i < 2; ++i)
    CHECK((out.hidden[i].row(0) - states.row(2)).norm() == 0.0);

  auto plain = sample_paths(model, cfg);
  CHECK(plain.hidden[0].row(0).norm() == 0.0);
  CHECK((plain.paths[0] - out.paths[0]).norm() > 0.0);

  Mat bad_ctx = randn_mat(2, 3, rng);
  CHECK_THROWS_AS(sample_paths(model, cfg, bad_ctx), ConfigError);
}

TEST_CASE("dissipativity: far-field probes satisfy the drift inequality") {
  // For |x| > 2M+1 the assembled score must obey
  //   2 x . s <= -(1+delta)|x|^2 + C
  // with delta = 1/(2M+1) and C built from M, d and h2(tau0): the three terms
  // cover the near band amplified by 1/h2(tau0), the (1+delta) give-back on
  // that band, and the far-field quadratic completion.
  Rng rng = make_stream(23, 0);
  int done = 0;
  for (std::uint64_t ms = 0; ms < 5; ++ms) {
    const int d = (ms % 2 == 0) ? 1 : 3;
    const double M = (ms < 3) ? 5.0 : 50.0;
    ScoreModel model = small_model(100 + ms, d, M);
    const auto& sc = model.schedule();
    const double h2t0 = sc.h2(sc.tau0);
    const double delta = 1.0 / (2.0 * M + 1.0);
    const double C = M * M * d * (0.5 / h2t0 + (1.0 + delta) + 1.0 / (1.0 - delta));
    std::uniform_real_distribution<double> utau(sc.tau0, sc.horizon);
    std::uniform_real_distribution<double> ulogr(std::log(2.0 * M + 1.0), std::log(1e6));
    for (int i = 0; i < 2000; ++i, ++done) {
      const double tau = utau(rng);
      Vec h = randn_vec(model.config().hidden_dim, rng);
      Vec dir = randn_vec(d, rng);
      dir /= dir.norm();
      Vec x = std::exp(ulogr(rng)) * dir;
      Vec s = model.score(tau, h, x);
      CHECK(2.0 * x.dot(s) <= -(1.0 + delta) * x.squaredNorm() + C);
    }
  }
  CHECK(done == 10000);
}

TEST_CASE("dsm and explicit score matching share gradients on a 4-parameter model") {
  // s_theta(x) = th0 + th1 x + th2 x^2 + th3 x^3 on 1-D Gaussian data, fixed
  // tau. Denoising form: E|sqrt(h2) s(x) + z|^2; explicit form uses the known
  // perturbed score. Gradients must agree up to the h2 factor.
  auto sched = NoiseSchedule::constant_beta(2.0, 5.0);
  const double tau = 1.2, m = 0.7, s2 = 0.25;
  const double h1 = sched.h1(tau), h2 = sched.h2(tau);
  Vec theta(4);
  theta << 0.1, -0.8, 0.05, -0.02;
  Rng rng = make_stream(24, 0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = 100000;
  Vec g_dsm = Vec::Zero(4), g_esm = Vec::Zero(4);
  for (int i = 0; i < n; ++i) {
    const double x0 = m + std::sqrt(s2) * gauss(rng);
    const double z = gauss(rng);
    const double x = h1 * x0 + std::sqrt(h2) * z;
    Vec phi(4);
    phi << 1.0, x, x * x, x * x * x;
    const double s = theta.dot(phi);
    const double star = analytic_gaussian_score(tau, scalar(x), scalar(m), s2, sched)[0];
    g_dsm += 2.0 * std::sqrt(h2) * (std::sqrt(h2) * s + z) * phi;
    g_esm += 2.0 * (s - star) * phi;
  }
  g_dsm /= double(n);
  g_esm /= double(n);
  const double rel = (g_dsm / h2 - g_esm).norm() / g_esm.norm();
  INFO("relative gradient gap=", rel);
  CHECK(rel < 0.05);
}
