#include "genmv/diffusion/score_model.hpp"

#include <cmath>

namespace genmv::diffusion {

using nn::Act;
using nn::DenseNet;
using nn::GruEncoder;

namespace {
// Bounded map that is exactly the identity on |u| <= M/2 and bends smoothly
// to the bound M beyond (C^1 at the junction: tanh'(0) = 1). Keeping the
// on-distribution region distortion-free matters because any curvature here
// enters the assembled score divided by h2, which blows up near tau0.
double bounded_identity(double u, double M, double& deriv) {
  const double R = 0.5 * M;
  const double a = std::abs(u);
  if (a <= R) {
    deriv = 1.0;
    return u;
  }
  const double t = std::tanh((a - R) / (M - R));
  deriv = (1.0 - t) * (1.0 + t);
  return (u < 0.0 ? -1.0 : 1.0) * (R + (M - R) * t);
}
}  // namespace

ScoreModel::ScoreModel(NoiseSchedule sched, ScoreModelConfig cfg, Rng& rng)
    : sched_(sched), cfg_(cfg) {
  sched_.validate();
  if (cfg_.d <= 0 || cfg_.hidden_dim <= 0) throw ConfigError("ScoreModel: bad dimensions");
  if (cfg_.dissipative && !(cfg_.head_bound > 0.0))
    throw ConfigError("ScoreModel: head bound must be positive");
  enc_ = GruEncoder::init(cfg_.d, cfg_.hidden_dim, rng);
  std::vector<int> sizes;
  sizes.push_back(cfg_.time_embed + cfg_.hidden_dim + cfg_.d);
  for (int h : cfg_.head_hidden) sizes.push_back(h);
  sizes.push_back(cfg_.d);
  std::vector<Act> acts(sizes.size() - 1, Act::Tanh);
  acts.back() = Act::Identity;
  head_ = DenseNet::init(sizes, acts, rng);
  norm_mean = Vec::Zero(cfg_.d);
  norm_std = Vec::Ones(cfg_.d);
}

double ScoreModel::time_coord(double tau) const {
  // Noise-level coordinate: the forward kernel depends on tau only through
  // h1 (h2 = 1 - h1^2), so the denoising target is a function of h1 alone.
  // Conditioning on h1 lets times with indistinguishable noise levels share
  // one representation, which pins the near-tau0 regime (where the training
  // signal is weakest) to the adjacent well-trained noise levels.
  return sched_.h1(tau);
}

Mat ScoreModel::head_input(const Vec& taus, const Mat& H, const Mat& X) const {
  const long M = X.rows();
  Mat in(M, cfg_.time_embed + cfg_.hidden_dim + cfg_.d);
  for (long r = 0; r < M; ++r) {
    in.row(r).segment(0, cfg_.time_embed) =
        nn::time_features(time_coord(taus[r]), cfg_.time_embed).transpose();
    in.row(r).segment(cfg_.time_embed, cfg_.hidden_dim) = H.row(r);
    in.row(r).segment(cfg_.time_embed + cfg_.hidden_dim, cfg_.d) = X.row(r);
  }
  return in;
}

Mat ScoreModel::score_rows(const Vec& taus, const Mat& H, const Mat& X,
                           EvalCache& cache) const {
  if (H.rows() != X.rows() || H.cols() != cfg_.hidden_dim || X.cols() != cfg_.d)
    throw ConfigError("ScoreModel::score: shape mismatch");
  if (taus.size() != X.rows()) throw ConfigError("ScoreModel::score: taus length mismatch");
  cache.taus = taus;
  Mat raw = head_.forward(head_input(taus, H, X), cache.head_cache);
  if (!cfg_.dissipative) return raw;
  const double M = cfg_.head_bound;
  Mat out(X.rows(), cfg_.d);
  cache.clip_deriv.resize(X.rows(), cfg_.d);
  for (long r = 0; r < X.rows(); ++r) {
    const double h1 = sched_.h1(taus[r]);
    const double h2 = sched_.h2(taus[r]);
    // Clip centered at the identity map: the noise-free limit of the
    // posterior mean is x itself, so the head only has to supply an O(1)
    // correction at every noise level instead of fighting the 1/h2 blow-up.
    for (long c = 0; c < cfg_.d; ++c) {
      const double u = X(r, c) + h2 * raw(r, c);
      const double D = bounded_identity(u, M, cache.clip_deriv(r, c));
      out(r, c) = (-X(r, c) + h1 * D) / h2;
    }
  }
  return out;
}

Mat ScoreModel::score_rows(const Vec& taus, const Mat& H, const Mat& X) const {
  EvalCache cache;
  return score_rows(taus, H, X, cache);
}

Mat ScoreModel::score(double tau, const Mat& H, const Mat& X) const {
  return score_rows(Vec::Constant(X.rows(), tau), H, X);
}

Vec ScoreModel::score(double tau, const Vec& h, const Vec& x) const {
  Mat H = h.transpose(), X = x.transpose();
  return score(tau, H, X).row(0).transpose();
}

Mat ScoreModel::score_backward(const EvalCache& cache, const Mat& d_score,
                               nn::DenseGrads& head_g) const {
  Mat d_raw = d_score;
  if (cfg_.dissipative) {
    // s = (-x + h1 D(x + h2 raw)) / h2  =>  ds/draw = h1 D'(u).
    for (long r = 0; r < d_raw.rows(); ++r) {
      const double h1 = sched_.h1(cache.taus[r]);
      d_raw.row(r) =
          d_score.row(r).cwiseProduct(cache.clip_deriv.row(r)) * h1;
    }
  }
  Mat d_in = head_.backward(cache.head_cache, d_raw, head_g);
  return d_in.middleCols(cfg_.time_embed, cfg_.hidden_dim);
}

Vec ScoreModel::flatten() const {
  Vec out(param_count());
  out.head(enc_.param_count()) = enc_.flatten();
  out.tail(head_.param_count()) = head_.flatten();
  return out;
}

void ScoreModel::set_flat(const Vec& flat) {
  if (flat.size() != param_count()) throw ConfigError("ScoreModel::set_flat: size mismatch");
  enc_.set_flat(flat.head(enc_.param_count()));
  head_.set_flat(flat.tail(head_.param_count()));
}

nn::Checkpoint ScoreModel::to_checkpoint() const {
  nn::Checkpoint ck;
  ck.put("encoder.Wz", enc_.Wz); ck.put("encoder.Wr", enc_.Wr); ck.put("encoder.Wh", enc_.Wh);
  ck.put("encoder.Uz", enc_.Uz); ck.put("encoder.Ur", enc_.Ur); ck.put("encoder.Uh", enc_.Uh);
  ck.put("encoder.bz", enc_.bz); ck.put("encoder.br", enc_.br); ck.put("encoder.bh", enc_.bh);
  for (int l = 0; l < head_.n_layers(); ++l) {
    ck.put("head." + std::to_string(l) + ".W", head_.W(l));
    ck.put("head." + std::to_string(l) + ".b", head_.b(l));
  }
  ck.put("norm.mean", norm_mean);
  ck.put("norm.std", norm_std);
  auto& meta = ck.meta();
  meta["model"] = "score";
  meta["schedule"] = sched_.to_json();
  meta["config"] = {{"d", cfg_.d},
                    {"hidden_dim", cfg_.hidden_dim},
                    {"time_embed", cfg_.time_embed},
                    {"head_hidden", cfg_.head_hidden},
                    {"dissipative", cfg_.dissipative},
                    {"head_bound", cfg_.head_bound}};
  return ck;
}

ScoreModel ScoreModel::from_checkpoint(const nn::Checkpoint& ck) {
  const auto& meta = ck.meta();
  if (!meta.contains("model") || meta.at("model") != "score")
    throw ConfigError("checkpoint does not hold a score model");
  ScoreModelConfig cfg;
  const auto& c = meta.at("config");
  cfg.d = c.at("d").get<int>();
  cfg.hidden_dim = c.at("hidden_dim").get<int>();
  cfg.time_embed = c.at("time_embed").get<int>();
  cfg.head_hidden = c.at("head_hidden").get<std::vector<int>>();
  cfg.dissipative = c.at("dissipative").get<bool>();
  cfg.head_bound = c.at("head_bound").get<double>();
  Rng rng(0);
  ScoreModel m(NoiseSchedule::from_json(meta.at("schedule")), cfg, rng);
  m.enc_.Wz = ck.get_mat("encoder.Wz"); m.enc_.Wr = ck.get_mat("encoder.Wr");
  m.enc_.Wh = ck.get_mat("encoder.Wh"); m.enc_.Uz = ck.get_mat("encoder.Uz");
  m.enc_.Ur = ck.get_mat("encoder.Ur"); m.enc_.Uh = ck.get_mat("encoder.Uh");
  m.enc_.bz = ck.get_vec("encoder.bz"); m.enc_.br = ck.get_vec("encoder.br");
  m.enc_.bh = ck.get_vec("encoder.bh");
  for (int l = 0; l < m.head_.n_layers(); ++l) {
    m.head_.W(l) = ck.get_mat("head." + std::to_string(l) + ".W");
    m.head_.b(l) = ck.get_vec("head." + std::to_string(l) + ".b");
  }
  m.norm_mean = ck.get_vec("norm.mean");
  m.norm_std = ck.get_vec("norm.std");
  return m;
}

}  // namespace genmv::diffusion
