#include "genmv/rl/train.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "genmv/market/hedge_dpp.hpp"
#include "genmv/nn/optimizer.hpp"

namespace genmv::rl {

using market::ConstraintSet;
using market::WealthMode;

double MultiplierConfig::sample(Rng& rng) const {
  if (!(c_min <= c_max)) throw ConfigError("MultiplierConfig: c_min must not exceed c_max");
  if (mode == Mode::Uniform) {
    std::uniform_real_distribution<double> uni(c_min, c_max);
    return uni(rng);
  }
  if (!(gamma > 0.0)) throw ConfigError("MultiplierConfig: gamma must be positive");
  std::exponential_distribution<double> expo(1.0);
  return std::clamp(1.0 / gamma + expo(rng), c_min, c_max);
}

namespace {

Vec uniform_in_K(const ConstraintSet& K, Rng& rng) {
  if (K.kind == ConstraintSet::Kind::Simplex) {
    // Dirichlet(1, ..., 1): normalized unit exponentials.
    std::exponential_distribution<double> expo(1.0);
    Vec g(K.d);
    for (int i = 0; i < K.d; ++i) g[i] = expo(rng);
    return g / g.sum();
  }
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Vec a(K.d);
  for (int i = 0; i < K.d; ++i) a[i] = K.lo[i] + uni(rng) * (K.hi[i] - K.lo[i]);
  return a;
}

// One wealth step along observed prices s^t -> s^{t+1}.
double step_wealth(WealthMode mode, double w, const Vec& a, const Vec& s_t,
                   const Vec& s_next) {
  double w_next;
  if (mode == WealthMode::Shares) {
    w_next = w + a.dot(s_next - s_t);
  } else {
    const Vec r = s_next.cwiseQuotient(s_t) - Vec::Ones(s_t.size());
    w_next = w * (1.0 + a.dot(r));
  }
  if (!std::isfinite(w_next)) throw NumericError("rollout: non-finite wealth");
  return w_next;
}

void check_pool_agent(const ScenarioPool& pool, const AgentConfig& cfg) {
  if (pool.size() < 1) throw ConfigError("rl: pool is empty");
  if (pool.horizon() != cfg.T) throw ConfigError("rl: pool horizon differs from agent T");
  if (pool.dim() != cfg.d) throw ConfigError("rl: pool asset dim differs from agent d");
  if (pool.feat_dim() != cfg.d_feat)
    throw ConfigError("rl: pool feature dim differs from agent d_feat");
}

}  // namespace

std::vector<Transition> rollout_and_store(const Agent& agent, const ScenarioPool& pool,
                                          ReplayBuffer& buffer, bool warmup,
                                          const MultiplierConfig& mult, Rng& rng) {
  const AgentConfig& cfg = agent.config();
  check_pool_agent(pool, cfg);

  std::uniform_int_distribution<int> pick(0, pool.size() - 1);
  const Scenario& sc = pool.at(pick(rng));
  const double c = mult.sample(rng);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<Transition> out;
  out.reserve(static_cast<size_t>(cfg.T - 1));
  double w = cfg.w0;
  for (int t = 1; t <= cfg.T - 1; ++t) {
    const Vec h = sc.features.row(t - 1).transpose();
    Vec a;
    if (warmup) {
      a = uniform_in_K(cfg.K, rng);
    } else {
      Vec noisy = squash_to(cfg.K, agent.pi().forward(agent.policy_input(t, w, h, c)));
      for (long i = 0; i < noisy.size(); ++i) noisy[i] += cfg.explore_sigma * normal(rng);
      a = project_to(cfg.K, noisy);
    }
    const double w_next = step_wealth(cfg.wealth_mode, w, a,
                                      sc.prices.row(t - 1).transpose(),
                                      sc.prices.row(t).transpose());
    Transition tr;
    tr.t = t;
    tr.w = w;
    tr.h = h;
    tr.a = a;
    tr.c = c;
    tr.w_next = w_next;
    tr.h_next = sc.features.row(t).transpose();
    tr.terminal = (t + 1 == cfg.T);
    tr.check(cfg.K, cfg.T);
    buffer.push(tr);
    out.push_back(std::move(tr));
    w = w_next;
  }
  return out;
}

AgentOptimizers::AgentOptimizers(double lr_critic, double lr_actor)
    : q1(nn::OptimizerConfig{}), q2(nn::OptimizerConfig{}), pi(nn::OptimizerConfig{}) {
  nn::OptimizerConfig qc;
  qc.lr = lr_critic;
  nn::OptimizerConfig pc;
  pc.lr = lr_actor;
  q1 = nn::Optimizer(qc);
  q2 = nn::Optimizer(qc);
  pi = nn::Optimizer(pc);
}

namespace {

void adam_step(nn::DenseNet& net, const nn::DenseGrads& g, nn::Optimizer& opt) {
  Vec params = net.flatten();
  opt.step(params, g.flatten());
  net.set_flat(params);
}

void polyak_net(nn::DenseNet& target, const nn::DenseNet& online, double rho) {
  Vec t = target.flatten();
  nn::polyak_update(t, online.flatten(), rho);
  target.set_flat(t);
}

}  // namespace

Td3UpdateStats td3_update(Agent& agent, const ScenarioPool& pool,
                          const std::vector<int>& scenario_idx,
                          const std::vector<const Transition*>& batch,
                          AgentOptimizers& opts, Rng& rng) {
  const long B = static_cast<long>(batch.size());
  if (B < 1) throw ConfigError("td3_update: empty batch");
  if (scenario_idx.size() != batch.size())
    throw ConfigError("td3_update: scenario batch size differs from transition batch");
  const AgentConfig& cfg = agent.config();
  check_pool_agent(pool, cfg);

  const int d = cfg.d, df = cfg.d_feat;
  const long q_in = 2 + df + d + 1, pi_in = 2 + df + 1;
  const long a_off = 2 + df;  // action columns inside a critic input

  Mat X_q(B, q_in);       // paired (t, w, h^t, a, c)
  Mat X_pi_next(B, pi_in);
  std::vector<double> w_next(static_cast<size_t>(B));
  std::vector<bool> terminal(static_cast<size_t>(B));
  std::normal_distribution<double> normal(0.0, 1.0);

  for (long j = 0; j < B; ++j) {
    const Transition& tr = *batch[static_cast<size_t>(j)];
    const Scenario& sc = pool.at(scenario_idx[static_cast<size_t>(j)]);
    const int t = tr.t;
    if (t < 1 || t + 1 > cfg.T) throw ConfigError("td3_update: transition step out of range");
    const Vec h_t = sc.features.row(t - 1).transpose();
    const Vec h_next = sc.features.row(t).transpose();
    const double wn = step_wealth(cfg.wealth_mode, tr.w, tr.a,
                                  sc.prices.row(t - 1).transpose(),
                                  sc.prices.row(t).transpose());
    w_next[static_cast<size_t>(j)] = wn;
    terminal[static_cast<size_t>(j)] = (t + 1 == cfg.T);
    X_q.row(j) = agent.critic_input(t, tr.w, h_t, tr.a, tr.c).transpose();
    X_pi_next.row(j) = agent.policy_input(t + 1, wn, h_next, tr.c).transpose();
  }

  // Targets: smoothed target-policy action, twin-min target critic.
  const Mat A_next_pre = agent.pi_target().forward(X_pi_next);
  Mat X_q_next(B, q_in);
  for (long j = 0; j < B; ++j) {
    Vec noisy = squash_to(cfg.K, A_next_pre.row(j).transpose());
    for (long i = 0; i < noisy.size(); ++i)
      noisy[i] += std::clamp(cfg.smooth_sigma * normal(rng), -cfg.smooth_clip, cfg.smooth_clip);
    const Vec a_next = project_to(cfg.K, noisy);
    X_q_next.row(j) = X_pi_next.row(j).head(2 + df);
    X_q_next.row(j).segment(a_off, d) = a_next.transpose();
    X_q_next(j, q_in - 1) = X_pi_next(j, pi_in - 1);
  }
  const Mat Q1n = agent.q1_target().forward(X_q_next);
  const Mat Q2n = agent.q2_target().forward(X_q_next);
  Vec y(B);
  for (long j = 0; j < B; ++j) {
    const double c = X_q(j, q_in - 1);
    y[j] = terminal[static_cast<size_t>(j)]
               ? (w_next[static_cast<size_t>(j)] - c) * (w_next[static_cast<size_t>(j)] - c)
               : std::min(Q1n(j, 0), Q2n(j, 0));
  }

  Td3UpdateStats stats;
  for (nn::DenseNet* qp : {&agent.q1(), &agent.q2()}) {
    nn::DenseNet::Cache cache;
    const Mat Q = qp->forward(X_q, cache);
    const Vec err = Q.col(0) - y;
    stats.critic_loss += 0.5 * err.squaredNorm() / B;
    nn::DenseGrads g = qp->grads_like();
    qp->backward(cache, Mat(2.0 * err / B), g);
    adam_step(*qp, g, qp == &agent.q1() ? opts.q1 : opts.q2);
  }
  if (!std::isfinite(stats.critic_loss)) throw NumericError("td3_update: non-finite critic loss");

  ++agent.update_count();
  if (agent.update_count() % cfg.delay != 0) return stats;

  // Policy descent on the twin-min critic through the projection.
  Mat X_pi(B, pi_in);
  for (long j = 0; j < B; ++j) {
    X_pi.row(j) = X_q.row(j).head(2 + df);
    X_pi(j, pi_in - 1) = X_q(j, q_in - 1);
  }
  nn::DenseNet::Cache pi_cache;
  const Mat A_pre = agent.pi().forward(X_pi, pi_cache);
  Mat X_qa = X_q;
  Mat A(B, d);
  for (long j = 0; j < B; ++j) {
    A.row(j) = squash_to(cfg.K, A_pre.row(j).transpose()).transpose();
    X_qa.row(j).segment(a_off, d) = A.row(j);
  }
  nn::DenseNet::Cache c1, c2;
  const Mat Q1a = agent.q1().forward(X_qa, c1);
  const Mat Q2a = agent.q2().forward(X_qa, c2);
  Mat d1 = Mat::Zero(B, 1), d2 = Mat::Zero(B, 1);
  double objective = 0.0;
  for (long j = 0; j < B; ++j) {
    if (Q1a(j, 0) <= Q2a(j, 0)) {
      objective += Q1a(j, 0);
      d1(j, 0) = 1.0 / B;
    } else {
      objective += Q2a(j, 0);
      d2(j, 0) = 1.0 / B;
    }
  }
  stats.actor_objective = objective / B;
  stats.policy_updated = true;
  if (!std::isfinite(stats.actor_objective))
    throw NumericError("td3_update: non-finite actor objective");

  nn::DenseGrads scratch1 = agent.q1().grads_like();
  nn::DenseGrads scratch2 = agent.q2().grads_like();
  const Mat din1 = agent.q1().backward(c1, d1, scratch1);
  const Mat din2 = agent.q2().backward(c2, d2, scratch2);
  Mat d_pre(B, d);
  for (long j = 0; j < B; ++j) {
    const Vec d_a = (din1.row(j).segment(a_off, d) + din2.row(j).segment(a_off, d)).transpose();
    d_pre.row(j) = squash_to_backward(cfg.K, A.row(j).transpose(), d_a).transpose();
  }
  nn::DenseGrads g_pi = agent.pi().grads_like();
  agent.pi().backward(pi_cache, d_pre, g_pi);
  adam_step(agent.pi(), g_pi, opts.pi);

  polyak_net(agent.q1_target(), agent.q1(), cfg.rho);
  polyak_net(agent.q2_target(), agent.q2(), cfg.rho);
  polyak_net(agent.pi_target(), agent.pi(), cfg.rho);
  return stats;
}

double deploy_on_scenario(const Agent& agent, const Scenario& sc, double c) {
  const AgentConfig& cfg = agent.config();
  if (sc.prices.rows() != cfg.T || sc.prices.cols() != cfg.d ||
      sc.features.cols() != cfg.d_feat)
    throw ConfigError("deploy_on_scenario: scenario shape mismatch");
  double w = cfg.w0;
  for (int t = 1; t <= cfg.T - 1; ++t) {
    const Vec a = agent.act(t, w, sc.features.row(t - 1).transpose(), c);
    w = step_wealth(cfg.wealth_mode, w, a, sc.prices.row(t - 1).transpose(),
                    sc.prices.row(t).transpose());
  }
  return w;
}

namespace {

double eval_mv_on_pool(const Agent& agent, const ScenarioPool& pool, double gamma,
                       const Vec& c_grid, int eval_paths) {
  const int n = std::min(eval_paths, pool.size());
  const double c_star =
      select_multiplier(agent, pool.at(0).features.row(0).transpose(), gamma, c_grid);
  Vec wT(n);
  for (int i = 0; i < n; ++i) wT[i] = deploy_on_scenario(agent, pool.at(i), c_star);
  return market::mv_value(wT, Vec::Constant(n, 1.0 / n), gamma);
}

}  // namespace

TrainedAgent train_agent_on_pool(const ScenarioPool& pool, const Td3Config& cfg) {
  if (pool.size() < 1) throw ConfigError("train_agent_on_pool: empty pool");
  if (cfg.batch_size < 1) throw ConfigError("train_agent_on_pool: batch_size must be positive");

  AgentConfig acfg = cfg.agent;
  acfg.d = pool.dim();
  acfg.d_feat = pool.feat_dim();
  acfg.T = pool.horizon();
  if (acfg.K.d != acfg.d)
    throw ConfigError("train_agent_on_pool: constraint set dim differs from pool assets");

  Rng rng = make_stream(cfg.seed, 0);
  Agent agent = Agent::init(acfg, rng);
  ReplayBuffer buffer(cfg.buffer_capacity);
  AgentOptimizers opts(cfg.lr_critic, cfg.lr_actor);

  Vec c_grid = Vec::LinSpaced(26, cfg.multiplier.c_min, cfg.multiplier.c_max);

  for (long k = 0; k < cfg.warmup_rollouts; ++k)
    rollout_and_store(agent, pool, buffer, true, cfg.multiplier, rng);

  TrainedAgent out{std::move(agent), {}};
  std::uniform_int_distribution<int> pick(0, pool.size() - 1);
  double last_actor_objective = 0.0;
  const auto cosine_lr = [](double lr0, double lr1, double frac) {
    return lr1 + 0.5 * (lr0 - lr1) * (1.0 + std::cos(M_PI * frac));
  };
  for (long k = 0; k < cfg.train_rollouts; ++k) {
    if (cfg.lr_critic_final >= 0.0 || cfg.lr_actor_final >= 0.0) {
      const double frac =
          (cfg.train_rollouts > 1) ? static_cast<double>(k) / (cfg.train_rollouts - 1) : 1.0;
      if (cfg.lr_critic_final >= 0.0) {
        const double lr = cosine_lr(cfg.lr_critic, cfg.lr_critic_final, frac);
        opts.q1.set_lr(lr);
        opts.q2.set_lr(lr);
      }
      if (cfg.lr_actor_final >= 0.0)
        opts.pi.set_lr(cosine_lr(cfg.lr_actor, cfg.lr_actor_final, frac));
    }
    const auto steps = rollout_and_store(out.agent, pool, buffer, false, cfg.multiplier, rng);
    for (size_t s = 0; s < steps.size(); ++s) {
      std::vector<const Transition*> batch(static_cast<size_t>(cfg.batch_size));
      std::vector<int> sidx(static_cast<size_t>(cfg.batch_size));
      for (int j = 0; j < cfg.batch_size; ++j) {
        batch[static_cast<size_t>(j)] = &buffer.sample(rng);
        sidx[static_cast<size_t>(j)] = pick(rng);
      }
      const Td3UpdateStats st = td3_update(out.agent, pool, sidx, batch, opts, rng);
      if (st.policy_updated) last_actor_objective = st.actor_objective;
      if (cfg.log_every > 0 && out.agent.update_count() % cfg.log_every == 0) {
        TrainLogRow row;
        row.step = out.agent.update_count();
        row.critic_loss = st.critic_loss;
        row.actor_objective = last_actor_objective;
        row.eval_mv = eval_mv_on_pool(out.agent, pool, cfg.multiplier.gamma, c_grid,
                                      cfg.eval_paths);
        out.log.push_back(row);
      }
    }
  }
  return out;
}

TrainedAgent train_agent(const diffusion::ScoreModel& model,
                         const diffusion::PathSampleConfig& sample_cfg, const Td3Config& cfg,
                         const std::optional<Mat>& context) {
  const ScenarioPool pool = pool_from_generator(model, sample_cfg, context);
  return train_agent_on_pool(pool, cfg);
}

double select_multiplier_grid(const std::function<double(double)>& q_of_c, double gamma,
                              const Vec& c_grid, double* value_out) {
  if (c_grid.size() < 1) throw ConfigError("select_multiplier: empty multiplier grid");
  if (!(gamma > 0.0)) throw ConfigError("select_multiplier: gamma must be positive");
  if (!c_grid.allFinite()) throw NumericError("select_multiplier: non-finite grid");
  std::vector<double> cs(c_grid.data(), c_grid.data() + c_grid.size());
  std::sort(cs.begin(), cs.end());
  double best_c = cs.front();
  double best_v = -std::numeric_limits<double>::infinity();
  for (const double c : cs) {
    const double v = -0.5 * gamma * q_of_c(c) + c + 0.5 / gamma;
    if (!std::isfinite(v)) throw NumericError("select_multiplier: non-finite objective");
    if (v > best_v) {  // strict: ties keep the smallest c
      best_v = v;
      best_c = c;
    }
  }
  if (value_out) *value_out = best_v;
  return best_c;
}

double select_multiplier(const Agent& agent, const Vec& h1, double gamma, const Vec& c_grid,
                         double* value_out) {
  const double w0 = agent.config().w0;
  return select_multiplier_grid(
      [&](double c) {
        const Vec a = agent.act(1, w0, h1, c);
        return agent.q_min(1, w0, h1, a, c);
      },
      gamma, c_grid, value_out);
}

}  // namespace genmv::rl
