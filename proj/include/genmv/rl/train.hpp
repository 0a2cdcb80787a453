#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "genmv/common.hpp"
#include "genmv/nn/optimizer.hpp"
#include "genmv/rl/agent.hpp"
#include "genmv/rl/pool.hpp"

namespace genmv::rl {

// How the random multiplier c is drawn for each rollout. The dual multiplier
// is c = 1/gamma + a with a >= 0, so the default shifts an Exponential(mean 1)
// by 1/gamma and clips to [c_min, c_max]; Uniform draws cover a fixed range
// evenly, which suits frozen evaluation grids.
struct MultiplierConfig {
  enum class Mode { ShiftExp, Uniform };
  Mode mode = Mode::ShiftExp;
  double gamma = 1.5;  // shift 1/gamma in ShiftExp mode
  double c_min = 0.0;
  double c_max = 5.0;
  double sample(Rng& rng) const;
};

struct Td3Config {
  AgentConfig agent;
  MultiplierConfig multiplier;
  long warmup_rollouts = 100;  // uniform-action rollouts that only fill the buffer
  long train_rollouts = 1500;  // learning rollouts; one update per stored step
  int batch_size = 100;
  long buffer_capacity = 100000;
  double lr_actor = 1e-3;
  double lr_critic = 1e-3;
  // Cosine decay of both learning rates across the learning rollouts down to
  // these floors; negative keeps the rate constant. Late-training oscillation
  // of the critic around its fixed point shrinks with the rate.
  double lr_actor_final = -1.0;
  double lr_critic_final = -1.0;
  std::uint64_t seed = 1;
  int log_every = 200;    // updates between log rows (0 disables)
  int eval_paths = 64;    // pool paths per eval_mv estimate
};

struct TrainLogRow {
  long step = 0;  // update counter
  double critic_loss = 0.0;
  double actor_objective = 0.0;  // mean twin-min critic value the actor descends
  double eval_mv = 0.0;          // mean-variance value of the greedy policy on pool paths
};

// Plays one scenario drawn uniformly from the pool with a fresh multiplier,
// stepping t = 1..T-1: warm-up draws actions uniformly from K (Dirichlet(1)
// on the simplex, coordinatewise uniform on a box); otherwise the projected
// policy output plus exploration noise. Wealth follows the agent's wealth
// mode along the scenario's prices. Every step is pushed into the buffer and
// also returned for inspection.
std::vector<Transition> rollout_and_store(const Agent& agent, const ScenarioPool& pool,
                                          ReplayBuffer& buffer, bool warmup,
                                          const MultiplierConfig& mult, Rng& rng);

struct Td3UpdateStats {
  double critic_loss = 0.0;      // mean of the two critics' regression losses
  double actor_objective = 0.0;  // set on policy-update steps
  bool policy_updated = false;
};

// One TD3 step on paired batches: transition j's (t, w, a, c) is joined with
// scenario j's feature/price rows at that t, the successor wealth is
// recomputed from the paired path, and both critics regress onto
//   terminal: (w' - c)^2,
//   else:     min_i Q_targ_i(t+1, w', h^{t+1}, P_K(pi_targ + clipped noise), c).
// Every `delay`-th call also descends the policy on the twin-min critic
// through the projection and Polyak-updates all targets. `opts` must hold the
// three optimizers (q1, q2, pi) so Adam state persists across calls.
struct AgentOptimizers {
  nn::Optimizer q1, q2, pi;
  AgentOptimizers(double lr_critic, double lr_actor);
};
Td3UpdateStats td3_update(Agent& agent, const ScenarioPool& pool,
                          const std::vector<int>& scenario_idx,
                          const std::vector<const Transition*>& batch,
                          AgentOptimizers& opts, Rng& rng);

struct TrainedAgent {
  Agent agent;
  std::vector<TrainLogRow> log;
};

// Full training loop of warm-up rollouts followed by learning rollouts with
// one td3_update per stored step. Deterministic for a fixed config.
TrainedAgent train_agent_on_pool(const ScenarioPool& pool, const Td3Config& cfg);

// Fills a pool from the generator (encoder-state features) and trains on it.
TrainedAgent train_agent(const diffusion::ScoreModel& model,
                         const diffusion::PathSampleConfig& sample_cfg,
                         const Td3Config& cfg,
                         const std::optional<Mat>& context = std::nullopt);

// Grid-maximizes the dual objective -gamma/2 q(c) + c + 1/(2 gamma); ties
// resolve to the smallest c. The constant term does not move the argmax but
// keeps the reported value equal to the dual mean-variance value.
double select_multiplier_grid(const std::function<double(double)>& q_of_c, double gamma,
                              const Vec& c_grid, double* value_out = nullptr);

// Same search with q(c) read from the agent's twin-min critic at the initial
// state (t=1, w = config w0, feature h1) under the greedy action.
double select_multiplier(const Agent& agent, const Vec& h1, double gamma,
                         const Vec& c_grid, double* value_out = nullptr);

// Greedy-policy wealth path on one scenario at fixed multiplier c, returning
// the terminal wealth; w starts at the agent's configured w0.
double deploy_on_scenario(const Agent& agent, const Scenario& sc, double c);

}  // namespace genmv::rl
