#pragma once

#include <vector>

#include "genmv/common.hpp"
#include "genmv/market/tree.hpp"
#include "genmv/nn/checkpoint.hpp"
#include "genmv/nn/dense_net.hpp"

namespace genmv::rl {

// Projection onto the constraint set and its (a.e.) Jacobian action, used to
// keep emitted actions feasible and to pass actor gradients through the
// projection. Box: coordinatewise clamp. Simplex: exact Euclidean projection.
Vec project_to(const market::ConstraintSet& K, const Vec& v);
// d(loss)/dv given d(loss)/da at a = project_to(K, v).
Vec project_to_backward(const market::ConstraintSet& K, const Vec& v, const Vec& a,
                        const Vec& d_a);

// Smooth surjection onto (the interior of) K used as the policy's output
// map: tanh into a box, softmax onto the simplex. Unlike the exact
// projection, its Jacobian never vanishes, so the actor cannot get stuck
// with a zero gradient once its raw output drifts past the boundary.
Vec squash_to(const market::ConstraintSet& K, const Vec& pre);
// d(loss)/dpre given d(loss)/da at a = squash_to(K, pre).
Vec squash_to_backward(const market::ConstraintSet& K, const Vec& a, const Vec& d_a);

// One stored environment step. The buffer keeps the whole record for
// inspection, but updates re-pair (t, w, a, c) with freshly drawn scenarios
// and recompute the successor state from the paired path: wealth dynamics are
// driven by the exogenous price path, so any stored action/wealth pairs with
// any scenario is a valid regression point.
struct Transition {
  int t = 0;  // decision step, 1..T-1
  double w = 0.0;
  Vec h;  // feature at t
  Vec a;
  double c = 0.0;
  double w_next = 0.0;
  Vec h_next;             // feature at t+1
  bool terminal = false;  // t + 1 == T

  void check(const market::ConstraintSet& K, int T) const;
};

// Uniform-sampling ring buffer, capacity L, oldest entries overwritten.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(long capacity);
  void push(Transition tr);
  long size() const { return static_cast<long>(data_.size()); }
  long capacity() const { return capacity_; }
  const Transition& sample(Rng& rng) const;
  const Transition& at(long i) const { return data_.at(static_cast<size_t>(i)); }

 private:
  long capacity_ = 0;
  size_t next_ = 0;
  std::vector<Transition> data_;
};

struct AgentConfig {
  int d = 1;       // number of assets (action dimension)
  int d_feat = 1;  // feature dimension
  int T = 12;      // path horizon; decisions at t = 1..T-1
  std::vector<int> hidden = {64, 64};
  double rho = 0.995;        // Polyak coefficient for target tracking
  int delay = 2;             // critic steps per policy/target update
  double explore_sigma = 0.1;
  double smooth_sigma = 0.2;
  double smooth_clip = 0.5;
  market::WealthMode wealth_mode = market::WealthMode::Proportions;
  double w0 = 1.0;  // initial wealth of every rollout
  market::ConstraintSet K = market::ConstraintSet::simplex(1);
};

// Twin-critic actor-critic pair with target copies. The policy maps
// (t/T, w, h, c) through the network and squash_to onto K; exploration and
// target smoothing add noise to that feasible action and re-project. Each
// critic maps (t/T, w, h, a, c) to the predicted quadratic hedging cost
// E[(w_T - c)^2], so lower is better and the actor descends the critic.
class Agent {
 public:
  static Agent init(AgentConfig cfg, Rng& rng);

  const AgentConfig& config() const { return cfg_; }

  nn::DenseNet& pi() { return pi_; }
  nn::DenseNet& q1() { return q1_; }
  nn::DenseNet& q2() { return q2_; }
  const nn::DenseNet& pi() const { return pi_; }
  const nn::DenseNet& q1() const { return q1_; }
  const nn::DenseNet& q2() const { return q2_; }
  nn::DenseNet& pi_target() { return pi_t_; }
  nn::DenseNet& q1_target() { return q1_t_; }
  nn::DenseNet& q2_target() { return q2_t_; }
  const nn::DenseNet& pi_target() const { return pi_t_; }
  const nn::DenseNet& q1_target() const { return q1_t_; }
  const nn::DenseNet& q2_target() const { return q2_t_; }

  long update_count() const { return update_count_; }
  long& update_count() { return update_count_; }

  Vec policy_input(int t, double w, const Vec& h, double c) const;
  Vec critic_input(int t, double w, const Vec& h, const Vec& a, double c) const;

  // Deterministic feasible action P_K(pi(t, w, h, c)).
  Vec act(int t, double w, const Vec& h, double c) const;
  // min of the two online critics at the given state-action.
  double q_min(int t, double w, const Vec& h, const Vec& a, double c) const;

  nn::Checkpoint to_checkpoint() const;
  static Agent from_checkpoint(const nn::Checkpoint& ck);

 private:
  AgentConfig cfg_;
  nn::DenseNet pi_, q1_, q2_;
  nn::DenseNet pi_t_, q1_t_, q2_t_;
  long update_count_ = 0;
};

}  // namespace genmv::rl
