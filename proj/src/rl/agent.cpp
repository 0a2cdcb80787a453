#include "genmv/rl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "genmv/rl/simplex.hpp"

namespace genmv::rl {

using market::ConstraintSet;

Vec project_to(const ConstraintSet& K, const Vec& v) {
  if (v.size() != K.d) throw ConfigError("project_to: dimension mismatch");
  if (K.kind == ConstraintSet::Kind::Simplex) return project_simplex(v);
  return v.cwiseMax(K.lo).cwiseMin(K.hi);
}

Vec project_to_backward(const ConstraintSet& K, const Vec& v, const Vec& a, const Vec& d_a) {
  if (v.size() != K.d || a.size() != K.d || d_a.size() != K.d)
    throw ConfigError("project_to_backward: dimension mismatch");
  Vec d_v = Vec::Zero(K.d);
  if (K.kind == ConstraintSet::Kind::Simplex) {
    // On the support the projection is a shift by a common scalar, so the
    // Jacobian is I - (1/|S|) 1 1^T restricted to the support.
    double sum = 0.0;
    int ns = 0;
    for (int i = 0; i < K.d; ++i)
      if (a[i] > 0.0) {
        sum += d_a[i];
        ++ns;
      }
    if (ns == 0) throw NumericError("project_to_backward: empty simplex support");
    const double mean = sum / ns;
    for (int i = 0; i < K.d; ++i)
      if (a[i] > 0.0) d_v[i] = d_a[i] - mean;
    return d_v;
  }
  for (int i = 0; i < K.d; ++i)
    if (v[i] > K.lo[i] && v[i] < K.hi[i]) d_v[i] = d_a[i];
  return d_v;
}

Vec squash_to(const market::ConstraintSet& K, const Vec& pre) {
  if (pre.size() != K.d) throw ConfigError("squash_to: dimension mismatch");
  if (K.kind == ConstraintSet::Kind::Simplex) {
    const Vec shifted = pre.array() - pre.maxCoeff();
    const Vec e = shifted.array().exp();
    return e / e.sum();
  }
  Vec a(K.d);
  for (int i = 0; i < K.d; ++i) {
    const double mid = 0.5 * (K.lo[i] + K.hi[i]);
    const double half = 0.5 * (K.hi[i] - K.lo[i]);
    a[i] = mid + half * std::tanh(pre[i]);
  }
  return a;
}

Vec squash_to_backward(const market::ConstraintSet& K, const Vec& a, const Vec& d_a) {
  if (a.size() != K.d || d_a.size() != K.d)
    throw ConfigError("squash_to_backward: dimension mismatch");
  if (K.kind == ConstraintSet::Kind::Simplex) {
    // Softmax Jacobian: diag(a) - a a^T.
    const double dot = d_a.dot(a);
    return a.cwiseProduct(d_a.array().matrix() - Vec::Constant(K.d, dot));
  }
  Vec d_pre(K.d);
  for (int i = 0; i < K.d; ++i) {
    const double mid = 0.5 * (K.lo[i] + K.hi[i]);
    const double half = 0.5 * (K.hi[i] - K.lo[i]);
    if (half == 0.0) {
      d_pre[i] = 0.0;
      continue;
    }
    const double t = (a[i] - mid) / half;
    d_pre[i] = d_a[i] * half * (1.0 - t * t);
  }
  return d_pre;
}

void Transition::check(const ConstraintSet& K, int T) const {
  if (t < 1 || t > T - 1) throw ConfigError("Transition: t must lie in [1, T-1]");
  if (!K.contains(a, 1e-8)) throw ConfigError("Transition: action outside the constraint set");
  if (!std::isfinite(w) || !std::isfinite(w_next) || !std::isfinite(c) || !a.allFinite() ||
      !h.allFinite())
    throw NumericError("Transition: non-finite fields");
  if (terminal != (t + 1 == T)) throw ConfigError("Transition: terminal flag mismatch");
}

ReplayBuffer::ReplayBuffer(long capacity) : capacity_(capacity) {
  if (capacity_ < 1) throw ConfigError("ReplayBuffer: capacity must be positive");
  data_.reserve(static_cast<size_t>(std::min<long>(capacity_, 1 << 20)));
}

void ReplayBuffer::push(Transition tr) {
  if (size() < capacity_) {
    data_.push_back(std::move(tr));
    return;
  }
  data_[next_] = std::move(tr);
  next_ = (next_ + 1) % static_cast<size_t>(capacity_);
}

const Transition& ReplayBuffer::sample(Rng& rng) const {
  if (data_.empty()) throw ConfigError("ReplayBuffer: cannot sample from an empty buffer");
  std::uniform_int_distribution<size_t> pick(0, data_.size() - 1);
  return data_[pick(rng)];
}

namespace {
std::vector<nn::Act> tanh_stack(size_t n_hidden) {
  std::vector<nn::Act> acts(n_hidden, nn::Act::Tanh);
  acts.push_back(nn::Act::Identity);
  return acts;
}
}  // namespace

Agent Agent::init(AgentConfig cfg, Rng& rng) {
  if (cfg.d < 1 || cfg.d_feat < 1 || cfg.T < 2) throw ConfigError("Agent: bad dimensions");
  if (cfg.K.d != cfg.d) throw ConfigError("Agent: constraint set dimension mismatch");
  if (cfg.delay < 1) throw ConfigError("Agent: delay must be >= 1");
  if (!(cfg.rho > 0.0) || cfg.rho >= 1.0) throw ConfigError("Agent: rho must lie in (0,1)");
  cfg.K.validate();

  Agent ag;
  ag.cfg_ = cfg;
  std::vector<int> pi_sizes = {2 + cfg.d_feat + 1};
  pi_sizes.insert(pi_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  pi_sizes.push_back(cfg.d);
  std::vector<int> q_sizes = {2 + cfg.d_feat + cfg.d + 1};
  q_sizes.insert(q_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  q_sizes.push_back(1);

  ag.pi_ = nn::DenseNet::init(pi_sizes, tanh_stack(cfg.hidden.size()), rng);
  ag.q1_ = nn::DenseNet::init(q_sizes, tanh_stack(cfg.hidden.size()), rng);
  ag.q2_ = nn::DenseNet::init(q_sizes, tanh_stack(cfg.hidden.size()), rng);
  ag.pi_t_ = ag.pi_;
  ag.q1_t_ = ag.q1_;
  ag.q2_t_ = ag.q2_;
  return ag;
}

Vec Agent::policy_input(int t, double w, const Vec& h, double c) const {
  if (h.size() != cfg_.d_feat) throw ConfigError("Agent: feature dimension mismatch");
  Vec x(2 + cfg_.d_feat + 1);
  x[0] = static_cast<double>(t) / cfg_.T;
  x[1] = w;
  x.segment(2, cfg_.d_feat) = h;
  x[x.size() - 1] = c;
  return x;
}

Vec Agent::critic_input(int t, double w, const Vec& h, const Vec& a, double c) const {
  if (h.size() != cfg_.d_feat || a.size() != cfg_.d)
    throw ConfigError("Agent: critic input dimension mismatch");
  Vec x(2 + cfg_.d_feat + cfg_.d + 1);
  x[0] = static_cast<double>(t) / cfg_.T;
  x[1] = w;
  x.segment(2, cfg_.d_feat) = h;
  x.segment(2 + cfg_.d_feat, cfg_.d) = a;
  x[x.size() - 1] = c;
  return x;
}

Vec Agent::act(int t, double w, const Vec& h, double c) const {
  return squash_to(cfg_.K, pi_.forward(policy_input(t, w, h, c)));
}

double Agent::q_min(int t, double w, const Vec& h, const Vec& a, double c) const {
  const Vec x = critic_input(t, w, h, a, c);
  return std::min(q1_.forward(x)[0], q2_.forward(x)[0]);
}

nn::Checkpoint Agent::to_checkpoint() const {
  nn::Checkpoint ck;
  ck.put("pi", pi_.flatten());
  ck.put("q1", q1_.flatten());
  ck.put("q2", q2_.flatten());
  ck.put("pi_target", pi_t_.flatten());
  ck.put("q1_target", q1_t_.flatten());
  ck.put("q2_target", q2_t_.flatten());
  nlohmann::json& meta = ck.meta();
  meta["kind"] = "td3_agent";
  meta["d"] = cfg_.d;
  meta["d_feat"] = cfg_.d_feat;
  meta["T"] = cfg_.T;
  meta["hidden"] = cfg_.hidden;
  meta["rho"] = cfg_.rho;
  meta["delay"] = cfg_.delay;
  meta["explore_sigma"] = cfg_.explore_sigma;
  meta["smooth_sigma"] = cfg_.smooth_sigma;
  meta["smooth_clip"] = cfg_.smooth_clip;
  meta["wealth_mode"] =
      cfg_.wealth_mode == market::WealthMode::Proportions ? "proportions" : "shares";
  meta["w0"] = cfg_.w0;
  meta["update_count"] = update_count_;
  meta["K_kind"] = cfg_.K.kind == market::ConstraintSet::Kind::Simplex ? "simplex" : "box";
  meta["K_lo"] = std::vector<double>(cfg_.K.lo.data(), cfg_.K.lo.data() + cfg_.K.lo.size());
  meta["K_hi"] = std::vector<double>(cfg_.K.hi.data(), cfg_.K.hi.data() + cfg_.K.hi.size());
  return ck;
}

Agent Agent::from_checkpoint(const nn::Checkpoint& ck) {
  const nlohmann::json& meta = ck.meta();
  if (!meta.contains("kind") || meta.at("kind").get<std::string>() != "td3_agent")
    throw ConfigError("Agent: checkpoint is not a td3_agent");
  AgentConfig cfg;
  cfg.d = meta.at("d").get<int>();
  cfg.d_feat = meta.at("d_feat").get<int>();
  cfg.T = meta.at("T").get<int>();
  cfg.hidden = meta.at("hidden").get<std::vector<int>>();
  cfg.rho = meta.at("rho").get<double>();
  cfg.delay = meta.at("delay").get<int>();
  cfg.explore_sigma = meta.at("explore_sigma").get<double>();
  cfg.smooth_sigma = meta.at("smooth_sigma").get<double>();
  cfg.smooth_clip = meta.at("smooth_clip").get<double>();
  cfg.wealth_mode = meta.at("wealth_mode").get<std::string>() == "proportions"
                        ? market::WealthMode::Proportions
                        : market::WealthMode::Shares;
  cfg.w0 = meta.at("w0").get<double>();
  if (meta.at("K_kind").get<std::string>() == "simplex") {
    cfg.K = market::ConstraintSet::simplex(cfg.d);
  } else {
    const auto lo = meta.at("K_lo").get<std::vector<double>>();
    const auto hi = meta.at("K_hi").get<std::vector<double>>();
    cfg.K = market::ConstraintSet::box(Eigen::Map<const Vec>(lo.data(), lo.size()),
                                       Eigen::Map<const Vec>(hi.data(), hi.size()));
  }

  Rng rng = make_stream(0, 0);
  Agent ag = Agent::init(cfg, rng);
  ag.pi_.set_flat(ck.get_vec("pi"));
  ag.q1_.set_flat(ck.get_vec("q1"));
  ag.q2_.set_flat(ck.get_vec("q2"));
  ag.pi_t_.set_flat(ck.get_vec("pi_target"));
  ag.q1_t_.set_flat(ck.get_vec("q1_target"));
  ag.q2_t_.set_flat(ck.get_vec("q2_target"));
  ag.update_count_ = meta.at("update_count").get<long>();
  return ag;
}

}  // namespace genmv::rl
