#include "genmv/market/hedge_dpp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace genmv::market {

double WealthTable::value_at(double w) const {
  const long n = wealths.size();
  if (n == 0) throw NumericError("WealthTable: empty table");
  if (n == 1) return values[0];
  long i = std::upper_bound(wealths.data(), wealths.data() + n, w) - wealths.data() - 1;
  i = std::min(std::max(i, 0L), n - 2);
  const double x0 = wealths[i], x1 = wealths[i + 1];
  const double t = (w - x0) / (x1 - x0);
  return values[i] + t * (values[i + 1] - values[i]);
}

Vec WealthTable::action_at(double w) const {
  if (actions.rows() == 0) throw ConfigError("WealthTable: terminal level stores no actions");
  const long n = wealths.size();
  if (n == 1) return actions.row(0);
  long i = std::upper_bound(wealths.data(), wealths.data() + n, w) - wealths.data() - 1;
  i = std::min(std::max(i, 0L), n - 2);
  // Nearest grid wealth; ties toward the lower point.
  const long j = (w - wealths[i] <= wealths[i + 1] - w) ? i : i + 1;
  return actions.row(j);
}

const WealthTable& HedgeValue::at(int level, int pos) const {
  if (level < 0 || level >= static_cast<int>(table.size()) || pos < 0 ||
      pos >= static_cast<int>(table[level].size()))
    throw ConfigError("HedgeValue::at: index out of range");
  return table[level][pos];
}

double HedgeValue::root_value(double w) const { return at(0, 0).value_at(w); }
double HedgeValue::root_value() const { return root_value(grids.w0); }

namespace {

double exact_lookup(const WealthTable& tab, double w, int level) {
  const long n = tab.wealths.size();
  const double* lo = tab.wealths.data();
  const double* it = std::lower_bound(lo, lo + n, w);
  if (it == lo + n || *it != w) {
    std::ostringstream msg;
    msg << "solve_hedge_dpp: internal reachable-wealth lookup missed w=" << w
        << " at level " << level;
    throw NumericError(msg.str());
  }
  return tab.values[it - lo];
}

double clamp_or_throw(double w, const Vec& grid, int level) {
  const double lo = grid[0], hi = grid[grid.size() - 1];
  const double tol = 1e-12 * (1.0 + std::max(std::abs(lo), std::abs(hi)));
  if (w < lo - tol || w > hi + tol) {
    std::ostringstream msg;
    msg << "solve_hedge_dpp: wealth " << w << " escaped the grid [" << lo << ", "
        << hi << "] at level " << level;
    throw NumericError(msg.str());
  }
  return std::min(hi, std::max(lo, w));
}

}  // namespace

HedgeValue solve_hedge_dpp(const ScenarioTree& tree, double c,
                           const ConstraintSet& K, const HedgeGrids& grids) {
  if (!std::isfinite(c)) throw ConfigError("solve_hedge_dpp: target must be finite");
  if (K.d != tree.dim()) throw ConfigError("solve_hedge_dpp: constraint dimension mismatch");
  if (grids.action_points < 2) throw ConfigError("solve_hedge_dpp: action grid needs >= 2 points");
  if (!grids.exact_reachable && grids.wealth_points < 2)
    throw ConfigError("solve_hedge_dpp: wealth grid needs >= 2 points");
  if (!std::isfinite(grids.w0)) throw ConfigError("solve_hedge_dpp: initial wealth must be finite");

  const TreeIndex ix = TreeIndex::build(tree);
  const int T = ix.horizon();
  const int d = tree.dim();
  const std::vector<Vec> actions = K.action_grid(grids.action_points);
  const int nA = static_cast<int>(actions.size());

  // Wealth increment a^T (S_child - S_node) per (node, action, child slot),
  // shared by band sizing, forward reachability and the backward recursion so
  // exact-mode lookups see bitwise-identical sums.
  std::vector<Mat> inc(ix.nodes.size());
  for (size_t id = 0; id < ix.nodes.size(); ++id) {
    const auto& node = ix.nodes[id];
    if (node.children.empty()) continue;
    inc[id].resize(nA, node.children.size());
    for (int a = 0; a < nA; ++a)
      for (size_t s = 0; s < node.children.size(); ++s)
        inc[id](a, s) = actions[a].dot(ix.nodes[node.children[s]].price - node.price);
  }

  std::vector<int> pos(ix.nodes.size(), 0);
  for (int l = 0; l < T; ++l)
    for (size_t p = 0; p < ix.levels[l].size(); ++p) pos[ix.levels[l][p]] = static_cast<int>(p);

  HedgeValue out;
  out.c = c;
  out.grids = grids;
  out.table.resize(T);
  for (int l = 0; l < T; ++l) out.table[l].resize(ix.levels[l].size());

  if (grids.exact_reachable) {
    // Forward pass: exact wealth sets reachable from w0 under grid actions.
    std::vector<std::vector<double>> reach(ix.nodes.size());
    reach[ix.levels[0][0]] = {grids.w0};
    long total_states = 1;
    for (int l = 0; l + 1 < T; ++l) {
      for (int id : ix.levels[l]) {
        const auto& node = ix.nodes[id];
        for (size_t s = 0; s < node.children.size(); ++s) {
          std::vector<double>& ws = reach[node.children[s]];
          ws.reserve(reach[id].size() * nA);
          for (double w : reach[id])
            for (int a = 0; a < nA; ++a) ws.push_back(w + inc[id](a, s));
          std::sort(ws.begin(), ws.end());
          ws.erase(std::unique(ws.begin(), ws.end()), ws.end());
          total_states += static_cast<long>(ws.size());
          if (total_states > 5'000'000)
            throw ConfigError(
                "solve_hedge_dpp: exact_reachable state space too large; use the uniform grid");
        }
      }
    }
    // Backward pass on the exact sets.
    for (int l = T - 1; l >= 0; --l) {
      for (int id : ix.levels[l]) {
        const auto& node = ix.nodes[id];
        const std::vector<double>& ws = reach[id];
        WealthTable tab;
        tab.wealths = Eigen::Map<const Vec>(ws.data(), ws.size());
        tab.values.resize(ws.size());
        if (l == T - 1) {
          for (size_t i = 0; i < ws.size(); ++i)
            tab.values[i] = (c - ws[i]) * (c - ws[i]);
          tab.actions.resize(0, d);
        } else {
          tab.actions.resize(ws.size(), d);
          for (size_t i = 0; i < ws.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            int best_a = -1;
            for (int a = 0; a < nA; ++a) {
              double cost = 0.0;
              for (size_t s = 0; s < node.children.size(); ++s) {
                const int cid = node.children[s];
                cost += ix.nodes[cid].cond_prob *
                        exact_lookup(out.table[l + 1][pos[cid]], ws[i] + inc[id](a, s), l + 1);
              }
              if (cost < best) {
                best = cost;
                best_a = a;
              }
            }
            tab.values[i] = best;
            tab.actions.row(i) = actions[best_a];
          }
        }
        out.table[l][pos[id]] = std::move(tab);
      }
    }
    return out;
  }

  // Uniform mode: one grid per level, banded by the worst-case |a^T dS|
  // accumulation so a wealth reachable from w0 can never leave the grid.
  std::vector<double> radius(T, 0.0);
  for (int l = 0; l + 1 < T; ++l) {
    double m_l = 0.0;
    for (int id : ix.levels[l])
      if (inc[id].size() > 0) m_l = std::max(m_l, inc[id].cwiseAbs().maxCoeff());
    radius[l + 1] = radius[l] + m_l;
  }
  if (grids.wealth_radius >= 0.0)
    for (int l = 1; l < T; ++l) radius[l] = grids.wealth_radius;

  std::vector<Vec> level_grid(T);
  for (int l = 0; l < T; ++l) {
    if (radius[l] <= 0.0) {
      level_grid[l] = Vec::Constant(1, grids.w0);
      continue;
    }
    const double pad = 1e-9 * (1.0 + std::abs(grids.w0) + radius[l]);
    const double lo = grids.w0 - radius[l] - pad, hi = grids.w0 + radius[l] + pad;
    Vec g(grids.wealth_points);
    for (int i = 0; i < grids.wealth_points; ++i)
      g[i] = lo + (hi - lo) * i / (grids.wealth_points - 1);
    level_grid[l] = g;
  }

  for (int l = T - 1; l >= 0; --l) {
    for (int id : ix.levels[l]) {
      const auto& node = ix.nodes[id];
      const Vec& g = level_grid[l];
      WealthTable tab;
      tab.wealths = g;
      tab.values.resize(g.size());
      if (l == T - 1) {
        for (long i = 0; i < g.size(); ++i) tab.values[i] = (c - g[i]) * (c - g[i]);
        tab.actions.resize(0, d);
      } else {
        tab.actions.resize(g.size(), d);
        for (long i = 0; i < g.size(); ++i) {
          double best = std::numeric_limits<double>::infinity();
          int best_a = -1;
          for (int a = 0; a < nA; ++a) {
            double cost = 0.0;
            for (size_t s = 0; s < node.children.size(); ++s) {
              const int cid = node.children[s];
              const double w2 =
                  clamp_or_throw(g[i] + inc[id](a, s), level_grid[l + 1], l + 1);
              cost += ix.nodes[cid].cond_prob * out.table[l + 1][pos[cid]].value_at(w2);
            }
            if (cost < best) {
              best = cost;
              best_a = a;
            }
          }
          tab.values[i] = best;
          tab.actions.row(i) = actions[best_a];
        }
      }
      out.table[l][pos[id]] = std::move(tab);
    }
  }
  return out;
}

double mv_value(const Vec& wealths, const Vec& weights, double gamma) {
  if (!(gamma > 0.0)) throw ConfigError("mv_value: gamma must be positive");
  if (wealths.size() == 0 || wealths.size() != weights.size())
    throw ConfigError("mv_value: wealth/weight size mismatch");
  if ((weights.array() < -1e-12).any() || std::abs(weights.sum() - 1.0) > 1e-9)
    throw ConfigError("mv_value: weights must be a probability vector");
  if (!wealths.allFinite()) throw NumericError("mv_value: non-finite wealth");
  const double mean = weights.dot(wealths);
  const double var = weights.dot((wealths.array() - mean).square().matrix());
  return mean - 0.5 * gamma * var;
}

DualMvResult dual_mv(const ScenarioTree& tree, double gamma,
                     const ConstraintSet& K, const DualMvConfig& cfg) {
  if (!(gamma > 0.0)) throw ConfigError("dual_mv: gamma must be positive");
  if (cfg.a_points < 2) throw ConfigError("dual_mv: multiplier grid needs >= 2 points");
  if (cfg.refine_rounds < 0) throw ConfigError("dual_mv: refine_rounds must be >= 0");
  const double a_cap = cfg.a_max < 0.0 ? 5.0 / gamma : cfg.a_max;
  if (!(a_cap > 0.0)) throw ConfigError("dual_mv: multiplier cap must be positive");

  const auto dual_objective = [&](double a) {
    const HedgeValue hv = solve_hedge_dpp(tree, 1.0 / gamma + a, K, cfg.grids);
    return -0.5 * gamma * hv.root_value() + 0.5 / gamma + a;
  };

  double best_v = -std::numeric_limits<double>::infinity();
  double best_a = 0.0;
  bool at_cap = false;
  double lo = 0.0, hi = a_cap;
  for (int round = 0; round <= cfg.refine_rounds; ++round) {
    int best_i = -1;
    double round_best_v = -std::numeric_limits<double>::infinity();
    double round_best_a = lo;
    for (int i = 0; i < cfg.a_points; ++i) {
      const double a = lo + (hi - lo) * i / (cfg.a_points - 1);
      const double v = dual_objective(a);
      if (v > round_best_v) {
        round_best_v = v;
        round_best_a = a;
        best_i = i;
      }
    }
    if (round == 0) at_cap = (best_i == cfg.a_points - 1);
    if (round_best_v > best_v || (round_best_v == best_v && round_best_a < best_a)) {
      best_v = round_best_v;
      best_a = round_best_a;
    }
    const double spacing = (hi - lo) / (cfg.a_points - 1);
    lo = std::max(0.0, round_best_a - spacing);
    hi = std::min(a_cap, round_best_a + spacing);
  }

  DualMvResult res;
  res.v_star = best_v;
  res.a_star = best_a;
  res.argmax_at_cap = at_cap;
  res.hedge = solve_hedge_dpp(tree, 1.0 / gamma + best_a, K, cfg.grids);
  return res;
}

}  // namespace genmv::market
