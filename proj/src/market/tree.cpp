#include "genmv/market/tree.hpp"

#include <cmath>

namespace genmv::market {

using transport::AdaptedMeasure;
using transport::AdaptedNode;

const Vec& ScenarioTree::root_price() const {
  if (measure.roots.size() != 1)
    throw ConfigError("ScenarioTree: root price undefined without a single root");
  return measure.roots[0].value;
}

namespace {
void check_positive_prices(const AdaptedNode& node) {
  if ((node.value.array() <= 0.0).any())
    throw ConfigError("ScenarioTree: prices must be strictly positive");
  for (const auto& ch : node.children) check_positive_prices(ch);
}
}  // namespace

void ScenarioTree::validate() const {
  measure.validate();
  if (measure.roots.size() != 1)
    throw ConfigError("ScenarioTree: time-1 price must be deterministic (single root)");
  for (const auto& r : measure.roots) check_positive_prices(r);
}

nlohmann::json ScenarioTree::to_json() const {
  nlohmann::json doc = measure.to_json();
  doc["prices"] = true;
  return doc;
}

ScenarioTree ScenarioTree::from_json(const nlohmann::json& doc) {
  if (!doc.contains("prices") || !doc["prices"].is_boolean() || !doc["prices"].get<bool>())
    throw ConfigError("ScenarioTree: JSON lacks the \"prices\": true marker");
  ScenarioTree tree{AdaptedMeasure::from_json(doc)};
  tree.validate();
  return tree;
}

namespace {
int index_node(const AdaptedNode& src, int parent, int level, double path_prob,
               TreeIndex& out) {
  const int id = static_cast<int>(out.nodes.size());
  TreeIndex::Node node;
  node.price = src.value;
  node.cond_prob = src.weight;
  node.path_prob = path_prob * src.weight;
  node.parent = parent;
  node.level = level;
  out.nodes.push_back(std::move(node));
  if (static_cast<int>(out.levels.size()) <= level) out.levels.resize(level + 1);
  out.levels[level].push_back(id);
  for (const auto& ch : src.children) {
    const int cid = index_node(ch, id, level + 1, out.nodes[id].path_prob, out);
    out.nodes[id].children.push_back(cid);
  }
  return id;
}
}  // namespace

TreeIndex TreeIndex::build(const ScenarioTree& tree) {
  tree.validate();
  TreeIndex out;
  index_node(tree.measure.roots[0], -1, 0, 1.0, out);
  // A scenario tree must be level-regular: every non-leaf level's nodes all
  // have children reaching the next level.
  for (int l = 0; l + 1 < out.horizon(); ++l)
    for (int id : out.levels[l])
      if (out.nodes[id].children.empty())
        throw ConfigError("ScenarioTree: node ends before the tree horizon");
  return out;
}

void ConstraintSet::validate() const {
  if (d <= 0) throw ConfigError("ConstraintSet: dimension must be positive");
  if (kind == Kind::Box) {
    if (lo.size() != d || hi.size() != d)
      throw ConfigError("ConstraintSet: box bounds must match dimension");
    if (!lo.allFinite() || !hi.allFinite())
      throw ConfigError("ConstraintSet: box bounds must be finite (K is bounded)");
    if ((lo.array() > hi.array()).any())
      throw ConfigError("ConstraintSet: box lower bound exceeds upper bound");
  }
}

bool ConstraintSet::contains(const Vec& a, double tol) const {
  if (a.size() != d) return false;
  if (kind == Kind::Box)
    return (a.array() >= lo.array() - tol).all() && (a.array() <= hi.array() + tol).all();
  return (a.array() >= -tol).all() && std::abs(a.sum() - 1.0) <= tol;
}

namespace {
void simplex_grid_rec(int dim_left, int units_left, int denom, Vec& work,
                      std::vector<Vec>& out) {
  const int idx = static_cast<int>(work.size()) - dim_left;
  if (dim_left == 1) {
    work[idx] = static_cast<double>(units_left) / denom;
    out.push_back(work);
    return;
  }
  for (int u = 0; u <= units_left; ++u) {
    work[idx] = static_cast<double>(u) / denom;
    simplex_grid_rec(dim_left - 1, units_left - u, denom, work, out);
  }
}
}  // namespace

std::vector<Vec> ConstraintSet::action_grid(int points_per_dim) const {
  validate();
  if (points_per_dim < 2) throw ConfigError("ConstraintSet: grid needs >= 2 points per dimension");
  std::vector<Vec> out;
  if (kind == Kind::Box) {
    const int P = points_per_dim;
    long total = 1;
    for (int k = 0; k < d; ++k) {
      total *= P;
      if (total > 2'000'000) throw ConfigError("ConstraintSet: action grid too large");
    }
    Vec a(d);
    for (long idx = 0; idx < total; ++idx) {
      long rem = idx;
      // Lexicographic: the first coordinate varies slowest.
      for (int k = d - 1; k >= 0; --k) {
        const int step = static_cast<int>(rem % P);
        rem /= P;
        a[k] = (hi[k] == lo[k]) ? lo[k] : lo[k] + (hi[k] - lo[k]) * step / (P - 1);
      }
      out.push_back(a);
    }
  } else {
    Vec work(d);
    simplex_grid_rec(d, points_per_dim - 1, points_per_dim - 1, work, out);
  }
  return out;
}

ConstraintSet ConstraintSet::box(const Vec& lo, const Vec& hi) {
  ConstraintSet K;
  K.kind = Kind::Box;
  K.d = static_cast<int>(lo.size());
  K.lo = lo;
  K.hi = hi;
  K.validate();
  return K;
}

ConstraintSet ConstraintSet::box1(double lo, double hi) {
  return box(Vec::Constant(1, lo), Vec::Constant(1, hi));
}

ConstraintSet ConstraintSet::simplex(int d) {
  ConstraintSet K;
  K.kind = Kind::Simplex;
  K.d = d;
  K.validate();
  return K;
}

Vec wealth_path(const Mat& prices, const std::function<Vec(int, double)>& strategy,
                WealthMode mode, double w0) {
  const int T = static_cast<int>(prices.rows());
  const int d = static_cast<int>(prices.cols());
  if (T < 1) throw ConfigError("wealth_path: empty price path");
  if (!prices.allFinite()) throw NumericError("wealth_path: non-finite prices");
  Vec w(T);
  w[0] = w0;
  for (int t = 0; t + 1 < T; ++t) {
    const Vec a = strategy(t, w[t]);
    if (a.size() != d) throw ConfigError("wealth_path: strategy dimension mismatch");
    if (mode == WealthMode::Shares) {
      w[t + 1] = w[t] + a.dot(prices.row(t + 1) - prices.row(t));
    } else {
      if ((prices.row(t).array() <= 0.0).any())
        throw ConfigError("wealth_path: proportions mode needs positive prices");
      const Vec r = (prices.row(t + 1).array() / prices.row(t).array() - 1.0).matrix();
      w[t + 1] = w[t] * (1.0 + a.dot(r));
    }
    if (!std::isfinite(w[t + 1])) throw NumericError("wealth_path: non-finite wealth");
  }
  return w;
}

NonDegeneracyReport check_non_degeneracy(const ScenarioTree& tree) {
  const TreeIndex index = TreeIndex::build(tree);
  const int d = tree.dim();
  NonDegeneracyReport report;
  for (int l = 0; l + 1 < index.horizon(); ++l) {
    for (int id : index.levels[l]) {
      const auto& node = index.nodes[id];
      Vec m = Vec::Zero(d);
      Mat A = Mat::Zero(d, d);
      for (int cid : node.children) {
        const Vec dS = index.nodes[cid].price - node.price;
        m += index.nodes[cid].cond_prob * dS;
        A += index.nodes[cid].cond_prob * dS * dS.transpose();
      }
      // delta = 1 - m^T A^+ m; m is orthogonal to null(A) by construction
      // (a direction with zero second moment has zero first moment).
      Eigen::SelfAdjointEigenSolver<Mat> eig(A);
      const double scale = eig.eigenvalues().cwiseAbs().maxCoeff();
      double quad = 0.0;
      for (int k = 0; k < d; ++k) {
        const double lam = eig.eigenvalues()[k];
        if (lam > 1e-14 * std::max(1.0, scale)) {
          const double proj = eig.eigenvectors().col(k).dot(m);
          quad += proj * proj / lam;
        }
      }
      report.nodes.push_back({l, id, 1.0 - quad});
    }
  }
  report.min_delta = 1.0;
  for (const auto& nd : report.nodes) report.min_delta = std::min(report.min_delta, nd.delta);
  return report;
}

}  // namespace genmv::market
