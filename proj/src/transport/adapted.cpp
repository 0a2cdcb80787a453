#include "genmv/transport/adapted.hpp"

#include <cmath>
#include <map>

#include "genmv/transport/lp.hpp"

namespace genmv::transport {

using nlohmann::json;

namespace {

int subtree_depth(const AdaptedNode& node) {
  if (node.children.empty()) return 1;
  int d = 0;
  for (const auto& c : node.children) d = std::max(d, subtree_depth(c));
  return 1 + d;
}

void check_node(const AdaptedNode& node, int dim, int remaining_depth) {
  if (node.value.size() != dim)
    throw ConfigError("AdaptedMeasure: inconsistent value dimension");
  if (!node.value.allFinite()) throw ConfigError("AdaptedMeasure: non-finite value");
  if (node.weight < 0.0) throw ConfigError("AdaptedMeasure: negative weight");
  if (remaining_depth == 1) {
    if (!node.children.empty()) throw ConfigError("AdaptedMeasure: uneven leaf depth");
    return;
  }
  if (node.children.empty()) throw ConfigError("AdaptedMeasure: uneven leaf depth");
  double total = 0.0;
  for (const auto& c : node.children) {
    check_node(c, dim, remaining_depth - 1);
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-10)
    throw ConfigError("AdaptedMeasure: children weights sum to " + std::to_string(total));
}

void collect_paths(const AdaptedNode& node, std::vector<double>& prefix, double prob,
                   int dim, std::vector<std::vector<double>>& out_paths,
                   std::vector<double>& out_probs) {
  const size_t mark = prefix.size();
  for (int k = 0; k < dim; ++k) prefix.push_back(node.value[k]);
  prob *= node.weight;
  if (node.children.empty()) {
    out_paths.push_back(prefix);
    out_probs.push_back(prob);
  } else {
    for (const auto& c : node.children)
      collect_paths(c, prefix, prob, dim, out_paths, out_probs);
  }
  prefix.resize(mark);
}

// Squared adapted cost between two sibling groups viewed as distributions
// over their subtrees:  V(u,v) = |x_u - y_v|^2 + OT over children with cost V.
double node_pair_value(const AdaptedNode& u, const AdaptedNode& v) {
  double val = (u.value - v.value).squaredNorm();
  if (u.children.empty() && v.children.empty()) return val;
  if (u.children.empty() || v.children.empty())
    throw ConfigError("aw2: depth mismatch between trees");
  const int n = static_cast<int>(u.children.size());
  const int m = static_cast<int>(v.children.size());
  Mat cost(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      cost(i, j) = node_pair_value(u.children[i], v.children[j]);
  Vec p(n), q(m);
  for (int i = 0; i < n; ++i) p[i] = u.children[i].weight;
  for (int j = 0; j < m; ++j) q[j] = v.children[j].weight;
  return val + ot_value(p, q, cost);
}

json node_to_json(const AdaptedNode& node) {
  json j;
  j["value"] = std::vector<double>(node.value.data(), node.value.data() + node.value.size());
  j["weight"] = node.weight;
  j["children"] = json::array();
  for (const auto& c : node.children) j["children"].push_back(node_to_json(c));
  return j;
}

AdaptedNode node_from_json(const json& j) {
  AdaptedNode node;
  const auto& v = j.at("value");
  node.value = Vec(v.size());
  for (size_t k = 0; k < v.size(); ++k) node.value[k] = v[k].get<double>();
  node.weight = j.at("weight").get<double>();
  if (j.contains("children"))
    for (const auto& c : j.at("children")) node.children.push_back(node_from_json(c));
  return node;
}

}  // namespace

int AdaptedMeasure::depth() const {
  if (roots.empty()) return 0;
  return subtree_depth(roots.front());
}

int AdaptedMeasure::dim() const {
  if (roots.empty()) return 0;
  return static_cast<int>(roots.front().value.size());
}

void AdaptedMeasure::validate() const {
  if (roots.empty()) throw ConfigError("AdaptedMeasure: empty tree");
  const int T = depth();
  const int d = dim();
  double total = 0.0;
  for (const auto& r : roots) {
    if (subtree_depth(r) != T) throw ConfigError("AdaptedMeasure: uneven depth");
    check_node(r, d, T);
    total += r.weight;
  }
  if (std::abs(total - 1.0) > 1e-10)
    throw ConfigError("AdaptedMeasure: root weights sum to " + std::to_string(total));
}

void AdaptedMeasure::enumerate_paths(Mat& paths, Vec& probs) const {
  std::vector<std::vector<double>> raw;
  std::vector<double> pr;
  std::vector<double> prefix;
  for (const auto& r : roots) collect_paths(r, prefix, 1.0, dim(), raw, pr);
  paths.resize(static_cast<long>(raw.size()), depth() * dim());
  probs.resize(static_cast<long>(pr.size()));
  for (size_t i = 0; i < raw.size(); ++i) {
    for (size_t k = 0; k < raw[i].size(); ++k) paths(static_cast<long>(i), static_cast<long>(k)) = raw[i][k];
    probs[static_cast<long>(i)] = pr[i];
  }
}

DiscreteMeasure AdaptedMeasure::flatten() const {
  DiscreteMeasure m;
  enumerate_paths(m.points, m.weights);
  return m;
}

json AdaptedMeasure::to_json() const {
  json j;
  j["depth"] = depth();
  j["dim"] = dim();
  j["nodes"] = json::array();
  for (const auto& r : roots) j["nodes"].push_back(node_to_json(r));
  return j;
}

AdaptedMeasure AdaptedMeasure::from_json(const json& doc) {
  AdaptedMeasure m;
  const json& nodes = doc.is_array() ? doc : doc.at("nodes");
  for (const auto& n : nodes) m.roots.push_back(node_from_json(n));
  m.validate();
  return m;
}

double aw2_squared(const AdaptedMeasure& mu, const AdaptedMeasure& nu) {
  mu.validate();
  nu.validate();
  if (mu.depth() != nu.depth()) throw ConfigError("aw2: depth mismatch");
  if (mu.dim() != nu.dim()) throw ConfigError("aw2: dimension mismatch");
  const int n = static_cast<int>(mu.roots.size());
  const int m = static_cast<int>(nu.roots.size());
  Mat cost(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) cost(i, j) = node_pair_value(mu.roots[i], nu.roots[j]);
  Vec p(n), q(m);
  for (int i = 0; i < n; ++i) p[i] = mu.roots[i].weight;
  for (int j = 0; j < m; ++j) q[j] = nu.roots[j].weight;
  return ot_value(p, q, cost);
}

double aw2(const AdaptedMeasure& mu, const AdaptedMeasure& nu) {
  return std::sqrt(std::max(0.0, aw2_squared(mu, nu)));
}

namespace {

// Linearized causality constraints: pi is causal in x iff for every t < T,
// every x-prefix a with continuation xi and every y-prefix b,
//   mu(a) * pi(X in (a,xi), Y in b)  =  mu(a,xi) * pi(X in a, Y in b).
// Prefix memberships are computed on exact path values.
struct PrefixIndex {
  // key: prefix values of length t*d; value: member path indices
  std::map<std::vector<double>, std::vector<int>> groups;
};

PrefixIndex group_by_prefix(const Mat& paths, int t, int d) {
  PrefixIndex idx;
  for (int i = 0; i < paths.rows(); ++i) {
    std::vector<double> key(static_cast<size_t>(t) * d);
    for (int k = 0; k < t * d; ++k) key[k] = paths(i, k);
    idx.groups[key].push_back(i);
  }
  return idx;
}

void append_causality_rows(const Mat& a_paths, const Vec& a_probs, const Mat& b_paths,
                           int T, int d, bool x_is_rows, int n_rows_pi, int n_cols_pi,
                           std::vector<Vec>& rows) {
  auto var_index = [&](int i, int j) { return i * n_cols_pi + j; };
  for (int t = 1; t < T; ++t) {
    PrefixIndex a_pre = group_by_prefix(a_paths, t, d);
    PrefixIndex a_ext = group_by_prefix(a_paths, t + 1, d);
    PrefixIndex b_pre = group_by_prefix(b_paths, t, d);
    for (const auto& [ext_key, ext_members] : a_ext.groups) {
      std::vector<double> pre_key(ext_key.begin(), ext_key.begin() + t * d);
      const auto& pre_members = a_pre.groups.at(pre_key);
      double mass_pre = 0.0, mass_ext = 0.0;
      for (int i : pre_members) mass_pre += a_probs[i];
      for (int i : ext_members) mass_ext += a_probs[i];
      if (mass_pre <= 0.0) continue;
      if (ext_members.size() == pre_members.size()) continue;  // xi is the only continuation
      for (const auto& [b_key, b_members] : b_pre.groups) {
        Vec row = Vec::Zero(static_cast<long>(n_rows_pi) * n_cols_pi);
        for (int i : ext_members)
          for (int j : b_members)
            row[x_is_rows ? var_index(i, j) : var_index(j, i)] += mass_pre;
        for (int i : pre_members)
          for (int j : b_members)
            row[x_is_rows ? var_index(i, j) : var_index(j, i)] -= mass_ext;
        rows.push_back(std::move(row));
      }
    }
  }
}

}  // namespace

BicausalResult bicausal_lp(const AdaptedMeasure& mu, const AdaptedMeasure& nu) {
  mu.validate();
  nu.validate();
  if (mu.depth() != nu.depth()) throw ConfigError("bicausal_lp: depth mismatch");
  if (mu.dim() != nu.dim()) throw ConfigError("bicausal_lp: dimension mismatch");
  const int T = mu.depth();
  const int d = mu.dim();

  BicausalResult res;
  mu.enumerate_paths(res.mu_paths, res.mu_probs);
  nu.enumerate_paths(res.nu_paths, res.nu_probs);
  const int n = static_cast<int>(res.mu_paths.rows());
  const int m = static_cast<int>(res.nu_paths.rows());
  if (n > 16 || m > 16)
    throw ConfigError("bicausal_lp: instance too large (max 16 paths per side, got " +
                      std::to_string(n) + "x" + std::to_string(m) + ")");

  std::vector<Vec> rows;
  std::vector<double> rhs;
  for (int i = 0; i < n; ++i) {  // row marginals
    Vec row = Vec::Zero(static_cast<long>(n) * m);
    for (int j = 0; j < m; ++j) row[i * m + j] = 1.0;
    rows.push_back(std::move(row));
    rhs.push_back(res.mu_probs[i]);
  }
  for (int j = 0; j < m; ++j) {  // column marginals
    Vec row = Vec::Zero(static_cast<long>(n) * m);
    for (int i = 0; i < n; ++i) row[i * m + j] = 1.0;
    rows.push_back(std::move(row));
    rhs.push_back(res.nu_probs[j]);
  }
  const size_t n_marginal = rows.size();
  append_causality_rows(res.mu_paths, res.mu_probs, res.nu_paths, T, d,
                        /*x_is_rows=*/true, n, m, rows);
  append_causality_rows(res.nu_paths, res.nu_probs, res.mu_paths, T, d,
                        /*x_is_rows=*/false, n, m, rows);
  rhs.resize(rows.size(), 0.0);

  Mat A(static_cast<long>(rows.size()), static_cast<long>(n) * m);
  Vec b(static_cast<long>(rows.size()));
  for (size_t r = 0; r < rows.size(); ++r) {
    A.row(static_cast<long>(r)) = rows[r].transpose();
    b[static_cast<long>(r)] = rhs[r];
  }
  (void)n_marginal;

  Vec c(static_cast<long>(n) * m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      c[i * m + j] = (res.mu_paths.row(i) - res.nu_paths.row(j)).squaredNorm();

  LpSolution sol = lp_solve_min(A, b, c);
  res.value = sol.value;
  res.coupling = Mat(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) res.coupling(i, j) = sol.x[i * m + j];
  return res;
}

AdaptedMeasure adapted_empirical(const std::vector<Mat>& paths, double delta) {
  if (paths.empty()) throw ConfigError("adapted_empirical: empty path set");
  if (!(delta > 0.0)) throw ConfigError("adapted_empirical: grid delta must be positive");
  const long T = paths.front().rows();
  const long d = paths.front().cols();
  for (const auto& p : paths)
    if (p.rows() != T || p.cols() != d)
      throw ConfigError("adapted_empirical: inconsistent path shapes");

  // std::round ties away from zero, which is exactly the documented rule.
  std::vector<Mat> q(paths.size());
  for (size_t i = 0; i < paths.size(); ++i) {
    q[i] = paths[i];
    for (long k = 0; k < q[i].size(); ++k)
      q[i].data()[k] = delta * std::round(q[i].data()[k] / delta);
  }

  // Recursive grouping on the quantized value at each depth.
  auto build = [&](auto&& self, const std::vector<int>& members, long t) -> std::vector<AdaptedNode> {
    std::map<std::vector<double>, std::vector<int>> groups;
    for (int i : members) {
      std::vector<double> key(static_cast<size_t>(d));
      for (long k = 0; k < d; ++k) key[k] = q[i](t, k);
      groups[key].push_back(i);
    }
    std::vector<AdaptedNode> nodes;
    for (const auto& [key, group] : groups) {
      AdaptedNode node;
      node.value = Eigen::Map<const Vec>(key.data(), d);
      node.weight = static_cast<double>(group.size()) / static_cast<double>(members.size());
      if (t + 1 < T) node.children = self(self, group, t + 1);
      nodes.push_back(std::move(node));
    }
    return nodes;
  };

  std::vector<int> all(paths.size());
  for (size_t i = 0; i < paths.size(); ++i) all[i] = static_cast<int>(i);
  AdaptedMeasure out;
  out.roots = build(build, all, 0);
  return out;
}

}  // namespace genmv::transport
