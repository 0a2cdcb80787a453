#include "genmv/transport/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "genmv/transport/lp.hpp"

namespace genmv::transport {

void DiscreteMeasure::validate() const {
  if (points.rows() != weights.size())
    throw ConfigError("DiscreteMeasure: points/weights length mismatch");
  if (points.rows() == 0) throw ConfigError("DiscreteMeasure: empty support");
  if (!points.allFinite()) throw ConfigError("DiscreteMeasure: non-finite support point");
  double total = 0.0;
  for (long i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw ConfigError("DiscreteMeasure: negative weight");
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-10)
    throw ConfigError("DiscreteMeasure: weights sum to " + std::to_string(total));
}

double ot_value(const Vec& p, const Vec& q, const Mat& cost) {
  const int n = static_cast<int>(p.size());
  const int m = static_cast<int>(q.size());
  if (cost.rows() != n || cost.cols() != m) throw ConfigError("ot_value: cost shape mismatch");
  if (n == 1) return q.dot(cost.row(0));
  if (m == 1) return p.dot(cost.col(0));

  // Variables pi_ij laid out row-major; marginal equalities (one redundant).
  Mat A = Mat::Zero(n + m, n * m);
  Vec b(n + m), c(n * m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      A(i, i * m + j) = 1.0;
      A(n + j, i * m + j) = 1.0;
      c[i * m + j] = cost(i, j);
    }
    b[i] = p[i];
  }
  for (int j = 0; j < m; ++j) b[n + j] = q[j];
  return lp_solve_min(A, b, c).value;
}

double w2_squared_sorted_1d(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.dim() != 1 || nu.dim() != 1)
    throw ConfigError("w2_squared_sorted_1d: requires 1-D measures");
  std::vector<int> oi(mu.size()), oj(nu.size());
  std::iota(oi.begin(), oi.end(), 0);
  std::iota(oj.begin(), oj.end(), 0);
  std::sort(oi.begin(), oi.end(),
            [&](int a, int b) { return mu.points(a, 0) < mu.points(b, 0); });
  std::sort(oj.begin(), oj.end(),
            [&](int a, int b) { return nu.points(a, 0) < nu.points(b, 0); });
  // Monotone (quantile) coupling: walk both sorted atom lists, matching mass.
  double total = 0.0;
  size_t i = 0, j = 0;
  double pi = mu.weights[oi[0]], qj = nu.weights[oj[0]];
  while (i < oi.size() && j < oj.size()) {
    const double m = std::min(pi, qj);
    const double diff = mu.points(oi[i], 0) - nu.points(oj[j], 0);
    total += m * diff * diff;
    pi -= m;
    qj -= m;
    if (pi <= 1e-15) {
      if (++i < oi.size()) pi = mu.weights[oi[i]];
    }
    if (qj <= 1e-15) {
      if (++j < oj.size()) qj = nu.weights[oj[j]];
    }
  }
  return total;
}

double w2_squared_lp(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  Mat cost(mu.size(), nu.size());
  for (int i = 0; i < mu.size(); ++i)
    for (int j = 0; j < nu.size(); ++j)
      cost(i, j) = (mu.points.row(i) - nu.points.row(j)).squaredNorm();
  return ot_value(mu.weights, nu.weights, cost);
}

double w2_squared(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  mu.validate();
  nu.validate();
  if (mu.dim() != nu.dim()) throw ConfigError("w2: dimension mismatch");
  if (mu.dim() == 1) return w2_squared_sorted_1d(mu, nu);
  return w2_squared_lp(mu, nu);
}

double w2(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  return std::sqrt(std::max(0.0, w2_squared(mu, nu)));
}

}  // namespace genmv::transport
