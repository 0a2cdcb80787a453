#include "genmv/transport/lp.hpp"

#include <cmath>
#include <vector>

namespace genmv::transport {

namespace {

constexpr double kTol = 1e-9;

// Tableau simplex over columns [A | I] with b kept separately. basis[r] is the
// column basic in row r; artificial columns are n..n+m-1. Bland's rule:
// entering column = lowest eligible index, leaving row = lowest basis index
// among minimal ratios. That guarantee of termination matters more here than
// speed; instances are small.
struct Tableau {
  Mat T;                     // m x (n + m)
  Vec rhs;                   // m
  std::vector<int> basis;    // size m
  std::vector<bool> active;  // rows kept (redundant rows get retired)
  std::vector<bool> basic;   // per column
  int n = 0, m = 0;

  void pivot(int r, int j) {
    basic[basis[r]] = false;
    const double piv = T(r, j);
    T.row(r) /= piv;
    rhs[r] /= piv;
    for (int i = 0; i < m; ++i) {
      if (i == r || !active[i]) continue;
      const double f = T(i, j);
      if (f != 0.0) {
        T.row(i) -= f * T.row(r);
        rhs[i] -= f * rhs[r];
      }
    }
    basis[r] = j;
    basic[j] = true;
  }

  // Runs simplex iterations for the given cost over columns [0, limit);
  // returns the objective value at optimality.
  double optimize(const Vec& cost, int limit) {
    for (;;) {
      int enter = -1;
      for (int j = 0; j < limit; ++j) {
        if (basic[j]) continue;
        double z = cost[j];
        for (int r = 0; r < m; ++r)
          if (active[r]) z -= cost[basis[r]] * T(r, j);
        if (z < -kTol) { enter = j; break; }  // Bland: first eligible
      }
      if (enter < 0) break;

      int leave = -1;
      double best_ratio = 0.0;
      for (int r = 0; r < m; ++r) {
        if (!active[r]) continue;
        const double a = T(r, enter);
        if (a > kTol) {
          const double ratio = rhs[r] / a;
          if (leave < 0 || ratio < best_ratio - kTol ||
              (ratio <= best_ratio + kTol && basis[r] < basis[leave])) {
            leave = r;
            best_ratio = ratio;
          }
        }
      }
      if (leave < 0) throw NumericError("lp_solve_min: unbounded problem");
      pivot(leave, enter);
    }
    double obj = 0.0;
    for (int r = 0; r < m; ++r)
      if (active[r]) obj += cost[basis[r]] * rhs[r];
    return obj;
  }
};

}  // namespace

LpSolution lp_solve_min(const Mat& A, const Vec& b, const Vec& c) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  if (b.size() != m || c.size() != n) throw ConfigError("lp_solve_min: shape mismatch");

  Tableau tab;
  tab.n = n;
  tab.m = m;
  tab.T = Mat::Zero(m, n + m);
  tab.T.block(0, 0, m, n) = A;
  tab.rhs = b;
  for (int r = 0; r < m; ++r) {
    if (tab.rhs[r] < 0.0) {
      tab.T.row(r) = -tab.T.row(r);
      tab.rhs[r] = -tab.rhs[r];
    }
    tab.T(r, n + r) = 1.0;
  }
  tab.basis.resize(m);
  tab.active.assign(m, true);
  tab.basic.assign(n + m, false);
  for (int r = 0; r < m; ++r) {
    tab.basis[r] = n + r;
    tab.basic[n + r] = true;
  }

  // Phase 1: minimize total artificial mass.
  Vec phase1 = Vec::Zero(n + m);
  phase1.segment(n, m).setOnes();
  const double infeas = tab.optimize(phase1, n + m);
  if (infeas > 1e-7)
    throw NumericError("lp_solve_min: infeasible (phase-1 residual " +
                       std::to_string(infeas) + ")");

  // Drive surviving artificials out of the basis; rows that cannot pivot on
  // any structural column are redundant equalities.
  for (int r = 0; r < m; ++r) {
    if (!tab.active[r] || tab.basis[r] < n) continue;
    int j_pivot = -1;
    for (int j = 0; j < n; ++j) {
      if (!tab.basic[j] && std::abs(tab.T(r, j)) > 1e-8) { j_pivot = j; break; }
    }
    if (j_pivot >= 0)
      tab.pivot(r, j_pivot);
    else
      tab.active[r] = false;
  }

  // Phase 2 on the true objective, artificial columns barred.
  Vec phase2 = Vec::Zero(n + m);
  phase2.segment(0, n) = c;
  const double value = tab.optimize(phase2, n);

  LpSolution sol;
  sol.x = Vec::Zero(n);
  for (int r = 0; r < m; ++r)
    if (tab.active[r] && tab.basis[r] < n) sol.x[tab.basis[r]] = tab.rhs[r];
  sol.value = value;
  return sol;
}

}  // namespace genmv::transport
