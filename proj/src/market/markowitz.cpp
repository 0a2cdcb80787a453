#include "genmv/market/markowitz.hpp"

#include <cmath>

#include "genmv/rl/simplex.hpp"

namespace genmv::market {

Vec markowitz_simplex(const Vec& mean, const Mat& cov, double gamma,
                      int max_iter, double tol) {
  const int d = static_cast<int>(mean.size());
  if (d <= 0) throw ConfigError("markowitz_simplex: empty mean");
  if (cov.rows() != d || cov.cols() != d)
    throw ConfigError("markowitz_simplex: covariance shape mismatch");
  if (!(gamma > 0.0)) throw ConfigError("markowitz_simplex: gamma must be positive");
  if (!mean.allFinite() || !cov.allFinite())
    throw NumericError("markowitz_simplex: non-finite inputs");
  const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * (1.0 + cov.cwiseAbs().maxCoeff()))
    throw ConfigError("markowitz_simplex: covariance must be symmetric");
  const Mat sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
  if (eig.eigenvalues().minCoeff() < -1e-8)
    throw ConfigError("markowitz_simplex: covariance is not PSD");

  // Projected gradient ascent on f(a) = a^T mean - (gamma/2) a^T sym a with
  // the classical 1/L step, L the largest curvature.
  const double L = std::max(gamma * eig.eigenvalues().maxCoeff(), 1e-12);
  const double step = 1.0 / L;
  Vec a = Vec::Constant(d, 1.0 / d);
  for (int it = 0; it < max_iter; ++it) {
    const Vec grad = mean - gamma * (sym * a);
    const Vec next = rl::project_simplex(a + step * grad);
    const double move = (next - a).cwiseAbs().maxCoeff();
    a = next;
    if (move < tol) break;
  }
  return a;
}

}  // namespace genmv::market
