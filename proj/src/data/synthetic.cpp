#include "genmv/data/synthetic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace genmv::data {

Vec synthetic10_mean() {
  Vec mu(10);
  mu << 0.15, 0.12, 0.18, 0.14, 0.25, 0.10, 0.08, 0.09, 0.07, 0.11;
  return mu;
}

Mat synthetic10_cov() {
  Mat s(10, 10);
  s << 0.1024, 0.0627, 0.1008, 0.0672, 0.1568, 0.0320, 0.0230, 0.0256, 0.0448, 0.0282,  //
      0.0627, 0.0784, 0.0882, 0.0588, 0.1372, 0.0280, 0.0202, 0.0224, 0.0392, 0.0246,   //
      0.1008, 0.0882, 0.2025, 0.0945, 0.2205, 0.0450, 0.0324, 0.0360, 0.0630, 0.0396,   //
      0.0672, 0.0588, 0.0945, 0.0900, 0.1470, 0.0300, 0.0216, 0.0240, 0.0420, 0.0264,   //
      0.1568, 0.1372, 0.2205, 0.1470, 0.4900, 0.0700, 0.0504, 0.0560, 0.0980, 0.0616,   //
      0.0320, 0.0280, 0.0450, 0.0300, 0.0700, 0.0625, 0.0135, 0.0150, 0.0350, 0.0330,   //
      0.0230, 0.0202, 0.0324, 0.0216, 0.0504, 0.0135, 0.0324, 0.0288, 0.0252, 0.0119,   //
      0.0256, 0.0224, 0.0360, 0.0240, 0.0560, 0.0150, 0.0288, 0.0400, 0.0280, 0.0132,   //
      0.0448, 0.0392, 0.0630, 0.0420, 0.0980, 0.0350, 0.0252, 0.0280, 0.1225, 0.0231,   //
      0.0282, 0.0246, 0.0396, 0.0264, 0.0616, 0.0330, 0.0119, 0.0132, 0.0231, 0.0484;
  return s;
}

namespace {

// Square-root factor of a PSD matrix that tolerates exact singularity:
// eigendecompose and clamp round-off-scale negative eigenvalues to zero.
Mat psd_sqrt(const Mat& sigma) {
  if (!sigma.isApprox(sigma.transpose(), 1e-12))
    throw ConfigError("gen_synthetic: covariance must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> eig(sigma);
  if (eig.info() != Eigen::Success)
    throw NumericError("gen_synthetic: eigendecomposition failed");
  Vec lam = eig.eigenvalues();
  const double tol = 1e-12 * std::max(1.0, lam.cwiseAbs().maxCoeff());
  for (long i = 0; i < lam.size(); ++i) {
    if (lam[i] < -tol)
      throw ConfigError("gen_synthetic: covariance is not positive semidefinite");
    lam[i] = std::max(lam[i], 0.0);
  }
  return eig.eigenvectors() * lam.cwiseSqrt().asDiagonal();
}

}  // namespace

std::vector<Mat> gen_synthetic(const SyntheticSpec& spec, int n_paths) {
  const int d = static_cast<int>(spec.mu.size());
  if (d < 1) throw ConfigError("gen_synthetic: empty mean vector");
  if (spec.sigma.rows() != d || spec.sigma.cols() != d)
    throw ConfigError("gen_synthetic: covariance shape differs from mean");
  if (spec.periods_per_year < 1) throw ConfigError("gen_synthetic: periods_per_year must be >= 1");
  if (spec.T < 1) throw ConfigError("gen_synthetic: T must be >= 1");
  if (n_paths < 1) throw ConfigError("gen_synthetic: n_paths must be >= 1");
  if (!spec.mu.allFinite() || !spec.sigma.allFinite())
    throw NumericError("gen_synthetic: non-finite parameters");

  const double ppy = static_cast<double>(spec.periods_per_year);
  const Vec mean = spec.mu / ppy;
  const Mat root = psd_sqrt(spec.sigma / ppy);

  std::vector<Mat> out;
  out.reserve(static_cast<size_t>(n_paths));
  long rejected = 0;
  const long reject_cap = static_cast<long>(n_paths) * spec.T / 100 + 10;
  for (int i = 0; i < n_paths; ++i) {
    Rng rng = make_stream(spec.seed, static_cast<std::uint64_t>(i));
    Mat path(spec.T, d);
    for (int t = 0; t < spec.T; ++t) {
      for (;;) {
        const Vec r = mean + root * randn_vec(d, rng);
        if ((r.array() > -1.0).all()) {
          path.row(t) = r.transpose();
          break;
        }
        if (++rejected > reject_cap)
          throw NumericError("gen_synthetic: too many return draws at or below -100%");
      }
    }
    out.push_back(std::move(path));
  }
  return out;
}

}  // namespace genmv::data
