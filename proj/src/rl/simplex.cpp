#include "genmv/rl/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace genmv::rl {

Vec project_simplex(const Vec& v) {
  const int d = static_cast<int>(v.size());
  if (d <= 0) throw ConfigError("project_simplex: empty vector");
  if (!v.allFinite()) throw NumericError("project_simplex: non-finite input");
  std::vector<double> u(v.data(), v.data() + d);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double running = 0.0, tau = 0.0;
  for (int i = 0; i < d; ++i) {
    running += u[i];
    const double cand = (running - 1.0) / (i + 1);
    if (u[i] - cand > 0.0) tau = cand;
  }
  Vec out(d);
  for (int i = 0; i < d; ++i) out[i] = std::max(0.0, v[i] - tau);
  return out;
}

}  // namespace genmv::rl
