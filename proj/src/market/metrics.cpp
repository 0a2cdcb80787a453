#include "genmv/market/metrics.hpp"

#include <cmath>

namespace genmv::market {

PerfMetrics perf_metrics(const Vec& returns, int periods_per_year, double rf) {
  const long n = returns.size();
  if (n == 0) throw ConfigError("perf_metrics: empty return series");
  if (periods_per_year <= 0) throw ConfigError("perf_metrics: periods_per_year must be positive");
  if (!returns.allFinite()) throw NumericError("perf_metrics: non-finite returns");

  PerfMetrics m;
  const double mean = returns.mean();
  m.ann_return = periods_per_year * mean;

  double sq = 0.0;
  for (long i = 0; i < n; ++i) sq += (returns[i] - mean) * (returns[i] - mean);
  const double sample_var = n > 1 ? sq / (n - 1) : 0.0;
  m.ann_vol = std::sqrt(static_cast<double>(periods_per_year)) * std::sqrt(sample_var);

  double down = 0.0;
  for (long i = 0; i < n; ++i) down += std::min(returns[i], 0.0) * std::min(returns[i], 0.0);
  m.downside_dev = std::sqrt(static_cast<double>(periods_per_year)) * std::sqrt(down / n);

  double wealth = 1.0, peak = 1.0, max_dd = 0.0;
  for (long i = 0; i < n; ++i) {
    if (returns[i] < -1.0)
      throw ConfigError("perf_metrics: return below -100% makes wealth negative");
    wealth *= 1.0 + returns[i];
    peak = std::max(peak, wealth);
    max_dd = std::min(max_dd, wealth / peak - 1.0);
  }
  m.max_drawdown = max_dd;

  if (m.ann_vol > 0.0) m.sharpe = (m.ann_return - rf) / m.ann_vol;
  if (m.downside_dev > 0.0) m.sortino = (m.ann_return - rf) / m.downside_dev;
  if (m.max_drawdown < 0.0) m.calmar = m.ann_return / std::abs(m.max_drawdown);
  return m;
}

nlohmann::json PerfMetrics::to_json() const {
  nlohmann::json doc;
  doc["ann_return"] = ann_return;
  doc["ann_vol"] = ann_vol;
  doc["downside_dev"] = downside_dev;
  doc["max_dd"] = max_drawdown;
  doc["sharpe"] = sharpe ? nlohmann::json(*sharpe) : nlohmann::json(nullptr);
  doc["sortino"] = sortino ? nlohmann::json(*sortino) : nlohmann::json(nullptr);
  doc["calmar"] = calmar ? nlohmann::json(*calmar) : nlohmann::json(nullptr);
  return doc;
}

}  // namespace genmv::market
