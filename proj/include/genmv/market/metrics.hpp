#pragma once

#include <optional>

#include <json.hpp>

#include "genmv/common.hpp"

namespace genmv::market {

// Performance summary of a periodic (monthly by default) return series.
//   ann_return   = P * mean(r)
//   ann_vol      = sqrt(P) * sample std of r        (0 when n < 2)
//   sharpe       = (ann_return - rf) / ann_vol      (absent when ann_vol = 0)
//   downside     = sqrt(P) * sqrt(mean(min(r, 0)^2))   threshold 0
//   sortino      = (ann_return - rf) / downside     (absent when downside = 0)
//   max_drawdown = min_t (W_t / max_{s<=t} W_s - 1), W compounded from 1
//   calmar       = ann_return / |max_drawdown|      (absent when maxDD = 0)
struct PerfMetrics {
  double ann_return = 0.0;
  double ann_vol = 0.0;
  double downside_dev = 0.0;
  double max_drawdown = 0.0;  // in [-1, 0]
  std::optional<double> sharpe, sortino, calmar;

  nlohmann::json to_json() const;  // absent ratios serialize as null
};

PerfMetrics perf_metrics(const Vec& returns, int periods_per_year = 12,
                         double rf = 0.0);

}  // namespace genmv::market
