#include "genmv/data/prices.hpp"

namespace genmv::data {

void ReturnPath::validate() const {
  if (values.rows() < 1 || values.cols() < 1)
    throw ConfigError("ReturnPath: empty return block");
  if (!values.allFinite()) throw NumericError("ReturnPath: non-finite returns");
  if ((values.array() <= -1.0).any())
    throw ConfigError("ReturnPath: returns must exceed -100%");
  if (context) {
    if (context->cols() != values.cols())
      throw ConfigError("ReturnPath: context asset dimension mismatch");
    if (!context->allFinite()) throw NumericError("ReturnPath: non-finite context");
    if ((context->array() <= -1.0).any())
      throw ConfigError("ReturnPath: context returns must exceed -100%");
  }
  if (!labels.empty() && static_cast<long>(labels.size()) != values.cols())
    throw ConfigError("ReturnPath: label count differs from asset dimension");
}

Mat returns_to_prices(const Mat& returns, const Vec& s1) {
  if (returns.cols() != s1.size())
    throw ConfigError("returns_to_prices: dimension mismatch");
  if (!s1.allFinite() || s1.minCoeff() <= 0.0)
    throw ConfigError("returns_to_prices: initial prices must be positive");
  if (!returns.allFinite()) throw NumericError("returns_to_prices: non-finite returns");
  if ((returns.array() <= -1.0).any())
    throw ConfigError("returns_to_prices: returns must exceed -100%");
  Mat prices(returns.rows() + 1, returns.cols());
  prices.row(0) = s1.transpose();
  for (long t = 0; t < returns.rows(); ++t)
    prices.row(t + 1) = prices.row(t).cwiseProduct(Mat::Ones(1, returns.cols()) + returns.row(t));
  return prices;
}

Mat prices_to_returns(const Mat& prices) {
  if (prices.rows() < 2) throw ConfigError("prices_to_returns: need at least two price rows");
  if (!prices.allFinite() || prices.minCoeff() <= 0.0)
    throw ConfigError("prices_to_returns: prices must be positive and finite");
  Mat returns(prices.rows() - 1, prices.cols());
  for (long t = 0; t + 1 < prices.rows(); ++t)
    returns.row(t) = prices.row(t + 1).cwiseQuotient(prices.row(t)) - Mat::Ones(1, prices.cols());
  return returns;
}

}  // namespace genmv::data
