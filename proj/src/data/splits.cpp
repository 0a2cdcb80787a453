#include "genmv/data/splits.hpp"

namespace genmv::data {

void DataSplit::validate() const {
  if (n_months < 1) throw ConfigError("DataSplit: empty panel");
  if (train_begin != 0 || train_end != val_begin || val_end != test_begin ||
      test_end != n_months)
    throw ConfigError("DataSplit: ranges must be chronological and covering");
  if (train_size() < 0 || val_size() < 0 || test_size() < 0)
    throw ConfigError("DataSplit: negative range");
  if (context_months < 0 || context_months > test_size())
    throw ConfigError("DataSplit: context window exceeds the test block");
}

DataSplit make_splits(int n_months, const SplitRule& rule) {
  if (rule.test_months < 1) throw ConfigError("make_splits: test block must be nonempty");
  if (rule.val_months < 0 || rule.context_months < 0)
    throw ConfigError("make_splits: negative split sizes");
  if (rule.context_months > rule.test_months)
    throw ConfigError("make_splits: context window exceeds the test block");
  const int train = n_months - rule.test_months - rule.val_months;
  if (train < 1)
    throw ConfigError(
        "make_splits: insufficient history for the requested validation/test blocks");
  DataSplit s;
  s.n_months = n_months;
  s.train_begin = 0;
  s.train_end = train;
  s.val_begin = train;
  s.val_end = train + rule.val_months;
  s.test_begin = s.val_end;
  s.test_end = n_months;
  s.context_months = rule.context_months;
  s.validate();
  return s;
}

}  // namespace genmv::data
