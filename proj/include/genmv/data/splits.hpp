#pragma once

#include "genmv/common.hpp"

namespace genmv::data {

// Chronological split sizes, counted backwards from the end of the panel:
// the test block is the most recent `test_months`, validation the
// `val_months` immediately before it, training everything earlier. The first
// `context_months` of the test block are reserved as the conditioning window
// and excluded from evaluation.
struct SplitRule {
  int test_months = 192;
  int val_months = 500;
  int context_months = 12;
};

// Disjoint, chronological, covering index ranges [begin, end) over a panel
// of n_months rows.
struct DataSplit {
  int n_months = 0;
  int train_begin = 0, train_end = 0;
  int val_begin = 0, val_end = 0;
  int test_begin = 0, test_end = 0;
  int context_months = 0;

  int train_size() const { return train_end - train_begin; }
  int val_size() const { return val_end - val_begin; }
  int test_size() const { return test_end - test_begin; }
  // Evaluation range: the test block after the context window.
  int eval_begin() const { return test_begin + context_months; }
  int eval_end() const { return test_end; }

  void validate() const;
};

DataSplit make_splits(int n_months, const SplitRule& rule = {});

}  // namespace genmv::data
