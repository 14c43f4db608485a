//
// Project al-curator - Copyright 2026 The al-curator Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "alcurator/metrics.hpp"

#include "alcurator/error.hpp"

namespace alcurator {

double mae(const VectorRef &pred, const VectorRef &truth) {
  if (pred.size() != truth.size()) {
    throw DataError("mae: length mismatch (" + std::to_string(pred.size()) +
                    " vs " + std::to_string(truth.size()) + ")");
  }
  if (pred.size() == 0) throw DataError("mae: empty input");
  return (pred - truth).cwiseAbs().mean();
}

ClassificationRates classification_rates(const VectorRef &pred,
                                         const VectorRef &truth,
                                         const TargetSpec &target) {
  if (pred.size() != truth.size()) {
    throw DataError("classification_rates: length mismatch");
  }
  std::size_t pos = 0, neg = 0, tp = 0, fp = 0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    const bool predicted = target.in_range(pred[i]);
    if (target.in_range(truth[i])) {
      ++pos;
      tp += predicted;
    } else {
      ++neg;
      fp += predicted;
    }
  }
  ClassificationRates r;
  if (pos > 0) r.tpr = double(tp) / double(pos);
  if (neg > 0) r.fpr = double(fp) / double(neg);
  return r;
}

std::vector<double> inrange_progress(const std::vector<IterationRecord> &history,
                                     const Dataset &ds, const TargetSpec &target) {
  const Eigen::VectorXd y = ds.labels();
  const auto total = (y.array() > target.epsilon).count();
  if (total == 0) throw DataError("no in-range molecules in the dataset");
  std::vector<double> curve;
  curve.reserve(history.size());
  for (const auto &rec : history) {
    if (!rec.n_inrange_train) {
      throw DataError("record at t=" + std::to_string(rec.t) +
                      " has no in-range count");
    }
    curve.push_back(100.0 * double(*rec.n_inrange_train) / double(total));
  }
  return curve;
}

std::vector<SavingsPoint> savings(const Curve &e, const Curve &a) {
  if (e.train_size != a.train_size || e.value.size() != e.train_size.size() ||
      a.value.size() != a.train_size.size()) {
    throw DataError("savings: curves are not on the same training-size grid");
  }
  const auto &s = a.train_size;
  std::vector<SavingsPoint> out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    SavingsPoint p;
    p.train_size = s[i];
    p.extra_pct = e.value[i] - a.value[i];
    const double level = a.value[i];
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (e.value[j] < level) continue;
      if (j == 0 || e.value[j] == level) {
        p.e_train_size = s[j];
      } else {
        const double frac = (level - e.value[j - 1]) / (e.value[j] - e.value[j - 1]);
        p.e_train_size = s[j - 1] + frac * (s[j] - s[j - 1]);
      }
      break;
    }
    if (p.e_train_size) {
      p.computations_saved = s[i] - *p.e_train_size;
      if (s[i] > 0.0) p.relative_savings = *p.computations_saved / s[i];
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace alcurator
