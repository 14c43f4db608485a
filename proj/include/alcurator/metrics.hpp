//
// Project al-curator - Copyright 2026 The al-curator Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef ALCURATOR_METRICS_HPP_
#define ALCURATOR_METRICS_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "alcurator/acquire.hpp"
#include "alcurator/moldata.hpp"

namespace alcurator {

/// One row of a learning curve. Metrics that are undefined for the
/// iteration (no target, empty class, empty held-out set) are absent.
struct IterationRecord {
  std::size_t t = 0;
  std::size_t train_size = 0;
  double mae_test = 0.0;
  std::optional<double> mae_test_inrange;
  std::optional<double> tpr_test;
  std::optional<double> fpr_test;
  std::optional<double> tpr_held;
  std::optional<double> fpr_held;
  std::optional<std::size_t> n_inrange_train;
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::random;

  friend bool operator==(const IterationRecord &, const IterationRecord &) = default;
};

using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

double mae(const VectorRef &pred, const VectorRef &truth);

struct ClassificationRates {
  std::optional<double> tpr;  // absent when truth has no positives
  std::optional<double> fpr;  // absent when truth has no negatives
};

/// Threshold classification of regression output: positives are
/// truth > epsilon, predicted positives are pred > epsilon.
/// TPR = TP / P, FPR = FP / N.
ClassificationRates classification_rates(const VectorRef &pred,
                                         const VectorRef &truth,
                                         const TargetSpec &target);

/// Per record, 100 * n_inrange_train / (in-range molecules in `ds`).
std::vector<double> inrange_progress(const std::vector<IterationRecord> &history,
                                     const Dataset &ds, const TargetSpec &target);

/// A curve sampled on increasing training-set sizes.
struct Curve {
  std::vector<double> train_size;
  std::vector<double> value;
};

struct SavingsPoint {
  double train_size = 0.0;
  double extra_pct = 0.0;  // E - A, percentage points of all in-range
  /// Smallest training size at which E reaches A's level here (linear
  /// interpolation between E samples); absent if E never gets there.
  std::optional<double> e_train_size;
  std::optional<double> computations_saved;  // train_size - e_train_size
  std::optional<double> relative_savings;    // computations_saved / train_size
};

/// Compares the in-range discovery curves of property search (E) and random
/// selection (A). Throws DataError unless both share one grid.
std::vector<SavingsPoint> savings(const Curve &e, const Curve &a);

}  // namespace alcurator

#endif  // ALCURATOR_METRICS_HPP_
