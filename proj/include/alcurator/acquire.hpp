//
// Project al-curator - Copyright 2026 The al-curator Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef ALCURATOR_ACQUIRE_HPP_
#define ALCURATOR_ACQUIRE_HPP_

#include <cstdint>
#include <optional>
#include <string_view>

#include <Eigen/Dense>

#include "alcurator/moldata.hpp"

namespace alcurator {

// -- batch schedules -----------------------------------------------------------

enum class ScheduleKind { pow, constant };

/// `literal`: N_TR(t) = 2^t n_const + n_init.
/// `doubling_total`: N_TR(t) = 2^(t+1) n_init, i.e. the training set doubles.
enum class PowVariant { literal, doubling_total };

struct BatchSchedule {
  ScheduleKind kind = ScheduleKind::pow;
  std::size_t n_const = 1000;
  std::size_t n_init = 1000;
  PowVariant pow_variant = PowVariant::literal;

  void validate() const;
};

/// Training-set size N_TR(t) for t >= 0; N_TR(-1) is n_init.
///   pow:      2^t * n_const + n_init
///   constant: t * n_const + n_init
std::size_t training_size(const BatchSchedule &s, long t);

/// Molecules to acquire at iteration t.
///
/// pow: N_TR(t) - N_TR(t-1). constant: n_const at every t, so the training
/// set entering iteration t holds exactly N_TR(t) molecules.
std::size_t batch_size(const BatchSchedule &s, std::size_t t);

// -- strategies ----------------------------------------------------------------

enum class Strategy {
  random,               // A
  uncertainty,          // B
  cluster,              // C
  uncertainty_cluster,  // D
  property_search,      // E
};

std::string_view to_string(Strategy s) noexcept;
std::optional<Strategy> parse_strategy(std::string_view name) noexcept;

/// Everything a strategy may look at, index-aligned with the held-out set.
struct AcquisitionContext {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  Eigen::MatrixXd descriptors;  // one row per held-out molecule
  std::optional<TargetSpec> target;
  std::uint64_t seed = 0;
  std::size_t t = 0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(mean.size()); }
};

// Each strategy returns `n_b` distinct positions into the held-out set.

IndexList strategy_random(const AcquisitionContext &ctx, std::size_t n_b);
IndexList strategy_uncertainty(const AcquisitionContext &ctx, std::size_t n_b);
IndexList strategy_cluster(const AcquisitionContext &ctx, std::size_t n_b);
IndexList strategy_uncertainty_cluster(const AcquisitionContext &ctx,
                                       std::size_t n_b);
IndexList strategy_property_search(const AcquisitionContext &ctx,
                                   std::size_t n_b);

IndexList acquire(Strategy s, const AcquisitionContext &ctx, std::size_t n_b);

/// Largest batch `s` accepts from a held-out set of `pool` molecules.
std::size_t max_batch(Strategy s, std::size_t pool) noexcept;

/// Positions sorted by descending variance; ties by ascending position.
IndexList rank_by_uncertainty(const Eigen::VectorXd &variance);

}  // namespace alcurator

#endif  // ALCURATOR_ACQUIRE_HPP_
