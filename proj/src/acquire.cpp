//
// Project al-curator - Copyright 2026 The al-curator Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "alcurator/acquire.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <numeric>
#include <random>

#include "alcurator/cluster.hpp"
#include "alcurator/error.hpp"

namespace alcurator {
namespace {

constexpr std::array<std::string_view, 5> kStrategyNames = {
    "random", "uncertainty", "cluster", "uncertainty_cluster",
    "property_search"};

std::size_t pow2_times(std::size_t factor, long exponent) {
  if (exponent >= 62) return std::numeric_limits<std::size_t>::max() / 4;
  const std::size_t p = std::size_t{1} << exponent;
  if (factor != 0 && p > std::numeric_limits<std::size_t>::max() / 4 / factor) {
    return std::numeric_limits<std::size_t>::max() / 4;
  }
  return p * factor;
}

void check_batch(const AcquisitionContext &ctx, std::size_t n_b,
                 std::size_t limit) {
  if (static_cast<std::size_t>(ctx.variance.size()) != ctx.size() ||
      static_cast<std::size_t>(ctx.descriptors.rows()) != ctx.size()) {
    throw DataError("acquisition context is not index-aligned");
  }
  if (n_b > limit) {
    throw DataError("batch of " + std::to_string(n_b) +
                    " exceeds the admissible " + std::to_string(limit) +
                    " for a held-out set of " + std::to_string(ctx.size()));
  }
}

IndexList sample_without_replacement(IndexList items, std::size_t n,
                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, items.size() - 1);
    std::swap(items[i], items[pick(rng)]);
  }
  items.resize(n);
  return items;
}

IndexList cluster_representatives(const Eigen::MatrixXd &points,
                                  std::size_t n_b, std::uint64_t seed) {
  if (n_b == 0) return {};
  const auto clustering = kmeans(points, static_cast<int>(n_b), seed);
  return nearest_to_centers(points, clustering);
}

}  // namespace

void BatchSchedule::validate() const {
  if (n_const < 1) throw DataError("schedule.n_const must be at least 1");
  if (n_init < 1) throw DataError("schedule.n_init must be at least 1");
}

std::size_t training_size(const BatchSchedule &s, long t) {
  if (t < 0) return s.n_init;
  if (s.kind == ScheduleKind::constant) {
    return static_cast<std::size_t>(t) * s.n_const + s.n_init;
  }
  if (s.pow_variant == PowVariant::doubling_total) {
    return pow2_times(s.n_init, t + 1);
  }
  return pow2_times(s.n_const, t) + s.n_init;
}

std::size_t batch_size(const BatchSchedule &s, std::size_t t) {
  if (s.kind == ScheduleKind::constant) return s.n_const;
  const auto tt = static_cast<long>(t);
  return training_size(s, tt) - training_size(s, tt - 1);
}

std::string_view to_string(Strategy s) noexcept {
  return kStrategyNames[static_cast<std::size_t>(s)];
}

std::optional<Strategy> parse_strategy(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kStrategyNames.size(); ++i) {
    if (kStrategyNames[i] == name) return static_cast<Strategy>(i);
  }
  return std::nullopt;
}

IndexList rank_by_uncertainty(const Eigen::VectorXd &variance) {
  IndexList order(static_cast<std::size_t>(variance.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return variance[static_cast<Eigen::Index>(a)] >
           variance[static_cast<Eigen::Index>(b)];
  });
  return order;
}

IndexList strategy_random(const AcquisitionContext &ctx, std::size_t n_b) {
  check_batch(ctx, n_b, ctx.size());
  IndexList all(ctx.size());
  std::iota(all.begin(), all.end(), Index{0});
  return sample_without_replacement(std::move(all), n_b, ctx.seed);
}

IndexList strategy_uncertainty(const AcquisitionContext &ctx, std::size_t n_b) {
  check_batch(ctx, n_b, ctx.size());
  auto order = rank_by_uncertainty(ctx.variance);
  order.resize(n_b);
  return order;
}

IndexList strategy_cluster(const AcquisitionContext &ctx, std::size_t n_b) {
  check_batch(ctx, n_b, ctx.size());
  return cluster_representatives(ctx.descriptors, n_b, ctx.seed);
}

IndexList strategy_uncertainty_cluster(const AcquisitionContext &ctx,
                                       std::size_t n_b) {
  const std::size_t half = (ctx.size() + 1) / 2;
  check_batch(ctx, n_b, half);
  auto top = rank_by_uncertainty(ctx.variance);
  top.resize(half);
  Eigen::MatrixXd sub(static_cast<Eigen::Index>(half), ctx.descriptors.cols());
  for (std::size_t i = 0; i < half; ++i) {
    sub.row(static_cast<Eigen::Index>(i)) =
        ctx.descriptors.row(static_cast<Eigen::Index>(top[i]));
  }
  auto picks = cluster_representatives(sub, n_b, ctx.seed);
  for (auto &p : picks) p = top[p];
  return picks;
}

IndexList strategy_property_search(const AcquisitionContext &ctx,
                                   std::size_t n_b) {
  if (!ctx.target) throw DataError("property search needs a target threshold");
  check_batch(ctx, n_b, ctx.size());
  IndexList candidates, others;
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    (ctx.target->in_range(ctx.mean[static_cast<Eigen::Index>(i)]) ? candidates
                                                                   : others)
        .push_back(i);
  }
  if (candidates.size() >= n_b) {
    return sample_without_replacement(std::move(candidates), n_b, ctx.seed);
  }
  // Shortfall: take every candidate, then the highest predictions below the
  // threshold.
  std::stable_sort(others.begin(), others.end(), [&](Index a, Index b) {
    return ctx.mean[static_cast<Eigen::Index>(a)] >
           ctx.mean[static_cast<Eigen::Index>(b)];
  });
  IndexList picks = std::move(candidates);
  picks.insert(picks.end(), others.begin(),
               others.begin() + static_cast<std::ptrdiff_t>(n_b - picks.size()));
  return picks;
}

IndexList acquire(Strategy s, const AcquisitionContext &ctx, std::size_t n_b) {
  switch (s) {
  case Strategy::random: return strategy_random(ctx, n_b);
  case Strategy::uncertainty: return strategy_uncertainty(ctx, n_b);
  case Strategy::cluster: return strategy_cluster(ctx, n_b);
  case Strategy::uncertainty_cluster: return strategy_uncertainty_cluster(ctx, n_b);
  case Strategy::property_search: return strategy_property_search(ctx, n_b);
  }
  throw DataError("unknown strategy");
}

std::size_t max_batch(Strategy s, std::size_t pool) noexcept {
  return s == Strategy::uncertainty_cluster ? (pool + 1) / 2 : pool;
}

}  // namespace alcurator
