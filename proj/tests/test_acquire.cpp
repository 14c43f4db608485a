//
// Project al-curator - Copyright 2026 The al-curator Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include <doctest.h>

#include "alcurator/acquire.hpp"
#include "alcurator/error.hpp"

using namespace alcurator;

namespace {

AcquisitionContext context(std::vector<double> mean, std::vector<double> variance,
                           std::uint64_t seed = 0) {
  AcquisitionContext ctx;
  ctx.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  ctx.variance =
      Eigen::Map<Eigen::VectorXd>(variance.data(), static_cast<Eigen::Index>(variance.size()));
  ctx.descriptors = Eigen::MatrixXd::Zero(ctx.mean.size(), 2);
  for (Eigen::Index i = 0; i < ctx.mean.size(); ++i) ctx.descriptors(i, 0) = double(i);
  ctx.seed = seed;
  return ctx;
}

AcquisitionContext random_context(std::mt19937_64 &rng, int n, std::uint64_t seed) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  AcquisitionContext ctx;
  ctx.mean.resize(n);
  ctx.variance.resize(n);
  ctx.descriptors.resize(n, 3);
  for (int i = 0; i < n; ++i) {
    ctx.mean[i] = g(rng);
    ctx.variance[i] = u(rng);
    for (int j = 0; j < 3; ++j) ctx.descriptors(i, j) = g(rng);
  }
  ctx.target = TargetSpec{0.5};
  ctx.seed = seed;
  return ctx;
}

std::set<Index> as_set(const IndexList &v) { return {v.begin(), v.end()}; }

constexpr Strategy kAll[] = {Strategy::random, Strategy::uncertainty, Strategy::cluster,
                             Strategy::uncertainty_cluster, Strategy::property_search};

}  // namespace

TEST_CASE("doubling schedule") {
  BatchSchedule s;
  s.kind = ScheduleKind::pow;
  s.n_const = 1000;
  s.n_init = 1000;
  const std::size_t sizes[] = {2000, 3000, 5000, 9000, 17000};
  const std::size_t batches[] = {1000, 1000, 2000, 4000, 8000};
  for (std::size_t t = 0; t < 5; ++t) {
    CHECK(training_size(s, long(t)) == sizes[t]);
    CHECK(batch_size(s, t) == batches[t]);
  }
  CHECK(training_size(s, -1) == 1000);

  s.pow_variant = PowVariant::doubling_total;
  CHECK(training_size(s, 0) == 2000);
  CHECK(training_size(s, 3) == 16000);
  CHECK(batch_size(s, 0) == 1000);
  CHECK(batch_size(s, 3) == 8000);
}

TEST_CASE("constant schedule") {
  BatchSchedule s;
  s.kind = ScheduleKind::constant;
  s.n_const = 2000;
  s.n_init = 1000;
  CHECK(training_size(s, 3) == 7000);
  CHECK(batch_size(s, 3) == 2000);
  CHECK(batch_size(s, 0) == 2000);
}

TEST_CASE("schedule sums") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> n(1, 500);
  for (int trial = 0; trial < 50; ++trial) {
    BatchSchedule pow{ScheduleKind::pow, n(rng), n(rng), PowVariant::literal};
    BatchSchedule dbl{ScheduleKind::pow, n(rng), n(rng), PowVariant::doubling_total};
    BatchSchedule cst{ScheduleKind::constant, n(rng), n(rng), PowVariant::literal};
    std::size_t sum_pow = 0, sum_dbl = 0, sum_cst = 0;
    for (std::size_t t = 0; t < 12; ++t) {
      sum_pow += batch_size(pow, t);
      sum_dbl += batch_size(dbl, t);
      sum_cst += batch_size(cst, t);
      CHECK(sum_pow + pow.n_init == training_size(pow, long(t)));
      CHECK(sum_dbl + dbl.n_init == training_size(dbl, long(t)));
      // constant batches start at t = 0, one step ahead of t * n_const
      CHECK(sum_cst + cst.n_init == training_size(cst, long(t) + 1));
    }
  }
  CHECK_THROWS_AS((BatchSchedule{ScheduleKind::pow, 0, 1, PowVariant::literal}.validate()),
                  DataError);
}

TEST_CASE("strategy names round trip") {
  for (auto s : kAll) CHECK(parse_strategy(to_string(s)) == s);
  CHECK_FALSE(parse_strategy("greedy"));
}

TEST_CASE("uncertainty picks the largest variances with stable ties") {
  auto ctx = context({0, 0, 0, 0}, {0.5, 0.9, 0.1, 0.7});
  CHECK(as_set(strategy_uncertainty(ctx, 2)) == std::set<Index>{1, 3});
  auto flat = context({0, 0, 0, 0}, {0.3, 0.3, 0.3, 0.3});
  CHECK(strategy_uncertainty(flat, 2) == IndexList{0, 1});

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto r = random_context(rng, 100, 0);
    std::vector<std::pair<double, Index>> keyed;
    for (Index i = 0; i < 100; ++i) keyed.emplace_back(-r.variance[Eigen::Index(i)], i);
    std::sort(keyed.begin(), keyed.end());
    IndexList oracle;
    for (int k = 0; k < 17; ++k) oracle.push_back(keyed[std::size_t(k)].second);
    CHECK(strategy_uncertainty(r, 17) == oracle);
  }
}

TEST_CASE("random selection") {
  auto ctx = context({0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}, 7);
  CHECK(as_set(strategy_random(ctx, 5)) == std::set<Index>{0, 1, 2, 3, 4});
  CHECK(strategy_random(ctx, 3) == strategy_random(ctx, 3));
  CHECK_THROWS_AS(strategy_random(ctx, 6), DataError);

  auto four = context({0, 0, 0, 0}, {0, 0, 0, 0});
  std::vector<int> counts(4, 0);
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    four.seed = seed;
    counts[strategy_random(four, 1)[0]]++;
  }
  for (int c : counts) {
    CHECK(c >= 2300);
    CHECK(c <= 2700);
  }
}

TEST_CASE("cluster selection") {
  std::mt19937_64 rng(5);
  auto ctx = random_context(rng, 12, 1);
  CHECK(as_set(strategy_cluster(ctx, 12)).size() == 12);

  std::normal_distribution<double> g(0.0, 0.3);
  ctx.descriptors.resize(12, 3);
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 3; ++j) ctx.descriptors(i, j) = g(rng) + (i < 6 ? 0.0 : 20.0);
  }
  const auto picks = strategy_cluster(ctx, 2);
  REQUIRE(picks.size() == 2);
  CHECK((picks[0] < 6) != (picks[1] < 6));

  const auto one = strategy_cluster(ctx, 1);
  const Eigen::RowVectorXd centroid = ctx.descriptors.colwise().mean();
  Eigen::Index nearest = 0;
  (ctx.descriptors.rowwise() - centroid).rowwise().squaredNorm().minCoeff(&nearest);
  CHECK(one == IndexList{Index(nearest)});
}

TEST_CASE("uncertainty clustering draws from the top half") {
  auto ctx = context({0, 0, 0, 0, 0, 0, 0, 0}, {0.1, 0.8, 0.2, 0.7, 0.3, 0.6, 0.4, 0.5}, 3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ctx.seed = seed;
    const auto picks = strategy_uncertainty_cluster(ctx, 2);
    REQUIRE(picks.size() == 2);
    for (auto p : picks) CHECK(std::set<Index>{1, 3, 5, 7}.count(p) == 1);
  }
  CHECK_THROWS_AS(strategy_uncertainty_cluster(ctx, 5), DataError);
  CHECK(max_batch(Strategy::uncertainty_cluster, 7) == 4);
  CHECK(max_batch(Strategy::random, 7) == 7);

  auto pairs = context({0, 0, 0, 0}, {1, 1, 1, 1});
  pairs.descriptors << 0, 0, 0.1, 0, 10, 10, 10.1, 10;
  // all four rows sit in the (ceil) top half of an 8-row pool
  AcquisitionContext wide = pairs;
  wide.mean = Eigen::VectorXd::Zero(8);
  wide.variance = Eigen::VectorXd::Zero(8);
  wide.variance.head(4).setOnes();
  wide.descriptors = Eigen::MatrixXd::Zero(8, 2);
  wide.descriptors.topRows(4) = pairs.descriptors;
  wide.descriptors.bottomRows(4).setConstant(5.0);
  const auto picks = strategy_uncertainty_cluster(wide, 2);
  REQUIRE(picks.size() == 2);
  CHECK((picks[0] < 2) != (picks[1] < 2));
  CHECK(std::max(picks[0], picks[1]) < 4);

  auto single = context({0}, {1});
  CHECK(strategy_uncertainty_cluster(single, 1) == IndexList{0});
}

TEST_CASE("property search filters on the predicted property") {
  auto ctx = context({-5.0, -6.0, -5.4, -5.6}, {0, 0, 0, 0});
  ctx.target = TargetSpec{-5.55};
  CHECK(as_set(strategy_property_search(ctx, 2)) == std::set<Index>{0, 2});

  auto below = context({-7.0, -6.0, -6.5, -8.0}, {0, 0, 0, 0});
  below.target = TargetSpec{-5.55};
  CHECK(as_set(strategy_property_search(below, 2)) == std::set<Index>{1, 2});

  auto partial = context({-5.0, -6.0, -6.5, -5.7}, {0, 0, 0, 0});
  partial.target = TargetSpec{-5.55};
  CHECK(as_set(strategy_property_search(partial, 2)) == std::set<Index>{0, 3});

  std::mt19937_64 rng(6);
  auto big = random_context(rng, 300, 13);
  big.target = TargetSpec{0.0};
  std::set<Index> filtered;
  for (Index i = 0; i < 300; ++i) {
    if (big.mean[Eigen::Index(i)] > 0.0) filtered.insert(i);
  }
  REQUIRE(filtered.size() >= 100);
  const auto picks = strategy_property_search(big, 10);
  CHECK(picks.size() == 10);
  for (auto p : picks) CHECK(filtered.count(p) == 1);
  CHECK(strategy_property_search(big, 10) == picks);

  ctx.target.reset();
  CHECK_THROWS_AS(strategy_property_search(ctx, 1), DataError);
}

TEST_CASE("every strategy returns distinct in-range positions") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 15; ++trial) {
    const int n = 5 + trial * 3;
    const auto ctx = random_context(rng, n, std::uint64_t(trial));
    for (auto s : kAll) {
      const std::size_t n_b = std::min<std::size_t>(1 + trial % 7, max_batch(s, std::size_t(n)));
      const auto picks = acquire(s, ctx, n_b);
      CHECK(picks.size() == n_b);
      CHECK(as_set(picks).size() == n_b);
      for (auto p : picks) CHECK(p < std::size_t(n));
      CHECK(acquire(s, ctx, n_b) == picks);
    }
  }
}

TEST_CASE("rank_by_uncertainty is a stable descending order") {
  Eigen::VectorXd v(5);
  v << 0.2, 0.9, 0.2, 0.9, 0.1;
  CHECK(rank_by_uncertainty(v) == IndexList{1, 3, 0, 2, 4});
}
