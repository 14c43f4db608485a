//
// Project al-curator - Copyright 2026 The al-curator Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <cmath>
#include <random>

#include <doctest.h>

#include "alcurator/error.hpp"
#include "alcurator/metrics.hpp"

using namespace alcurator;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Dataset labeled(const Eigen::VectorXd &y) {
  std::vector<Molecule> mols;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    Molecule m;
    m.id = "m" + std::to_string(i);
    m.species = {"H"};
    m.positions = {Eigen::Vector3d::Zero()};
    m.label = y[i];
    mols.push_back(m);
  }
  return Dataset("metrics", std::move(mols));
}

// Training size at which a piecewise-linear, non-decreasing curve first
// reaches `level`, found by bisection.
std::optional<double> first_reach(const Curve &c, double level) {
  if (c.value.back() < level) return std::nullopt;
  auto at = [&](double x) {
    for (std::size_t j = 1; j < c.train_size.size(); ++j) {
      if (x <= c.train_size[j]) {
        const double f = (x - c.train_size[j - 1]) / (c.train_size[j] - c.train_size[j - 1]);
        return c.value[j - 1] + f * (c.value[j] - c.value[j - 1]);
      }
    }
    return c.value.back();
  };
  double lo = c.train_size.front(), hi = c.train_size.back();
  if (at(lo) >= level) return lo;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (at(mid) >= level ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace

TEST_CASE("mae") {
  CHECK(mae(vec({1, 2}), vec({2, 4})) == 1.5);
  CHECK(mae(vec({3, -1}), vec({3, -1})) == 0.0);
  CHECK_THROWS_AS(mae(vec({1}), vec({1, 2})), DataError);
  CHECK_THROWS_AS(mae(Eigen::VectorXd(), Eigen::VectorXd()), DataError);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd p(100), t(100);
    double sum = 0.0;
    for (int i = 0; i < 100; ++i) {
      p[i] = g(rng);
      t[i] = g(rng);
      sum += std::abs(p[i] - t[i]);
    }
    CHECK(std::abs(mae(p, t) - sum / 100.0) <= 1e-12);
    CHECK(mae(p, t) == mae(t, p));
  }
}

TEST_CASE("classification rates") {
  const TargetSpec target{0.5};
  const auto two = classification_rates(vec({1, 0, 0, 1}), vec({1, 1, 0, 0}), target);
  CHECK(*two.tpr == 0.5);
  CHECK(*two.fpr == 0.5);

  const auto perfect = classification_rates(vec({1, 0, 0.7}), vec({1, 0, 0.7}), target);
  CHECK(*perfect.tpr == 1.0);
  CHECK(*perfect.fpr == 0.0);

  const auto always = classification_rates(vec({9, 9, 9}), vec({1, 0, 0}), target);
  CHECK(*always.tpr == 1.0);
  CHECK(*always.fpr == 1.0);

  const auto no_pos = classification_rates(vec({1, 0}), vec({0, 0}), target);
  CHECK_FALSE(no_pos.tpr);
  CHECK(*no_pos.fpr == 0.5);
  const auto no_neg = classification_rates(vec({1, 0}), vec({1, 1}), target);
  CHECK_FALSE(no_neg.fpr);

  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd p(200), t(200);
    int tp = 0, fp = 0, pos = 0, neg = 0;
    for (int i = 0; i < 200; ++i) {
      t[i] = g(rng);
      p[i] = t[i] + 0.8 * g(rng);
      const bool actual = t[i] > 0.5, predicted = p[i] > 0.5;
      (actual ? pos : neg)++;
      if (actual && predicted) ++tp;
      if (!actual && predicted) ++fp;
    }
    const auto r = classification_rates(p, t, target);
    CHECK(*r.tpr == double(tp) / pos);
    CHECK(*r.fpr == double(fp) / neg);
  }
}

TEST_CASE("in-range progress") {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(100);
  y.head(30).setOnes();
  const auto ds = labeled(y);
  std::vector<IterationRecord> h(3);
  h[0].n_inrange_train = 3;
  h[1].n_inrange_train = 3;
  h[2].n_inrange_train = 30;
  const auto c = inrange_progress(h, ds, TargetSpec{0.5});
  CHECK(c[0] == doctest::Approx(10.0));
  CHECK(c[1] == doctest::Approx(10.0));
  CHECK(c[2] == 100.0);
  CHECK_THROWS_AS(inrange_progress(h, ds, TargetSpec{5.0}), DataError);
  h[1].n_inrange_train.reset();
  CHECK_THROWS_AS(inrange_progress(h, ds, TargetSpec{0.5}), DataError);
}

TEST_CASE("savings of identical curves are zero") {
  Curve c{{1000, 2000, 4000}, {5, 12, 20}};
  for (const auto &p : savings(c, c)) {
    CHECK(p.extra_pct == 0.0);
    REQUIRE(p.computations_saved);
    CHECK(*p.computations_saved == 0.0);
  }
}

TEST_CASE("39% at 16000 for random against 5600 for property search") {
  Curve a, e;
  for (int k = 1; k <= 16; ++k) {
    a.train_size.push_back(1000.0 * k);
    e.train_size.push_back(1000.0 * k);
    a.value.push_back(39.0 * k / 16.0);
  }
  // E passes 36% at 5000 and 41% at 6000
  e.value = {8, 16, 24, 30, 36, 41, 46, 50, 54, 58, 61, 64, 67, 70, 72, 74};
  const auto s = savings(e, a);
  REQUIRE(s.back().e_train_size);
  CHECK(*s.back().e_train_size == doctest::Approx(5600.0));
  CHECK(*s.back().computations_saved == doctest::Approx(10400.0));
  CHECK(*s.back().relative_savings == doctest::Approx(0.65));
  CHECK(s.back().extra_pct == doctest::Approx(35.0));
}

TEST_CASE("savings match an interpolation oracle") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> step(0.0, 6.0);
  for (int trial = 0; trial < 50; ++trial) {
    Curve a, e;
    double va = 0.0, ve = 0.0;
    for (int k = 0; k < 9; ++k) {
      a.train_size.push_back(100.0 * (k + 1));
      e.train_size.push_back(100.0 * (k + 1));
      va += step(rng);
      ve += step(rng) * 1.3;
      a.value.push_back(va);
      e.value.push_back(ve);
    }
    const auto s = savings(e, a);
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(s[i].extra_pct == doctest::Approx(e.value[i] - a.value[i]));
      const auto oracle = first_reach(e, a.value[i]);
      CHECK(oracle.has_value() == s[i].e_train_size.has_value());
      if (oracle && s[i].e_train_size) {
        CHECK(*s[i].e_train_size == doctest::Approx(*oracle).epsilon(1e-9));
        CHECK(*s[i].computations_saved == doctest::Approx(a.train_size[i] - *oracle).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("savings need a shared grid") {
  Curve a{{1, 2}, {0, 1}}, e{{1, 3}, {0, 1}};
  CHECK_THROWS_AS(savings(e, a), DataError);
}
