//
// Project al-curator - Copyright 2026 The al-curator Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "alcurator/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "alcurator/error.hpp"

namespace alcurator {
namespace {

using Points = Eigen::Ref<const Eigen::MatrixXd>;

// Greedy k-means++: each new center is the best of 2 + ln(k) candidates
// drawn proportionally to squared distance.
Eigen::MatrixXd seed_plus_plus(const Points &x, int k, std::mt19937_64 &rng) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd centers(k, x.cols());
  std::vector<char> chosen(static_cast<std::size_t>(n), 0);
  const int trials = 2 + static_cast<int>(std::log(double(k)));

  Eigen::Index first = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
  centers.row(0) = x.row(first);
  chosen[static_cast<std::size_t>(first)] = 1;
  Eigen::VectorXd d2 = (x.rowwise() - x.row(first)).rowwise().squaredNorm();

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = -1;
    if (total > 0.0) {
      double best_total = std::numeric_limits<double>::infinity();
      for (int trial = 0; trial < trials; ++trial) {
        double r = unit(rng) * total;
        Eigen::Index cand = -1;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (d2[i] <= 0.0) continue;
          cand = i;
          r -= d2[i];
          if (r < 0.0) break;
        }
        const double t = d2.cwiseMin((x.rowwise() - x.row(cand)).rowwise().squaredNorm()).sum();
        if (t < best_total) {
          best_total = t;
          pick = cand;
        }
      }
    } else {
      // Every remaining point coincides with a center.
      for (Eigen::Index i = 0; i < n && pick < 0; ++i) {
        if (!chosen[static_cast<std::size_t>(i)]) pick = i;
      }
    }
    chosen[static_cast<std::size_t>(pick)] = 1;
    centers.row(c) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - x.row(pick)).rowwise().squaredNorm());
  }
  return centers;
}

// Nearest center per point; ties go to the lower cluster index.
void assign(const Points &x, const Eigen::MatrixXd &centers,
            std::vector<int> &assignment) {
  const Eigen::MatrixXd cross = x * centers.transpose();
  const Eigen::VectorXd cnorm = centers.rowwise().squaredNorm();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centers.rows(); ++c) {
      const double d = cnorm[c] - 2.0 * cross(i, c);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    assignment[static_cast<std::size_t>(i)] = best;
  }
}

double inertia_of(const Points &x, const Eigen::MatrixXd &centers,
                  const std::vector<int> &assignment) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    s += (x.row(i) - centers.row(assignment[static_cast<std::size_t>(i)]))
             .squaredNorm();
  }
  return s;
}

// Gives every empty cluster the point farthest from its center, taken from a
// cluster that keeps at least one member.
void repair_empty(const Points &x, Eigen::MatrixXd &centers,
                  std::vector<int> &assignment) {
  const Eigen::Index k = centers.rows();
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
  for (int a : assignment) ++counts[static_cast<std::size_t>(a)];
  for (Eigen::Index c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) continue;
    Eigen::Index far = -1;
    double far_d = -1.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const int a = assignment[static_cast<std::size_t>(i)];
      if (counts[static_cast<std::size_t>(a)] < 2) continue;
      const double d = (x.row(i) - centers.row(a)).squaredNorm();
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    const int from = assignment[static_cast<std::size_t>(far)];
    --counts[static_cast<std::size_t>(from)];
    ++counts[static_cast<std::size_t>(c)];
    assignment[static_cast<std::size_t>(far)] = static_cast<int>(c);
    centers.row(c) = x.row(far);
  }
}

Clustering lloyd(const Points &x, Eigen::MatrixXd centers,
                 const KMeansOptions &opts) {
  const Eigen::Index k = centers.rows();
  Clustering out;
  out.assignment.assign(static_cast<std::size_t>(x.rows()), -1);
  std::vector<int> previous;
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    previous = out.assignment;
    assign(x, centers, out.assignment);
    repair_empty(x, centers, out.assignment);
    out.inertia_trace.push_back(inertia_of(x, centers, out.assignment));
    if (out.assignment == previous) break;

    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(k, x.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const int a = out.assignment[static_cast<std::size_t>(i)];
      next.row(a) += x.row(i);
      counts[a] += 1.0;
    }
    for (Eigen::Index c = 0; c < k; ++c) next.row(c) /= counts[c];
    const double moved = (next - centers).rowwise().norm().maxCoeff();
    centers = std::move(next);
    if (moved < opts.tolerance) break;
  }
  out.inertia = inertia_of(x, centers, out.assignment);
  out.inertia_trace.push_back(out.inertia);
  out.centers = std::move(centers);
  return out;
}

Eigen::MatrixXd member_means(const Points &x, const std::vector<int> &assignment,
                             Eigen::Index k, Eigen::VectorXd &counts) {
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(k, x.cols());
  counts = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int a = assignment[static_cast<std::size_t>(i)];
    means.row(a) += x.row(i);
    counts[a] += 1.0;
  }
  for (Eigen::Index c = 0; c < k; ++c) means.row(c) /= counts[c];
  return means;
}

// Hartigan single-point moves on top of a Lloyd solution: move a point when
// the exact inertia change (centers updated) is negative.
void refine(const Points &x, Clustering &c, const KMeansOptions &opts) {
  const Eigen::Index k = c.centers.rows();
  if (k < 2) return;
  Eigen::VectorXd counts;
  c.centers = member_means(x, c.assignment, k, counts);
  for (int pass = 0; pass < opts.max_iter; ++pass) {
    bool moved = false;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const int a = c.assignment[static_cast<std::size_t>(i)];
      const double na = counts[a];
      if (na < 2.0) continue;
      const double removal = na / (na - 1.0) * (x.row(i) - c.centers.row(a)).squaredNorm();
      int best = a;
      double best_add = removal;
      for (Eigen::Index b = 0; b < k; ++b) {
        if (b == a) continue;
        const double nb = counts[b];
        const double add = nb / (nb + 1.0) * (x.row(i) - c.centers.row(b)).squaredNorm();
        if (add < best_add) {
          best_add = add;
          best = static_cast<int>(b);
        }
      }
      if (best == a || removal - best_add <= 1e-12 * (1.0 + removal)) continue;
      c.centers.row(a) = (na * c.centers.row(a) - x.row(i)) / (na - 1.0);
      c.centers.row(best) = (counts[best] * c.centers.row(best) + x.row(i)) / (counts[best] + 1.0);
      counts[a] -= 1.0;
      counts[best] += 1.0;
      c.assignment[static_cast<std::size_t>(i)] = best;
      moved = true;
    }
    if (!moved) break;
    c.centers = member_means(x, c.assignment, k, counts);
    c.inertia_trace.push_back(inertia_of(x, c.centers, c.assignment));
  }
  c.centers = member_means(x, c.assignment, k, counts);
  c.inertia = inertia_of(x, c.centers, c.assignment);
  if (c.inertia < c.inertia_trace.back()) c.inertia_trace.push_back(c.inertia);
}

}  // namespace

Clustering kmeans(const Points &points, int k, std::uint64_t seed,
                  const KMeansOptions &opts) {
  if (k < 1) throw DataError("k-means needs k >= 1");
  if (k > points.rows()) {
    throw DataError("k-means with k=" + std::to_string(k) + " on " +
                    std::to_string(points.rows()) + " points");
  }
  // Work in lexicographic row order so the result does not depend on how the
  // caller ordered the points.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(points.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < points.cols(); ++c) {
      if (points(a, c) != points(b, c)) return points(a, c) < points(b, c);
    }
    return false;
  });
  Eigen::MatrixXd sorted(points.rows(), points.cols());
  for (std::size_t i = 0; i < order.size(); ++i) {
    sorted.row(static_cast<Eigen::Index>(i)) = points.row(order[i]);
  }

  std::mt19937_64 rng(seed);
  Clustering best;
  for (int run = 0; run < std::max(1, opts.n_init); ++run) {
    auto result = lloyd(sorted, seed_plus_plus(sorted, k, rng), opts);
    refine(sorted, result, opts);
    if (run == 0 || result.inertia < best.inertia) best = std::move(result);
  }
  std::vector<int> assignment(best.assignment.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    assignment[static_cast<std::size_t>(order[i])] = best.assignment[i];
  }
  best.assignment = std::move(assignment);
  return best;
}

IndexList nearest_to_centers(const Points &points, const Clustering &clustering) {
  const Eigen::Index k = clustering.centers.rows();
  IndexList out(static_cast<std::size_t>(k));
  std::vector<double> best(static_cast<std::size_t>(k),
                           std::numeric_limits<double>::infinity());
  std::vector<char> found(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const auto c = static_cast<std::size_t>(clustering.assignment[static_cast<std::size_t>(i)]);
    const double d =
        (points.row(i) - clustering.centers.row(static_cast<Eigen::Index>(c))).squaredNorm();
    if (d < best[c]) {
      best[c] = d;
      out[c] = static_cast<alcurator::Index>(i);
      found[c] = 1;
    }
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    if (!found[static_cast<std::size_t>(c)]) {
      throw DataError("cluster " + std::to_string(c) + " has no members");
    }
  }
  return out;
}

}  // namespace alcurator
