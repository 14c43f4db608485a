//
// Project al-curator - Copyright 2026 The al-curator Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef ALCURATOR_CLUSTER_HPP_
#define ALCURATOR_CLUSTER_HPP_

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "alcurator/moldata.hpp"

namespace alcurator {

struct KMeansOptions {
  int max_iter = 300;
  double tolerance = 1e-6;  // center movement, descriptor units
  int n_init = 10;          // independent k-means++ seedings; best inertia wins
};

struct Clustering {
  Eigen::MatrixXd centers;        // k x dim
  std::vector<int> assignment;    // point -> cluster
  double inertia = 0.0;           // sum of squared member-center distances
  std::vector<double> inertia_trace;  // per iteration of the winning seeding
};

/// Lloyd iterations from greedy k-means++ seeding, then Hartigan single-point
/// moves until none lowers the inertia. Deterministic in (points, k, seed)
/// and in the order of the points. A cluster that empties is reseeded with
/// the point farthest from its own center.
Clustering kmeans(const Eigen::Ref<const Eigen::MatrixXd> &points, int k,
                  std::uint64_t seed, const KMeansOptions &opts = {});

/// Per cluster, the member nearest to its center (ties: lowest index).
IndexList nearest_to_centers(const Eigen::Ref<const Eigen::MatrixXd> &points,
                             const Clustering &clustering);

}  // namespace alcurator

#endif  // ALCURATOR_CLUSTER_HPP_
