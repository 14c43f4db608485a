//
// Project al-curator - Copyright 2026 The al-curator Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef ALCURATOR_DESCRIPTOR_HPP_
#define ALCURATOR_DESCRIPTOR_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "alcurator/moldata.hpp"

namespace alcurator {

/// Two-body many-body-tensor settings.
///
/// Each element pair contributes one block of `grid_n` bins spanning the
/// inverse-distance axis [grid_min, grid_max] (1/Angstrom). Every atom pair
/// deposits a Gaussian of width `sigma` centered at 1/d, scaled by
/// exp(-weight_scale * d). Bin values are exact Gaussian masses over the bin.
struct MbtrConfig {
  std::vector<std::string> elements{"H", "C", "N", "O", "F", "S"};
  double grid_min = 0.0;
  double grid_max = 1.2;
  int grid_n = 100;
  double sigma = 0.02;
  double weight_scale = 0.5;

  void validate() const;
  std::uint64_t hash() const;

  std::size_t pair_count() const noexcept {
    return elements.size() * (elements.size() + 1) / 2;
  }
  std::size_t length() const noexcept {
    return pair_count() * static_cast<std::size_t>(grid_n);
  }
  /// Block index of the unordered pair (a, b) of vocabulary positions.
  std::size_t pair_block(std::size_t a, std::size_t b) const noexcept;
};

struct DescriptorVector {
  Eigen::VectorXd values;
  std::uint64_t config_hash = 0;
};

/// One descriptor per row, all bound to the same configuration.
struct DescriptorMatrix {
  Eigen::MatrixXd rows;
  std::uint64_t config_hash = 0;

  DescriptorVector row(Eigen::Index i) const {
    return {rows.row(i).transpose(), config_hash};
  }
};

/// Minimum interatomic distance accepted by mbtr_k2 (Angstrom).
inline constexpr double kCoincidentAtomTolerance = 1e-6;

DescriptorVector mbtr_k2(const Molecule &mol, const MbtrConfig &cfg);

/// Descriptors for many molecules, computed on up to `threads` workers.
DescriptorMatrix mbtr_k2_batch(std::span<const Molecule> mols,
                               const MbtrConfig &cfg, unsigned threads = 1);

/// Euclidean distance; throws DataError on mismatched configurations.
double descriptor_distance(const DescriptorVector &a, const DescriptorVector &b);

/// Hash binding precomputed feature tables (synthetic pools) to descriptors.
std::uint64_t feature_table_hash(Eigen::Index dim);

/// Uses precomputed features when the dataset carries them, else MBTR.
DescriptorMatrix dataset_descriptors(const Dataset &ds, const MbtrConfig &cfg,
                                     unsigned threads = 1);

// Cache file: a "# config_hash <hex> rows <n> cols <d>" header followed by
// "id<TAB>v0<TAB>v1..." rows.
void write_descriptor_cache(const std::string &path, const Dataset &ds,
                            const DescriptorMatrix &desc);

/// Returns nullopt when the file is missing, was written for another
/// configuration, or does not list exactly the dataset's ids in order.
std::optional<DescriptorMatrix>
read_descriptor_cache(const std::string &path, const Dataset &ds,
                      std::uint64_t expected_hash);

}  // namespace alcurator

#endif  // ALCURATOR_DESCRIPTOR_HPP_
