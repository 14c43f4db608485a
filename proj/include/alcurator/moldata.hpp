//
// Project al-curator - Copyright 2026 The al-curator Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef ALCURATOR_MOLDATA_HPP_
#define ALCURATOR_MOLDATA_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace alcurator {

using Index = std::size_t;
using IndexList = std::vector<Index>;

struct Molecule {
  std::string id;
  std::vector<std::string> species;
  std::vector<Eigen::Vector3d> positions;  // Angstrom
  std::optional<double> label;             // HOMO energy, eV

  std::size_t size() const noexcept { return species.size(); }
};

/// Throws DataError unless species/positions match, are non-empty and finite.
void validate(const Molecule &mol);

/// An ordered, immutable collection of molecules with unique ids.
///
/// Synthetic pools carry their descriptors directly in `features()` (one row
/// per molecule); molecules of such pools are single-atom placeholders.
class Dataset {
public:
  Dataset() = default;
  Dataset(std::string name, std::vector<Molecule> molecules,
          std::optional<Eigen::MatrixXd> features = std::nullopt);

  const std::string &name() const noexcept { return name_; }
  const std::vector<Molecule> &molecules() const noexcept { return molecules_; }
  const Molecule &operator[](Index i) const { return molecules_[i]; }
  std::size_t size() const noexcept { return molecules_.size(); }
  const std::optional<Eigen::MatrixXd> &features() const noexcept {
    return features_;
  }

  std::optional<Index> find(std::string_view id) const;
  bool fully_labeled() const;

  /// All labels, in molecule order. Throws DataError naming the first
  /// unlabeled molecule.
  Eigen::VectorXd labels() const;

private:
  std::string name_;
  std::vector<Molecule> molecules_;
  std::optional<Eigen::MatrixXd> features_;
  std::map<std::string, Index, std::less<>> by_id_;
};

/// Disjoint held-out / train / test partition of `0..n-1`.
///
/// `heldout` and `test` are kept sorted; `train` keeps acquisition order.
class PoolState {
public:
  PoolState() = default;
  PoolState(std::size_t n, IndexList heldout, IndexList train, IndexList test);

  const IndexList &heldout() const noexcept { return heldout_; }
  const IndexList &train() const noexcept { return train_; }
  const IndexList &test() const noexcept { return test_; }
  std::size_t total() const noexcept { return n_; }

  /// Moves the given dataset indices from held-out to train (appended in the
  /// given order). Throws DataError if any index is not held out.
  PoolState acquire(std::span<const Index> indices) const;

  friend bool operator==(const PoolState &, const PoolState &) = default;

private:
  std::size_t n_ = 0;
  IndexList heldout_;
  IndexList train_;
  IndexList test_;
};

/// Target class: label strictly greater than epsilon.
struct TargetSpec {
  double epsilon = 0.0;

  bool in_range(double label) const noexcept { return label > epsilon; }
};

// -- XYZ and label tables ----------------------------------------------------

/// Parses one XYZ block. The comment line may carry `id=<str>` and
/// `label=<real>` pairs.
Molecule parse_xyz(std::string_view text);

/// Parses concatenated XYZ blocks. Molecules without an id get "mol<k>".
std::vector<Molecule> parse_multi_xyz(std::string_view text);

std::string write_xyz(const Molecule &mol);

/// "id<TAB>label" rows; blank lines and '#' comment lines are skipped.
std::map<std::string, double> parse_label_table(std::string_view text);

std::string write_label_table(const Dataset &ds);

/// Returns `ds` with labels from `table` set. Throws DataError listing every
/// id in the table that is not in the dataset.
Dataset attach_labels(const Dataset &ds,
                      const std::map<std::string, double> &table);

// -- pools and targets -------------------------------------------------------

/// Draws the test set, then the initial training set, uniformly at random.
/// The result depends only on (ds.size(), n_test, n_init, seed).
PoolState make_pool(const Dataset &ds, std::size_t n_test, std::size_t n_init,
                    std::uint64_t seed);

/// Threshold such that the share of labels strictly above it is as close as
/// possible to `fraction`, rounding toward fewer molecules on ties.
TargetSpec select_epsilon(const Dataset &ds, double fraction);

// -- synthetic pools ---------------------------------------------------------

enum class LabelMode { unimodal, bimodal };

struct SynthSpec {
  std::size_t pool_size = 2000;
  std::size_t feature_dim = 6;
  LabelMode mode = LabelMode::bimodal;
  std::vector<double> mode_centers{-8.5, -10.5};
  std::vector<double> mode_widths{0.5, 0.5};
  double noise_sd = 0.1;
  /// Distance between the two feature-space clusters in bimodal mode.
  double cluster_separation = 6.0;

  void validate() const;
};

/// Random feature points with labels that are a smooth function of the
/// features plus Gaussian noise. In bimodal mode the points come from two
/// separated feature clusters whose labels sit around the two mode centers.
Dataset synth_dataset(const SynthSpec &spec, std::uint64_t seed);

/// Feature table: "# id<TAB>f0<TAB>..." header, then one row per molecule.
std::string write_feature_table(const Dataset &ds);

/// Builds a dataset of placeholder molecules carrying the table's features.
Dataset parse_feature_table(std::string_view text, std::string name);

}  // namespace alcurator

#endif  // ALCURATOR_MOLDATA_HPP_
