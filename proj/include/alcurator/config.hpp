//
// Project al-curator - Copyright 2026 The al-curator Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef ALCURATOR_CONFIG_HPP_
#define ALCURATOR_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "alcurator/acquire.hpp"
#include "alcurator/descriptor.hpp"
#include "alcurator/gp.hpp"
#include "alcurator/moldata.hpp"

namespace alcurator {

/// Raw "key = value" entries. '#' starts a comment line; keys use dotted
/// section prefixes (gp.length_scale). Duplicate keys are an error.
std::map<std::string, std::string> parse_key_values(std::string_view text);

enum class DataSource { synthetic, xyz, features };
enum class OracleMode { precomputed, deferred };

struct ExperimentConfig {
  // dataset
  DataSource source = DataSource::synthetic;
  std::string dataset_name;
  std::filesystem::path xyz_path;
  std::filesystem::path labels_path;
  std::filesystem::path features_path;
  SynthSpec synth;
  std::uint64_t synth_seed = 0;

  MbtrConfig descriptor;
  std::filesystem::path descriptor_cache;

  // model
  gp::Hyperparams<double> gp;
  int restarts = 2;
  double bounds_factor = 100.0;
  bool reoptimize = true;  // re-fit hyperparameters every iteration
  std::size_t gp_cap = 4000;

  // acquisition
  Strategy strategy = Strategy::random;
  BatchSchedule schedule;
  std::optional<double> target_epsilon;
  std::optional<double> target_fraction;

  std::optional<std::size_t> n_test;  // default depends on the dataset
  std::vector<std::uint64_t> seeds{0};
  std::size_t max_train = 4000;
  bool stop_when_all_inrange = true;

  OracleMode oracle = OracleMode::precomputed;
  std::filesystem::path request_path;
  std::filesystem::path response_path;

  /// Throws ConfigError naming the first offending key.
  void validate() const;

  bool has_target() const { return target_epsilon || target_fraction; }

  /// Every setting, defaults included, as sorted "key = value" lines.
  std::string canonical() const;
  /// Hex digest of canonical().
  std::string digest() const;

  /// Test-set size for a dataset of `pool` molecules: n_test when given,
  /// else 20% of synthetic pools up to 5000 and 1000 otherwise.
  std::size_t test_size(std::size_t pool) const;
};

/// Parses and validates a config; relative paths resolve against `base_dir`.
ExperimentConfig parse_experiment_config(std::string_view text,
                                         const std::filesystem::path &base_dir = {});

ExperimentConfig load_experiment_config(const std::filesystem::path &path);

/// Comma-separated reals ("1e-10, 0.05").
std::vector<double> parse_real_list(std::string_view text, const std::string &key);

}  // namespace alcurator

#endif  // ALCURATOR_CONFIG_HPP_
