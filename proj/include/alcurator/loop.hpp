//
// Project al-curator - Copyright 2026 The al-curator Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef ALCURATOR_LOOP_HPP_
#define ALCURATOR_LOOP_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "alcurator/config.hpp"
#include "alcurator/gp.hpp"
#include "alcurator/metrics.hpp"
#include "alcurator/moldata.hpp"

namespace alcurator {

/// Everything a run needs that does not change between iterations.
struct Problem {
  Dataset dataset;
  Eigen::MatrixXd descriptors;  // one row per molecule
  std::optional<TargetSpec> target;
  /// In-range molecules in the whole pool, when every label is known.
  std::optional<std::size_t> inrange_total;
};

/// Builds the dataset and descriptors named by `cfg`. Descriptor rows are
/// read from / written to descriptor.cache when set.
Problem load_problem(const ExperimentConfig &cfg, unsigned threads = 1);

/// Wraps an in-memory dataset (tests, library use).
Problem make_problem(Dataset ds, const ExperimentConfig &cfg, unsigned threads = 1);

enum class RunStatus { running, awaiting_labels, complete };

std::string_view to_string(RunStatus s) noexcept;

struct RunState {
  std::uint64_t seed = 0;
  std::string config_digest;
  PoolState pool;
  std::vector<IterationRecord> history;
  gp::Hyperparams<double> hyper;
  /// Labels obtained from the oracle, by molecule id.
  std::map<std::string, double> acquired_labels;
  /// Batch waiting for external labels (awaiting_labels only).
  IndexList pending;
  RunStatus status = RunStatus::running;

  /// Index of the next iteration.
  std::size_t iteration() const noexcept { return history.size(); }
  /// Seed feeding every random choice made in the next iteration.
  std::uint64_t rng_digest() const noexcept;

  friend bool operator==(const RunState &, const RunState &) = default;
};

class LabelOracle {
public:
  virtual ~LabelOracle() = default;

  virtual OracleMode mode() const noexcept = 0;

  /// Labels for the requested molecules, or nullopt when the request was
  /// handed off and the run has to wait.
  virtual std::optional<std::vector<double>>
  request(const Dataset &ds, std::span<const Index> indices) = 0;

  /// Labels for a batch requested earlier. Throws OracleError listing the ids
  /// that are still unlabeled.
  virtual std::vector<double> collect(const Dataset &ds,
                                      std::span<const Index> indices) = 0;
};

/// Labels straight from the dataset.
class PrecomputedOracle final : public LabelOracle {
public:
  OracleMode mode() const noexcept override { return OracleMode::precomputed; }
  std::optional<std::vector<double>> request(const Dataset &ds,
                                             std::span<const Index> indices) override;
  std::vector<double> collect(const Dataset &ds, std::span<const Index> indices) override;
};

/// Writes a multi-XYZ request file and reads "id<TAB>label" rows back.
class DeferredOracle final : public LabelOracle {
public:
  DeferredOracle(std::filesystem::path request_file, std::filesystem::path response_file);

  OracleMode mode() const noexcept override { return OracleMode::deferred; }
  std::optional<std::vector<double>> request(const Dataset &ds,
                                             std::span<const Index> indices) override;
  std::vector<double> collect(const Dataset &ds, std::span<const Index> indices) override;

  const std::filesystem::path &request_file() const noexcept { return request_; }
  const std::filesystem::path &response_file() const noexcept { return response_; }

private:
  std::filesystem::path request_;
  std::filesystem::path response_;
};

std::unique_ptr<LabelOracle> make_oracle(const ExperimentConfig &cfg);

/// Pool split for `seed` plus hyperparameters fitted to the initial batch.
RunState initial_state(const Problem &problem, const ExperimentConfig &cfg,
                       std::uint64_t seed);

/// One fit, predict, acquire, label, extend step. Returns a state that is
/// either running, complete, or awaiting_labels (deferred oracle).
RunState run_iteration(const RunState &state, const Problem &problem,
                       const ExperimentConfig &cfg, LabelOracle &oracle);

/// Finishes an awaiting_labels iteration once the oracle can deliver.
RunState resume_pending(const RunState &state, const Problem &problem,
                        const ExperimentConfig &cfg, LabelOracle &oracle);

/// Iterates until the run completes, suspends, or `max_iterations` more
/// iterations have been done.
RunState run_to_completion(RunState state, const Problem &problem,
                           const ExperimentConfig &cfg, LabelOracle &oracle,
                           std::optional<std::size_t> max_iterations = std::nullopt);

std::string checkpoint_json(const RunState &state);
RunState parse_checkpoint(std::string_view text);

void save_checkpoint(const RunState &state, const std::filesystem::path &path);
RunState load_checkpoint(const std::filesystem::path &path);

/// Writes via a temporary sibling and rename.
void write_file_atomic(const std::filesystem::path &path, std::string_view text);
std::string read_file(const std::filesystem::path &path);

}  // namespace alcurator

#endif  // ALCURATOR_LOOP_HPP_
