//
// Project al-curator - Copyright 2026 The al-curator Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef ALCURATOR_EXPERIMENT_HPP_
#define ALCURATOR_EXPERIMENT_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "alcurator/config.hpp"
#include "alcurator/loop.hpp"
#include "alcurator/metrics.hpp"

namespace alcurator {

inline constexpr const char *kHistoryHeader =
    "strategy,seed,t,train_size,mae_test,mae_test_inrange,tpr_test,fpr_test,"
    "tpr_held,fpr_held,n_inrange_train,config_digest";

struct RunOutcome {
  std::uint64_t seed = 0;
  std::optional<RunState> state;  // absent if the run failed before starting
  std::optional<std::string> error;

  bool complete() const { return state && state->status == RunStatus::complete; }
};

struct ExperimentOptions {
  /// Where seed<k>.csv, seed<k>.ckpt.json and aggregate.csv go. Empty keeps
  /// everything in memory.
  std::filesystem::path out_dir;
  unsigned threads = 1;
  /// Iterations per seed in this call (for staged runs).
  std::optional<std::size_t> max_iterations;
};

/// Runs every seed of `cfg` from scratch, at most `threads` at a time.
std::vector<RunOutcome> run_experiment(const ExperimentConfig &cfg, const Problem &problem,
                                       const ExperimentOptions &opts);

/// Continues one run from its checkpoint and rewrites its outputs.
RunOutcome resume_run(const ExperimentConfig &cfg, const Problem &problem,
                      const RunState &state, const ExperimentOptions &opts);

std::string history_csv(const std::vector<IterationRecord> &history,
                        const std::string &config_digest);

/// Mean and sample sd per train size over the given runs. The result does
/// not depend on the order of `runs`.
std::string aggregate_csv(std::vector<const RunState *> runs, Strategy strategy,
                          std::optional<std::size_t> inrange_total,
                          const std::string &config_digest);

/// Re-reads every seed checkpoint in `dir` and rewrites aggregate.csv from the
/// completed ones. Returns the number of runs aggregated.
std::size_t write_aggregate(const ExperimentConfig &cfg, const Problem &problem,
                            const std::filesystem::path &dir);

std::filesystem::path seed_csv_path(const std::filesystem::path &dir, std::uint64_t seed);
std::filesystem::path seed_checkpoint_path(const std::filesystem::path &dir,
                                           std::uint64_t seed);

struct NoiseGridResult {
  std::vector<double> noise;
  std::vector<double> validation_mae;
  double best = 0.0;  // first argmin
};

/// Fits at each noise level on one fixed split (first seed, max_train
/// training rows, test rows held back for validation).
NoiseGridResult noise_grid_search(const ExperimentConfig &cfg, const Problem &problem,
                                  const std::vector<double> &grid);

std::string noise_grid_csv(const NoiseGridResult &r);

/// One parsed aggregate.csv.
struct AggregateTable {
  Strategy strategy = Strategy::random;
  std::string config_digest;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  /// The numeric column `name` (empty cells become NaN).
  std::vector<double> column(const std::string &name) const;
};

AggregateTable parse_aggregate_csv(std::string_view text);

/// Strategy E against strategy A on matching train-size grids.
std::string savings_csv(const AggregateTable &e, const AggregateTable &a);

std::string savings_gnuplot(const std::filesystem::path &savings_file);

/// Threads allowed by AL_CURATOR_THREADS, else the hardware count.
unsigned default_threads();

}  // namespace alcurator

#endif  // ALCURATOR_EXPERIMENT_HPP_
