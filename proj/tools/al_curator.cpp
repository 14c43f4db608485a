//
// Project al-curator - Copyright 2026 The al-curator Authors.
// SPDX-License-Identifier: Apache-2.0
//

// al_curator: active-learning curation runs from the command line.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "alcurator/config.hpp"
#include "alcurator/error.hpp"
#include "alcurator/experiment.hpp"
#include "alcurator/loop.hpp"

namespace fs = std::filesystem;
using namespace alcurator;

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;

// Usage problems the user must fix before anything runs.
struct UsageError : Error {
  using Error::Error;
};

int cmd_run(const fs::path &config_path, const fs::path &out,
            const std::optional<fs::path> &resume,
            const std::optional<std::size_t> &max_iterations) {
  const auto cfg = load_experiment_config(config_path);
  std::optional<RunState> checkpoint;
  if (resume) {
    checkpoint = load_checkpoint(*resume);
    if (checkpoint->status == RunStatus::complete) {
      std::cout << "complete\n";
      return kOk;
    }
  }

  const auto problem = load_problem(cfg, default_threads());
  ExperimentOptions opts;
  opts.out_dir = out / cfg.digest();
  opts.threads = default_threads();
  opts.max_iterations = max_iterations;

  std::vector<RunOutcome> outcomes;
  if (checkpoint) {
    outcomes.push_back(resume_run(cfg, problem, *checkpoint, opts));
  } else {
    outcomes = run_experiment(cfg, problem, opts);
  }

  int code = kOk;
  for (const auto &o : outcomes) {
    if (o.error) {
      std::cerr << "seed " << o.seed << ": " << *o.error << '\n';
      code = kRuntimeError;
    } else if (o.state && o.state->status == RunStatus::awaiting_labels) {
      std::cout << "seed " << o.seed << ": awaiting labels for " << o.state->pending.size()
                << " molecules in " << cfg.request_path.string() << "; resume with --resume "
                << seed_checkpoint_path(opts.out_dir, o.seed).string() << '\n';
    } else if (o.state) {
      std::cout << "seed " << o.seed << ": " << to_string(o.state->status) << " after "
                << o.state->history.size() << " iterations, train size "
                << o.state->pool.train().size() << '\n';
    }
  }
  std::cout << opts.out_dir.string() << '\n';
  return code;
}

int cmd_synth(const fs::path &config_path, const fs::path &out) {
  const auto cfg = load_experiment_config(config_path);
  if (cfg.source != DataSource::synthetic) {
    throw ConfigError("dataset.source", "synth needs dataset.source = synthetic");
  }
  const auto ds = synth_dataset(cfg.synth, cfg.synth_seed);
  write_file_atomic(out, write_feature_table(ds));
  auto labels = out;
  labels += ".labels";
  write_file_atomic(labels, write_label_table(ds));
  std::cout << out.string() << '\n' << labels.string() << '\n';
  return kOk;
}

int cmd_noise_grid(const fs::path &config_path, const std::string &grid_text,
                   const fs::path &out) {
  const auto cfg = load_experiment_config(config_path);
  const auto grid = parse_real_list(grid_text, "grid");
  const auto problem = load_problem(cfg, default_threads());
  if (!problem.dataset.fully_labeled()) {
    throw ConfigError("dataset.labels", "noise-grid needs a fully labeled dataset");
  }
  const auto result = noise_grid_search(cfg, problem, grid);
  write_file_atomic(out, noise_grid_csv(result));
  std::cout << "best noise " << format_real(result.best) << '\n';
  return kOk;
}

int cmd_curves(const fs::path &runs, const fs::path &out) {
  if (!fs::is_directory(runs)) throw UsageError("no run directory " + runs.string());
  std::map<Strategy, std::vector<std::pair<fs::path, AggregateTable>>> found;
  for (const auto &entry : fs::recursive_directory_iterator(runs)) {
    if (!entry.is_regular_file() || entry.path().filename() != "aggregate.csv") continue;
    auto table = parse_aggregate_csv(read_file(entry.path()));
    if (table.rows.empty()) continue;
    found[table.strategy].emplace_back(entry.path(), std::move(table));
  }
  auto only = [&](Strategy s) -> const AggregateTable & {
    auto it = found.find(s);
    if (it == found.end() || found.count(Strategy::random) == 0 ||
        found.count(Strategy::property_search) == 0) {
      throw UsageError("need both strategies: random and property_search aggregates under " +
                       runs.string());
    }
    if (it->second.size() > 1) {
      std::string paths;
      for (const auto &[p, t] : it->second) paths += "\n  " + p.string();
      throw UsageError("several " + std::string(to_string(s)) + " aggregates:" + paths);
    }
    return it->second.front().second;
  };
  const auto &e = only(Strategy::property_search);
  const auto &a = only(Strategy::random);
  std::string csv;
  try {
    csv = savings_csv(e, a);
  } catch (const DataError &err) {
    throw UsageError(err.what());
  }
  write_file_atomic(out, csv);
  auto script = out;
  script.replace_extension(".gp");
  write_file_atomic(script, savings_gnuplot(out));
  std::cout << out.string() << '\n' << script.string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Active-learning dataset curation with Gaussian process regression"};
  app.require_subcommand(1);

  fs::path config, out, runs;
  std::optional<fs::path> resume;
  std::optional<std::size_t> max_iterations;
  std::string grid;

  auto *run = app.add_subcommand("run", "Run every seed of an experiment");
  run->add_option("--config", config, "Experiment config file")->required();
  run->add_option("--out", out, "Output root; results go to <out>/<config digest>/")
      ->required();
  run->add_option("--resume", resume, "Continue the run stored in this checkpoint");
  run->add_option("--max-iterations", max_iterations,
                  "Stop each seed after this many iterations (resumable)");

  auto *synth = app.add_subcommand("synth", "Write a synthetic feature table and labels");
  synth->add_option("--config", config, "Experiment config file")->required();
  synth->add_option("--out", out, "Feature table path; labels go to <out>.labels")
      ->required();

  auto *noise = app.add_subcommand("noise-grid", "Validation MAE over GP noise values");
  noise->add_option("--config", config, "Experiment config file")->required();
  noise->add_option("--grid", grid, "Comma-separated noise variances")->required();
  noise->add_option("--out", out, "CSV output")->required();

  auto *curves = app.add_subcommand("curves", "Savings of property search over random");
  curves->add_option("--runs", runs, "Directory holding aggregate.csv files")->required();
  curves->add_option("--out", out, "Savings CSV; a gnuplot script goes next to it")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*run) return cmd_run(config, out, resume, max_iterations);
    if (*synth) return cmd_synth(config, out);
    if (*noise) return cmd_noise_grid(config, grid, out);
    if (*curves) return cmd_curves(runs, out);
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const UsageError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}
