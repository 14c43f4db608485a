//
// Project al-curator - Copyright 2026 The al-curator Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "alcurator/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <thread>

#include "alcurator/digest.hpp"
#include "alcurator/error.hpp"

namespace alcurator {
namespace {

std::string cell(const std::optional<double> &v) { return v ? format_real(*v) : ""; }

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    auto end = line.find(',', pos);
    if (end == std::string_view::npos) {
      out.emplace_back(line.substr(pos));
      break;
    }
    out.emplace_back(line.substr(pos, end - pos));
    pos = end + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
  return out;
}

struct Stat {
  std::optional<double> mean;
  std::optional<double> sd;
};

Stat reduce(const std::vector<double> &xs) {
  Stat s;
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  s.mean = mean;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

Eigen::MatrixXd gather(const Eigen::MatrixXd &x, const IndexList &rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

void write_run_files(const RunState &state, const ExperimentOptions &opts) {
  if (opts.out_dir.empty()) return;
  save_checkpoint(state, seed_checkpoint_path(opts.out_dir, state.seed));
  write_file_atomic(seed_csv_path(opts.out_dir, state.seed),
                    history_csv(state.history, state.config_digest));
}

RunOutcome drive(const ExperimentConfig &cfg, const Problem &problem, RunState state,
                 const ExperimentOptions &opts) {
  RunOutcome out;
  out.seed = state.seed;
  auto oracle = make_oracle(cfg);
  try {
    std::size_t done = 0;
    if (state.status == RunStatus::awaiting_labels) {
      state = resume_pending(state, problem, cfg, *oracle);
      ++done;
      write_run_files(state, opts);
    }
    while (state.status == RunStatus::running &&
           (!opts.max_iterations || done < *opts.max_iterations)) {
      state = run_iteration(state, problem, cfg, *oracle);
      ++done;
      write_run_files(state, opts);
    }
  } catch (const Error &e) {
    out.error = e.what();
  }
  out.state = std::move(state);
  return out;
}

}  // namespace

std::filesystem::path seed_csv_path(const std::filesystem::path &dir, std::uint64_t seed) {
  return dir / ("seed" + std::to_string(seed) + ".csv");
}

std::filesystem::path seed_checkpoint_path(const std::filesystem::path &dir,
                                           std::uint64_t seed) {
  return dir / ("seed" + std::to_string(seed) + ".ckpt.json");
}

unsigned default_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char *env = std::getenv("AL_CURATOR_THREADS")) {
    char *end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) n = static_cast<unsigned>(v);
  }
  return n;
}

std::vector<RunOutcome> run_experiment(const ExperimentConfig &cfg, const Problem &problem,
                                       const ExperimentOptions &opts) {
  cfg.validate();
  std::vector<RunOutcome> outcomes(cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < cfg.seeds.size(); k = next++) {
      const auto seed = cfg.seeds[k];
      try {
        auto state = initial_state(problem, cfg, seed);
        write_run_files(state, opts);
        outcomes[k] = drive(cfg, problem, std::move(state), opts);
      } catch (const Error &e) {
        outcomes[k].seed = seed;
        outcomes[k].error = e.what();
      }
    }
  };
  const unsigned threads =
      std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(cfg.seeds.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
    for (auto &t : pool) t.join();
  }
  if (!opts.out_dir.empty()) write_aggregate(cfg, problem, opts.out_dir);
  return outcomes;
}

RunOutcome resume_run(const ExperimentConfig &cfg, const Problem &problem,
                      const RunState &state, const ExperimentOptions &opts) {
  if (state.config_digest != cfg.digest()) {
    throw Error("checkpoint was written for config " + state.config_digest +
                ", not " + cfg.digest());
  }
  auto out = drive(cfg, problem, state, opts);
  if (!opts.out_dir.empty()) write_aggregate(cfg, problem, opts.out_dir);
  return out;
}

std::string history_csv(const std::vector<IterationRecord> &history,
                        const std::string &config_digest) {
  std::string s = std::string(kHistoryHeader) + '\n';
  for (const auto &r : history) {
    s += std::string(to_string(r.strategy)) + ',' + std::to_string(r.seed) + ',' +
         std::to_string(r.t) + ',' + std::to_string(r.train_size) + ',' +
         format_real(r.mae_test) + ',' + cell(r.mae_test_inrange) + ',' +
         cell(r.tpr_test) + ',' + cell(r.fpr_test) + ',' + cell(r.tpr_held) + ',' +
         cell(r.fpr_held) + ',' +
         (r.n_inrange_train ? std::to_string(*r.n_inrange_train) : "") + ',' +
         config_digest + '\n';
  }
  return s;
}

std::string aggregate_csv(std::vector<const RunState *> runs, Strategy strategy,
                          std::optional<std::size_t> inrange_total,
                          const std::string &config_digest) {
  std::sort(runs.begin(), runs.end(),
            [](const RunState *a, const RunState *b) { return a->seed < b->seed; });

  using Getter = std::optional<double> (*)(const IterationRecord &);
  const std::vector<std::pair<const char *, Getter>> metrics = {
      {"mae_test", [](const IterationRecord &r) { return std::optional<double>(r.mae_test); }},
      {"mae_test_inrange", [](const IterationRecord &r) { return r.mae_test_inrange; }},
      {"tpr_test", [](const IterationRecord &r) { return r.tpr_test; }},
      {"fpr_test", [](const IterationRecord &r) { return r.fpr_test; }},
      {"tpr_held", [](const IterationRecord &r) { return r.tpr_held; }},
      {"fpr_held", [](const IterationRecord &r) { return r.fpr_held; }},
      {"n_inrange_train",
       [](const IterationRecord &r) {
         return r.n_inrange_train ? std::optional<double>(static_cast<double>(*r.n_inrange_train))
                                  : std::nullopt;
       }},
  };

  std::string s = "strategy,train_size,n_runs";
  for (const auto &[name, get] : metrics) {
    s += std::string(",") + name + "_mean," + name + "_sd";
  }
  s += ",inrange_pct_mean,inrange_pct_sd,config_digest\n";

  std::vector<std::size_t> sizes;
  for (const auto *run : runs) {
    for (const auto &r : run->history) sizes.push_back(r.train_size);
  }
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());

  for (std::size_t size : sizes) {
    std::vector<const IterationRecord *> rows;
    for (const auto *run : runs) {
      for (const auto &r : run->history) {
        if (r.train_size == size) rows.push_back(&r);
      }
    }
    s += std::string(to_string(strategy)) + ',' + std::to_string(size) + ',' +
         std::to_string(rows.size());
    for (const auto &[name, get] : metrics) {
      std::vector<double> xs;
      for (const auto *r : rows) {
        if (auto v = get(*r)) xs.push_back(*v);
      }
      const auto st = reduce(xs);
      s += ',' + cell(st.mean) + ',' + cell(st.sd);
    }
    std::vector<double> pct;
    if (inrange_total && *inrange_total > 0) {
      for (const auto *r : rows) {
        if (r->n_inrange_train) {
          pct.push_back(100.0 * static_cast<double>(*r->n_inrange_train) /
                        static_cast<double>(*inrange_total));
        }
      }
    }
    const auto st = reduce(pct);
    s += ',' + cell(st.mean) + ',' + cell(st.sd) + ',' + config_digest + '\n';
  }
  return s;
}

std::size_t write_aggregate(const ExperimentConfig &cfg, const Problem &problem,
                            const std::filesystem::path &dir) {
  const auto digest = cfg.digest();
  std::vector<RunState> states;
  for (auto seed : cfg.seeds) {
    const auto path = seed_checkpoint_path(dir, seed);
    if (!std::filesystem::exists(path)) continue;
    auto state = load_checkpoint(path);
    if (state.config_digest == digest && state.status == RunStatus::complete) {
      states.push_back(std::move(state));
    }
  }
  std::vector<const RunState *> runs;
  for (const auto &s : states) runs.push_back(&s);
  write_file_atomic(dir / "aggregate.csv",
                    aggregate_csv(runs, cfg.strategy, problem.inrange_total, digest));
  return runs.size();
}

NoiseGridResult noise_grid_search(const ExperimentConfig &cfg, const Problem &problem,
                                  const std::vector<double> &grid) {
  if (grid.empty()) throw ConfigError("grid", "needs at least one noise value");
  const auto &ds = problem.dataset;
  const std::size_t n_test = cfg.test_size(ds.size());
  if (n_test >= ds.size()) throw DataError("test set leaves nothing to train on");
  const std::size_t n_train = std::min(cfg.max_train, ds.size() - n_test);
  const auto pool = make_pool(ds, n_test, n_train, cfg.seeds.front());

  const Eigen::VectorXd labels = ds.labels();
  auto pick = [&](const IndexList &rows) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      y[static_cast<Eigen::Index>(i)] = labels[static_cast<Eigen::Index>(rows[i])];
    }
    return y;
  };
  const Eigen::MatrixXd x = gather(problem.descriptors, pool.train());
  const Eigen::VectorXd y = pick(pool.train());
  const Eigen::MatrixXd xv = gather(problem.descriptors, pool.test());
  const Eigen::VectorXd yv = pick(pool.test());

  gp::FitOptions fit;
  fit.max_rows = cfg.gp_cap;
  NoiseGridResult r;
  r.noise = grid;
  double best_mae = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    auto h = cfg.gp;
    h.noise = grid[k];
    double m = std::numeric_limits<double>::infinity();
    try {
      h.validate();
      if (cfg.reoptimize) {
        gp::OptimizeOptions opts;
        opts.restarts = cfg.restarts;
        opts.bounds_factor = cfg.bounds_factor;
        opts.seed = mix_seed(cfg.seeds.front(), 0);
        opts.fit = fit;
        h = gp::optimize_hyperparams(x, y, h, opts).hyper;
      }
      m = mae(gp::Model<double>(x, y, h, fit).predict(xv).mean, yv);
    } catch (const DataError &e) {
      throw ConfigError("grid", e.what());
    } catch (const IllConditionedError &) {
    }
    r.validation_mae.push_back(m);
    if (m < best_mae) {
      best_mae = m;
      r.best = grid[k];
    }
  }
  if (!std::isfinite(best_mae)) throw Error("every noise value failed to fit");
  return r;
}

std::string noise_grid_csv(const NoiseGridResult &r) {
  std::string s = "noise,validation_mae,best\n";
  for (std::size_t k = 0; k < r.noise.size(); ++k) {
    s += format_real(r.noise[k]) + ',' + format_real(r.validation_mae[k]) + ',' +
         (r.noise[k] == r.best ? "1" : "0") + '\n';
  }
  return s;
}

std::vector<double> AggregateTable::column(const std::string &name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw DataError("aggregate has no column " + name);
  const auto c = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  for (const auto &row : rows) {
    out.push_back(row[c].empty() ? std::numeric_limits<double>::quiet_NaN()
                                 : std::stod(row[c]));
  }
  return out;
}

AggregateTable parse_aggregate_csv(std::string_view text) {
  AggregateTable t;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (t.columns.empty()) {
      t.columns = std::move(fields);
      if (t.columns.size() < 3 || t.columns[0] != "strategy" || t.columns[1] != "train_size") {
        throw ParseError("not an aggregate table", line_no);
      }
      continue;
    }
    if (fields.size() != t.columns.size()) throw ParseError("wrong field count", line_no);
    auto s = parse_strategy(fields[0]);
    if (!s) throw ParseError("unknown strategy", line_no, fields[0]);
    if (t.rows.empty()) {
      t.strategy = *s;
      t.config_digest = fields.back();
    } else if (*s != t.strategy) {
      throw ParseError("mixed strategies", line_no);
    }
    t.rows.push_back(std::move(fields));
  }
  if (t.columns.empty()) throw ParseError("empty aggregate table", 0);
  return t;
}

std::string savings_csv(const AggregateTable &e, const AggregateTable &a) {
  const auto grid_e = e.column("train_size");
  const auto grid_a = a.column("train_size");
  if (grid_e != grid_a) {
    auto text = [](const std::vector<double> &g) {
      std::string s;
      for (double v : g) s += (s.empty() ? "" : " ") + format_real(v);
      return "{" + s + "}";
    };
    throw DataError("train-size grids differ: property_search " + text(grid_e) +
                    " vs random " + text(grid_a));
  }
  Curve ce{grid_e, e.column("inrange_pct_mean")};
  Curve ca{grid_a, a.column("inrange_pct_mean")};
  for (double v : ce.value) {
    if (std::isnan(v)) throw DataError("property_search aggregate has no in-range percentages");
  }
  for (double v : ca.value) {
    if (std::isnan(v)) throw DataError("random aggregate has no in-range percentages");
  }
  const auto pts = savings(ce, ca);
  std::string s =
      "train_size,inrange_pct_random,inrange_pct_property_search,extra_pct,"
      "e_train_size,computations_saved,relative_savings\n";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto &p = pts[i];
    s += format_real(p.train_size) + ',' + format_real(ca.value[i]) + ',' +
         format_real(ce.value[i]) + ',' + format_real(p.extra_pct) + ',' +
         cell(p.e_train_size) + ',' + cell(p.computations_saved) + ',' +
         cell(p.relative_savings) + '\n';
  }
  return s;
}

std::string savings_gnuplot(const std::filesystem::path &savings_file) {
  const auto f = savings_file.filename().string();
  return "set datafile separator ','\n"
         "set key top left\n"
         "set xlabel 'training set size'\n"
         "set ylabel 'in-range molecules acquired (%)'\n"
         "set y2label 'relative savings'\n"
         "set y2tics\n"
         "plot '" + f + "' using 1:2 skip 1 with linespoints title 'random', \\\n"
         "     '" + f + "' using 1:3 skip 1 with linespoints title 'property search', \\\n"
         "     '" + f + "' using 1:7 skip 1 axes x1y2 with lines title 'relative savings'\n";
}

}  // namespace alcurator
