//
// Project al-curator - Copyright 2026 The al-curator Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "alcurator/loop.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "alcurator/acquire.hpp"
#include "alcurator/descriptor.hpp"
#include "alcurator/digest.hpp"
#include "alcurator/error.hpp"

namespace alcurator {
namespace {

constexpr const char *kCheckpointFormat = "al-curator-checkpoint/1";
constexpr std::uint64_t kInitialSalt = 0xffffffffULL;

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd &x, const IndexList &rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

std::optional<double> known_label(const RunState &state, const Dataset &ds, Index i) {
  if (ds[i].label) return ds[i].label;
  auto it = state.acquired_labels.find(ds[i].id);
  if (it != state.acquired_labels.end()) return it->second;
  return std::nullopt;
}

Eigen::VectorXd labels_of(const RunState &state, const Dataset &ds, const IndexList &rows) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto label = known_label(state, ds, rows[i]);
    if (!label) throw DataError("unlabeled molecule: " + ds[rows[i]].id);
    y[static_cast<Eigen::Index>(i)] = *label;
  }
  return y;
}

gp::FitOptions fit_options(const ExperimentConfig &cfg) {
  gp::FitOptions opts;
  opts.max_rows = cfg.gp_cap;
  return opts;
}

gp::Hyperparams<double> optimized(const Problem &problem, const RunState &state,
                                  const ExperimentConfig &cfg, std::uint64_t seed) {
  gp::OptimizeOptions opts;
  opts.restarts = cfg.restarts;
  opts.bounds_factor = cfg.bounds_factor;
  opts.seed = seed;
  opts.fit = fit_options(cfg);
  const auto &train = state.pool.train();
  return gp::optimize_hyperparams(gather_rows(problem.descriptors, train),
                                  labels_of(state, problem.dataset, train), cfg.gp, opts)
      .hyper;
}

gp::Model<double> fit_train(const Problem &problem, const RunState &state,
                            const ExperimentConfig &cfg) {
  const auto &train = state.pool.train();
  return gp::Model<double>(gather_rows(problem.descriptors, train),
                           labels_of(state, problem.dataset, train), state.hyper,
                           fit_options(cfg));
}

IterationRecord evaluate(const gp::Model<double> &model, const Problem &problem,
                         const RunState &state) {
  const auto &ds = problem.dataset;
  const auto &pool = state.pool;
  IterationRecord r;
  r.t = state.history.size();
  r.train_size = pool.train().size();
  r.seed = state.seed;

  const Eigen::VectorXd test_truth = labels_of(state, ds, pool.test());
  const Eigen::VectorXd test_pred =
      model.predict(gather_rows(problem.descriptors, pool.test())).mean;
  r.mae_test = mae(test_pred, test_truth);
  if (!problem.target) return r;

  const auto &target = *problem.target;
  std::vector<Eigen::Index> inrange;
  for (Eigen::Index i = 0; i < test_truth.size(); ++i) {
    if (target.in_range(test_truth[i])) inrange.push_back(i);
  }
  if (!inrange.empty()) {
    r.mae_test_inrange = mae(test_pred(inrange), test_truth(inrange));
  }
  const auto test_rates = classification_rates(test_pred, test_truth, target);
  r.tpr_test = test_rates.tpr;
  r.fpr_test = test_rates.fpr;

  const auto &held = pool.heldout();
  const bool held_known = std::all_of(held.begin(), held.end(), [&](Index i) {
    return known_label(state, ds, i).has_value();
  });
  if (!held.empty() && held_known) {
    const Eigen::VectorXd held_pred =
        model.predict(gather_rows(problem.descriptors, held)).mean;
    const auto rates = classification_rates(held_pred, labels_of(state, ds, held), target);
    r.tpr_held = rates.tpr;
    r.fpr_held = rates.fpr;
  }

  std::size_t n_in = 0;
  for (Index i : pool.train()) {
    if (target.in_range(*known_label(state, ds, i))) ++n_in;
  }
  r.n_inrange_train = n_in;
  return r;
}

bool should_stop(const RunState &state, const Problem &problem,
                 const ExperimentConfig &cfg) {
  const auto &pool = state.pool;
  if (pool.train().size() >= cfg.max_train || pool.heldout().empty()) return true;
  if (problem.target && cfg.stop_when_all_inrange) {
    bool any_left = false;
    for (Index i : pool.heldout()) {
      auto label = known_label(state, problem.dataset, i);
      if (!label || problem.target->in_range(*label)) {
        any_left = true;
        break;
      }
    }
    if (!any_left) return true;
  }
  return false;
}

RunState finish_iteration(RunState next, const IndexList &batch,
                          const std::vector<double> &labels, const Problem &problem,
                          const ExperimentConfig &cfg) {
  const auto &ds = problem.dataset;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    if (!ds[batch[k]].label) next.acquired_labels[ds[batch[k]].id] = labels[k];
  }
  const std::uint64_t digest = next.rng_digest();
  next.pool = next.pool.acquire(batch);
  next.pending.clear();
  if (cfg.reoptimize) next.hyper = optimized(problem, next, cfg, mix_seed(digest, 1));
  const auto model = fit_train(problem, next, cfg);
  auto record = evaluate(model, problem, next);
  record.strategy = cfg.strategy;
  next.history.push_back(std::move(record));
  next.status = should_stop(next, problem, cfg) ? RunStatus::complete : RunStatus::running;
  return next;
}

void check_resumable(const RunState &state, const ExperimentConfig &cfg) {
  if (state.config_digest != cfg.digest()) {
    throw Error("checkpoint was written for config " + state.config_digest +
                ", not " + cfg.digest());
  }
}

}  // namespace

std::string_view to_string(RunStatus s) noexcept {
  switch (s) {
  case RunStatus::running: return "running";
  case RunStatus::awaiting_labels: return "awaiting_labels";
  case RunStatus::complete: return "complete";
  }
  return "running";
}

std::uint64_t RunState::rng_digest() const noexcept {
  return mix_seed(seed, history.size());
}

// -- problem setup ---------------------------------------------------------------

Problem make_problem(Dataset ds, const ExperimentConfig &cfg, unsigned threads) {
  Problem p;
  const bool cache = !cfg.descriptor_cache.empty() && !ds.features();
  std::optional<DescriptorMatrix> desc;
  if (cache) {
    desc = read_descriptor_cache(cfg.descriptor_cache.string(), ds, cfg.descriptor.hash());
  }
  if (!desc) {
    desc = dataset_descriptors(ds, cfg.descriptor, threads);
    if (cache) write_descriptor_cache(cfg.descriptor_cache.string(), ds, *desc);
  }
  p.descriptors = std::move(desc->rows);

  if (cfg.target_epsilon) {
    p.target = TargetSpec{*cfg.target_epsilon};
  } else if (cfg.target_fraction) {
    p.target = select_epsilon(ds, *cfg.target_fraction);
  }
  if (p.target && ds.fully_labeled()) {
    std::size_t n = 0;
    for (const auto &m : ds.molecules()) n += p.target->in_range(*m.label) ? 1 : 0;
    p.inrange_total = n;
  }
  p.dataset = std::move(ds);
  return p;
}

Problem load_problem(const ExperimentConfig &cfg, unsigned threads) {
  Dataset ds;
  switch (cfg.source) {
  case DataSource::synthetic:
    ds = synth_dataset(cfg.synth, cfg.synth_seed);
    break;
  case DataSource::xyz:
    ds = Dataset(cfg.dataset_name.empty() ? cfg.xyz_path.stem().string() : cfg.dataset_name,
                 parse_multi_xyz(read_file(cfg.xyz_path)));
    break;
  case DataSource::features:
    ds = parse_feature_table(read_file(cfg.features_path),
                             cfg.dataset_name.empty() ? cfg.features_path.stem().string()
                                                      : cfg.dataset_name);
    break;
  }
  if (!cfg.labels_path.empty()) {
    ds = attach_labels(ds, parse_label_table(read_file(cfg.labels_path)));
  }
  return make_problem(std::move(ds), cfg, threads);
}

// -- oracles ---------------------------------------------------------------------

std::optional<std::vector<double>>
PrecomputedOracle::request(const Dataset &ds, std::span<const Index> indices) {
  return collect(ds, indices);
}

std::vector<double> PrecomputedOracle::collect(const Dataset &ds,
                                               std::span<const Index> indices) {
  std::vector<double> out;
  std::string missing;
  for (Index i : indices) {
    if (ds[i].label) {
      out.push_back(*ds[i].label);
    } else {
      missing += (missing.empty() ? "" : ", ") + ds[i].id;
    }
  }
  if (!missing.empty()) throw OracleError("no precomputed label for: " + missing);
  return out;
}

DeferredOracle::DeferredOracle(std::filesystem::path request_file,
                               std::filesystem::path response_file)
    : request_(std::move(request_file)), response_(std::move(response_file)) {}

std::optional<std::vector<double>>
DeferredOracle::request(const Dataset &ds, std::span<const Index> indices) {
  std::string text;
  for (Index i : indices) {
    Molecule m = ds[i];
    m.label.reset();
    text += write_xyz(m);
  }
  write_file_atomic(request_, text);
  return std::nullopt;
}

std::vector<double> DeferredOracle::collect(const Dataset &ds,
                                            std::span<const Index> indices) {
  if (!std::filesystem::exists(response_)) {
    throw OracleError("response file " + response_.string() + " does not exist");
  }
  const auto table = parse_label_table(read_file(response_));
  std::vector<double> out;
  std::string missing;
  for (Index i : indices) {
    auto it = table.find(ds[i].id);
    if (it == table.end()) {
      missing += (missing.empty() ? "" : ", ") + ds[i].id;
    } else {
      out.push_back(it->second);
    }
  }
  if (!missing.empty()) throw OracleError("response is missing labels for: " + missing);
  return out;
}

std::unique_ptr<LabelOracle> make_oracle(const ExperimentConfig &cfg) {
  if (cfg.oracle == OracleMode::deferred) {
    return std::make_unique<DeferredOracle>(cfg.request_path, cfg.response_path);
  }
  return std::make_unique<PrecomputedOracle>();
}

// -- iteration -------------------------------------------------------------------

RunState initial_state(const Problem &problem, const ExperimentConfig &cfg,
                       std::uint64_t seed) {
  RunState s;
  s.seed = seed;
  s.config_digest = cfg.digest();
  s.pool = make_pool(problem.dataset, cfg.test_size(problem.dataset.size()),
                     cfg.schedule.n_init, seed);
  s.hyper = optimized(problem, s, cfg, mix_seed(seed, kInitialSalt));
  s.status = s.pool.heldout().empty() ? RunStatus::complete : RunStatus::running;
  return s;
}

RunState run_iteration(const RunState &state, const Problem &problem,
                       const ExperimentConfig &cfg, LabelOracle &oracle) {
  if (state.status != RunStatus::running) {
    throw Error(std::string("run_iteration on a run that is ") +
                std::string(to_string(state.status)));
  }
  const auto &held = state.pool.heldout();
  if (held.empty()) {
    RunState done = state;
    done.status = RunStatus::complete;
    return done;
  }

  const auto model = fit_train(problem, state, cfg);
  AcquisitionContext ctx;
  ctx.descriptors = gather_rows(problem.descriptors, held);
  auto pred = model.predict(ctx.descriptors);
  ctx.mean = std::move(pred.mean);
  ctx.variance = std::move(pred.variance);
  ctx.target = problem.target;
  ctx.seed = state.rng_digest();
  ctx.t = state.iteration();

  const std::size_t n_b =
      std::min({batch_size(cfg.schedule, state.iteration()), held.size(),
                max_batch(cfg.strategy, held.size())});
  IndexList batch;
  for (Index pos : acquire(cfg.strategy, ctx, n_b)) batch.push_back(held[pos]);

  RunState next = state;
  if (batch.empty()) {
    next.status = RunStatus::complete;
    return next;
  }
  auto labels = oracle.request(problem.dataset, batch);
  if (!labels) {
    next.pending = std::move(batch);
    next.status = RunStatus::awaiting_labels;
    return next;
  }
  return finish_iteration(std::move(next), batch, *labels, problem, cfg);
}

RunState resume_pending(const RunState &state, const Problem &problem,
                        const ExperimentConfig &cfg, LabelOracle &oracle) {
  if (state.status != RunStatus::awaiting_labels) {
    throw Error("run is not waiting for labels");
  }
  check_resumable(state, cfg);
  const auto labels = oracle.collect(problem.dataset, state.pending);
  return finish_iteration(state, state.pending, labels, problem, cfg);
}

RunState run_to_completion(RunState state, const Problem &problem,
                           const ExperimentConfig &cfg, LabelOracle &oracle,
                           std::optional<std::size_t> max_iterations) {
  check_resumable(state, cfg);
  std::size_t done = 0;
  if (state.status == RunStatus::awaiting_labels) {
    state = resume_pending(state, problem, cfg, oracle);
    ++done;
  }
  while (state.status == RunStatus::running && (!max_iterations || done < *max_iterations)) {
    state = run_iteration(state, problem, cfg, oracle);
    ++done;
  }
  return state;
}

// -- checkpoints -----------------------------------------------------------------

namespace {

using nlohmann::json;

template <typename T>
json optional_json(const std::optional<T> &v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> json_optional(const json &j) {
  if (j.is_null()) return std::nullopt;
  return j.get<T>();
}

}  // namespace

std::string checkpoint_json(const RunState &s) {
  json j;
  j["format"] = kCheckpointFormat;
  j["config_digest"] = s.config_digest;
  j["seed"] = s.seed;
  j["t"] = s.iteration();
  j["rng_digest"] = hex_digest(s.rng_digest());
  j["status"] = std::string(to_string(s.status));
  j["pool"] = {{"size", s.pool.total()},
               {"heldout", s.pool.heldout()},
               {"train", s.pool.train()},
               {"test", s.pool.test()}};
  j["hyper"] = {{"length_scale", s.hyper.length_scale},
                {"signal_variance", s.hyper.signal_variance},
                {"noise", s.hyper.noise}};
  j["acquired_labels"] = s.acquired_labels;
  j["pending"] = s.pending;
  json hist = json::array();
  for (const auto &r : s.history) {
    hist.push_back({{"t", r.t},
                    {"train_size", r.train_size},
                    {"mae_test", r.mae_test},
                    {"mae_test_inrange", optional_json(r.mae_test_inrange)},
                    {"tpr_test", optional_json(r.tpr_test)},
                    {"fpr_test", optional_json(r.fpr_test)},
                    {"tpr_held", optional_json(r.tpr_held)},
                    {"fpr_held", optional_json(r.fpr_held)},
                    {"n_inrange_train", optional_json(r.n_inrange_train)},
                    {"seed", r.seed},
                    {"strategy", std::string(to_string(r.strategy))}});
  }
  j["history"] = std::move(hist);
  return j.dump(1) + '\n';
}

RunState parse_checkpoint(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.at("format") != kCheckpointFormat) throw DataError("unknown checkpoint format");
    RunState s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.config_digest = j.at("config_digest").get<std::string>();
    const auto &p = j.at("pool");
    s.pool = PoolState(p.at("size").get<std::size_t>(), p.at("heldout").get<IndexList>(),
                       p.at("train").get<IndexList>(), p.at("test").get<IndexList>());
    const auto &h = j.at("hyper");
    s.hyper.length_scale = h.at("length_scale").get<double>();
    s.hyper.signal_variance = h.at("signal_variance").get<double>();
    s.hyper.noise = h.at("noise").get<double>();
    s.acquired_labels = j.at("acquired_labels").get<std::map<std::string, double>>();
    s.pending = j.at("pending").get<IndexList>();
    for (const auto &r : j.at("history")) {
      IterationRecord rec;
      rec.t = r.at("t").get<std::size_t>();
      rec.train_size = r.at("train_size").get<std::size_t>();
      rec.mae_test = r.at("mae_test").get<double>();
      rec.mae_test_inrange = json_optional<double>(r.at("mae_test_inrange"));
      rec.tpr_test = json_optional<double>(r.at("tpr_test"));
      rec.fpr_test = json_optional<double>(r.at("fpr_test"));
      rec.tpr_held = json_optional<double>(r.at("tpr_held"));
      rec.fpr_held = json_optional<double>(r.at("fpr_held"));
      rec.n_inrange_train = json_optional<std::size_t>(r.at("n_inrange_train"));
      rec.seed = r.at("seed").get<std::uint64_t>();
      auto strategy = parse_strategy(r.at("strategy").get<std::string>());
      if (!strategy) throw DataError("unknown strategy in checkpoint history");
      rec.strategy = *strategy;
      s.history.push_back(rec);
    }
    const auto status = j.at("status").get<std::string>();
    if (status == "running") s.status = RunStatus::running;
    else if (status == "awaiting_labels") s.status = RunStatus::awaiting_labels;
    else if (status == "complete") s.status = RunStatus::complete;
    else throw DataError("unknown checkpoint status " + status);
    if (j.at("t").get<std::size_t>() != s.history.size()) {
      throw DataError("checkpoint iteration count disagrees with its history");
    }
    if (j.at("rng_digest").get<std::string>() != hex_digest(s.rng_digest())) {
      throw DataError("checkpoint rng digest does not match its seed and iteration");
    }
    return s;
  } catch (const json::exception &e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const RunState &state, const std::filesystem::path &path) {
  write_file_atomic(path, checkpoint_json(state));
}

RunState load_checkpoint(const std::filesystem::path &path) {
  return parse_checkpoint(read_file(path));
}

void write_file_atomic(const std::filesystem::path &path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace alcurator
