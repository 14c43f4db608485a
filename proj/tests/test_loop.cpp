//
// Project al-curator - Copyright 2026 The al-curator Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <filesystem>
#include <fstream>
#include <set>

#include <doctest.h>

#include "alcurator/error.hpp"
#include "alcurator/loop.hpp"

using namespace alcurator;
namespace fs = std::filesystem;

namespace {

const char *kSmall = R"(
synth.pool_size = 200
synth.seed = 3
gp.length_scale = 1.5
gp.signal_variance = 1
gp.noise = 0.01
gp.restarts = 1
schedule.kind = const
schedule.n_const = 10
schedule.n_init = 10
max_train = 60
)";

// kSmall with the keys in `extra` replaced or added.
ExperimentConfig config(const std::string &extra = {}) {
  auto kv = parse_key_values(kSmall);
  for (const auto &[k, v] : parse_key_values(extra)) kv[k] = v;
  std::string text;
  for (const auto &[k, v] : kv) text += k + " = " + v + "\n";
  return parse_experiment_config(text);
}

fs::path scratch(const std::string &name) {
  auto dir = fs::temp_directory_path() / ("alc_loop_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void check_partition(const RunState &s) {
  std::set<Index> all;
  for (const auto *part : {&s.pool.heldout(), &s.pool.train(), &s.pool.test()}) {
    all.insert(part->begin(), part->end());
  }
  CHECK(all.size() == s.pool.total());
  CHECK(s.pool.heldout().size() + s.pool.train().size() + s.pool.test().size() ==
        s.pool.total());
}

}  // namespace

TEST_CASE("one constant-batch iteration moves ten molecules") {
  const auto cfg = config();
  const auto problem = load_problem(cfg);
  PrecomputedOracle oracle;
  const auto s0 = initial_state(problem, cfg, 0);
  CHECK(s0.pool.train().size() == 10);
  CHECK(s0.pool.test().size() == 40);
  const auto s1 = run_iteration(s0, problem, cfg, oracle);
  CHECK(s1.pool.train().size() == 20);
  CHECK(s1.pool.heldout().size() == s0.pool.heldout().size() - 10);
  CHECK(s1.pool.test() == s0.pool.test());
  REQUIRE(s1.history.size() == 1);
  CHECK(s1.history[0].train_size == 20);
  CHECK(s1.history[0].t == 0);
  CHECK(s1.history[0].mae_test >= 0.0);
  check_partition(s1);
  CHECK(run_iteration(s0, problem, cfg, oracle) == s1);
}

TEST_CASE("doubling batches give 20 then 30") {
  const auto cfg = config("schedule.kind = pow\n");
  const auto problem = load_problem(cfg);
  PrecomputedOracle oracle;
  auto s = initial_state(problem, cfg, 1);
  s = run_iteration(s, problem, cfg, oracle);
  s = run_iteration(s, problem, cfg, oracle);
  REQUIRE(s.history.size() == 2);
  CHECK(s.history[0].train_size == 20);
  CHECK(s.history[1].train_size == 30);
}

TEST_CASE("resuming from a checkpoint replays the uninterrupted run") {
  const auto cfg = config("strategy = property_search\ntarget.fraction = 0.3\n");
  const auto problem = load_problem(cfg);
  PrecomputedOracle oracle;
  const auto whole = run_to_completion(initial_state(problem, cfg, 5), problem, cfg, oracle);
  CHECK(whole.status == RunStatus::complete);

  auto part = run_to_completion(initial_state(problem, cfg, 5), problem, cfg, oracle, 1);
  REQUIRE(part.history.size() == 1);
  const auto dir = scratch("replay");
  save_checkpoint(part, dir / "c.json");
  const auto back = load_checkpoint(dir / "c.json");
  CHECK(back == part);
  const auto resumed = run_to_completion(back, problem, cfg, oracle);
  CHECK(resumed == whole);
  CHECK(checkpoint_json(resumed) == checkpoint_json(whole));
  fs::remove_all(dir);
}

TEST_CASE("runs stop at max_train with growing train sets") {
  const auto cfg = config("strategy = uncertainty\n");
  const auto problem = load_problem(cfg);
  PrecomputedOracle oracle;
  const auto s = run_to_completion(initial_state(problem, cfg, 2), problem, cfg, oracle);
  CHECK(s.status == RunStatus::complete);
  REQUIRE(s.history.size() == 5);
  for (std::size_t t = 0; t < s.history.size(); ++t) {
    CHECK(s.history[t].t == t);
    CHECK(s.history[t].train_size == 20 + 10 * t);
  }
  CHECK(s.pool.train().size() == 60);
  check_partition(s);
  CHECK_THROWS_AS(run_iteration(s, problem, cfg, oracle), Error);
}

TEST_CASE("every strategy starts from the same pool and keeps the test set") {
  const Strategy all[] = {Strategy::random, Strategy::uncertainty, Strategy::cluster,
                          Strategy::uncertainty_cluster, Strategy::property_search};
  std::optional<PoolState> first;
  for (auto s : all) {
    auto cfg = config("target.epsilon = -9\nmax_train = 30\n");
    cfg.strategy = s;
    const auto problem = load_problem(cfg);
    PrecomputedOracle oracle;
    const auto s0 = initial_state(problem, cfg, 9);
    if (!first) first = s0.pool;
    CHECK(s0.pool == *first);
    auto run = run_to_completion(s0, problem, cfg, oracle);
    CHECK(run.pool.test() == first->test());
    check_partition(run);
    std::set<Index> train(run.pool.train().begin(), run.pool.train().end());
    CHECK(train.size() == run.pool.train().size());
    for (std::size_t t = 1; t < run.history.size(); ++t) {
      CHECK(run.history[t].train_size > run.history[t - 1].train_size);
      CHECK(*run.history[t].n_inrange_train >= *run.history[t - 1].n_inrange_train);
    }
  }
}

TEST_CASE("checkpoint parsing rejects damaged documents") {
  const auto cfg = config();
  const auto problem = load_problem(cfg);
  PrecomputedOracle oracle;
  const auto s = run_iteration(initial_state(problem, cfg, 0), problem, cfg, oracle);
  const auto text = checkpoint_json(s);
  CHECK(parse_checkpoint(text) == s);
  CHECK_THROWS(parse_checkpoint("{"));
  CHECK_THROWS(parse_checkpoint(text.substr(0, text.size() / 2)));
}

TEST_CASE("deferred labels: request, resume and partial responses") {
  const auto dir = scratch("deferred");
  auto cfg = config("schedule.n_const = 3\noracle.mode = deferred\n"
                    "oracle.request = " + (dir / "req.xyz").string() +
                    "\noracle.response = " + (dir / "resp.tsv").string() + "\n");

  // Hide every held-out label so only the response file can supply them.
  const auto full = synth_dataset(cfg.synth, cfg.synth_seed);
  const auto pool = make_pool(full, cfg.test_size(full.size()), cfg.schedule.n_init, 0);
  auto mols = full.molecules();
  for (Index i : pool.heldout()) mols[i].label.reset();
  const auto problem = make_problem(Dataset(full.name(), mols, full.features()), cfg);

  auto oracle = make_oracle(cfg);
  const auto s0 = initial_state(problem, cfg, 0);
  REQUIRE(s0.pool == pool);
  const auto waiting = run_iteration(s0, problem, cfg, *oracle);
  CHECK(waiting.status == RunStatus::awaiting_labels);
  REQUIRE(waiting.pending.size() == 3);
  CHECK(waiting.pool == s0.pool);

  const auto requested = parse_multi_xyz(read_file(dir / "req.xyz"));
  REQUIRE(requested.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(requested[k].id == full[waiting.pending[k]].id);
    CHECK_FALSE(requested[k].label);
  }

  save_checkpoint(waiting, dir / "c.json");
  std::string partial;
  for (std::size_t k = 0; k < 2; ++k) {
    partial += requested[k].id + "\t" + std::to_string(*full[waiting.pending[k]].label) + "\n";
  }
  write_file_atomic(dir / "resp.tsv", partial);
  try {
    resume_pending(waiting, problem, cfg, *oracle);
    FAIL("no error");
  } catch (const OracleError &e) {
    CHECK(std::string(e.what()) == "response is missing labels for: " + requested[2].id);
  }
  CHECK(load_checkpoint(dir / "c.json") == waiting);

  write_file_atomic(dir / "resp.tsv",
                    partial + requested[2].id + "\t" +
                        std::to_string(*full[waiting.pending[2]].label) + "\n");
  const auto done = resume_pending(load_checkpoint(dir / "c.json"), problem, cfg, *oracle);
  CHECK(done.pool.train().size() == s0.pool.train().size() + 3);
  CHECK(done.pending.empty());
  CHECK(done.acquired_labels.size() == 3);
  CHECK(done.status == RunStatus::running);
  REQUIRE(done.history.size() == 1);

  fs::remove(dir / "resp.tsv");
  const auto again = run_iteration(done, problem, cfg, *oracle);
  CHECK_THROWS_AS(resume_pending(again, problem, cfg, *oracle), OracleError);
  fs::remove_all(dir);
}

TEST_CASE("an exhausted pool finishes without a request") {
  const auto dir = scratch("exhausted");
  auto cfg = config("n_test = 190\noracle.mode = deferred\n"
                    "oracle.request = " + (dir / "req.xyz").string() +
                    "\noracle.response = " + (dir / "resp.tsv").string() + "\n");
  const auto problem = load_problem(cfg);
  auto oracle = make_oracle(cfg);
  const auto s0 = initial_state(problem, cfg, 0);
  CHECK(s0.pool.heldout().empty());
  CHECK(s0.status == RunStatus::complete);
  auto forced = s0;
  forced.status = RunStatus::running;
  const auto end = run_to_completion(forced, problem, cfg, *oracle);
  CHECK(end.status == RunStatus::complete);
  CHECK(end.history.empty());
  CHECK_FALSE(fs::exists(dir / "req.xyz"));
  fs::remove_all(dir);
}

TEST_CASE("runs refuse checkpoints from another config") {
  const auto cfg = config();
  const auto problem = load_problem(cfg);
  PrecomputedOracle oracle;
  const auto s = initial_state(problem, cfg, 0);
  const auto other = config("gp.restarts = 3\n");
  CHECK_THROWS_AS(run_to_completion(s, problem, other, oracle), Error);
}
