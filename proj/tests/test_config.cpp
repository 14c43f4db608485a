//
// Project al-curator - Copyright 2026 The al-curator Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "alcurator/config.hpp"
#include "alcurator/error.hpp"

using namespace alcurator;

namespace {

std::string error_of(std::string_view text) {
  try {
    parse_experiment_config(text);
  } catch (const ConfigError &e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("key-value parsing") {
  const auto kv = parse_key_values("# comment\n a = 1 \n\nb=two words\n");
  CHECK(kv.size() == 2);
  CHECK(kv.at("a") == "1");
  CHECK(kv.at("b") == "two words");
  CHECK_THROWS_AS(parse_key_values("a = 1\na = 2\n"), ConfigError);
  CHECK(error_of("strategy = random\njunk\n") == "line 2: expected key = value");
}

TEST_CASE("a full config sets every field") {
  const auto c = parse_experiment_config(R"(
dataset.source = synthetic
synth.pool_size = 500
synth.label_mode = unimodal
synth.mode_centers = -9
synth.mode_widths = 0.7
synth.seed = 4
gp.length_scale = 1.5
gp.signal_variance = 1
gp.noise = 0.01
gp.reoptimize = false
strategy = property_search
schedule.kind = const
schedule.n_const = 50
schedule.n_init = 50
target.fraction = 0.3
seeds = 3, 1, 2
max_train = 300
n_test = 100
)");
  CHECK(c.synth.pool_size == 500);
  CHECK(c.synth.mode == LabelMode::unimodal);
  CHECK(c.synth.mode_centers == std::vector<double>{-9.0});
  CHECK(c.synth_seed == 4);
  CHECK(c.gp.length_scale == 1.5);
  CHECK_FALSE(c.reoptimize);
  CHECK(c.strategy == Strategy::property_search);
  CHECK(c.schedule.kind == ScheduleKind::constant);
  CHECK(c.schedule.n_const == 50);
  CHECK(*c.target_fraction == 0.3);
  CHECK(c.seeds == std::vector<std::uint64_t>{3, 1, 2});
  CHECK(c.max_train == 300);
  CHECK(c.test_size(500) == 100);
}

TEST_CASE("config errors name the key") {
  CHECK(error_of("strategy = property_search\n") ==
        "target.epsilon: required by strategy=property_search (or target.fraction)");
  CHECK(error_of("colour = blue\n") == "colour: unknown key");
  CHECK(error_of("strategy = greedy\n").starts_with("strategy:"));
  CHECK(error_of("gp.noise = lots\n").starts_with("gp.noise:"));
  CHECK(error_of("max_train = 5000\n").starts_with("max_train:"));
  CHECK(error_of("max_train = 10\n").starts_with("max_train:"));
  CHECK(error_of("seeds = 1, 1\n").starts_with("seeds:"));
  CHECK(error_of("target.epsilon = 1\ntarget.fraction = 0.3\n").starts_with("target.epsilon:"));
  CHECK(error_of("target.fraction = 1.5\n").starts_with("target.fraction:"));
  CHECK(error_of("dataset.source = xyz\n").starts_with("dataset.xyz:"));
  CHECK(error_of("synth.pool_size = 0\n").starts_with("synth"));
  CHECK(error_of("oracle.mode = deferred\noracle.request = a\noracle.response = b\nseeds = 1,2\n")
            .starts_with("seeds:"));
  CHECK(error_of("gp.bounds_factor = 1\n").starts_with("gp.bounds_factor:"));
}

TEST_CASE("the digest covers defaults and ignores seed order") {
  const auto base = parse_experiment_config("seeds = 1,2,3\n");
  CHECK(base.digest() == parse_experiment_config("seeds = 3, 1,2\n# same\n").digest());
  CHECK(base.digest() == parse_experiment_config("seeds = 1,2,3\ngp.noise = 1e-10\n").digest());
  CHECK(base.digest() != parse_experiment_config("seeds = 1,2\n").digest());
  CHECK(base.digest() != parse_experiment_config("seeds = 1,2,3\ngp.noise = 1e-9\n").digest());
  CHECK(base.canonical().find("gp.length_scale = ") != std::string::npos);
  CHECK(base.digest().size() == 16);
}

TEST_CASE("test-set defaults") {
  ExperimentConfig c;
  CHECK(c.test_size(2000) == 400);
  CHECK(c.test_size(20000) == 1000);
  c.source = DataSource::xyz;
  CHECK(c.test_size(2000) == 400);
  CHECK(c.test_size(130000) == 1000);
}

TEST_CASE("relative paths resolve against the config file") {
  const auto dir = std::filesystem::temp_directory_path() / "alc_config_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "c.conf") << "dataset.source = features\ndataset.features = f.tsv\n"
                                     "dataset.labels = /abs/l.tsv\n";
  }
  const auto c = load_experiment_config(dir / "c.conf");
  CHECK(c.features_path == dir / "f.tsv");
  CHECK(c.labels_path == "/abs/l.tsv");
  CHECK_THROWS_AS(load_experiment_config(dir / "missing.conf"), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("real lists") {
  CHECK(parse_real_list("1e-10, 0.05,2", "grid") == std::vector<double>{1e-10, 0.05, 2.0});
  CHECK_THROWS_AS(parse_real_list("0.1,x", "grid"), ConfigError);
}
