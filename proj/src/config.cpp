//
// Project al-curator - Copyright 2026 The al-curator Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "alcurator/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "alcurator/digest.hpp"
#include "alcurator/error.hpp"

namespace alcurator {
namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto end = s.find(',', pos);
    if (end == std::string_view::npos) end = s.size();
    auto item = trim(s.substr(pos, end - pos));
    if (!item.empty()) out.emplace_back(item);
    pos = end + 1;
  }
  return out;
}

double to_real(const std::string &key, std::string_view v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(key, "expected a real number, got '" + std::string(v) + "'");
  }
  return out;
}

std::uint64_t to_count(const std::string &key, std::string_view v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key, "expected a non-negative integer, got '" +
                               std::string(v) + "'");
  }
  return out;
}

bool to_bool(const std::string &key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key, "expected true or false");
}

std::string list_text(const std::vector<double> &xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    s += (i ? "," : "") + format_real(xs[i]);
  }
  return s;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no), "expected key = value");
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no), "empty key");
    if (!out.emplace(key, value).second) throw ConfigError(key, "duplicate key");
  }
  return out;
}

std::vector<double> parse_real_list(std::string_view text, const std::string &key) {
  std::vector<double> out;
  for (const auto &item : split_list(text)) out.push_back(to_real(key, item));
  return out;
}

ExperimentConfig parse_experiment_config(std::string_view text,
                                         const std::filesystem::path &base_dir) {
  ExperimentConfig c;
  auto path = [&](const std::string &v) {
    std::filesystem::path p(v);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };

  using Setter = std::function<void(const std::string &, const std::string &)>;
  const std::map<std::string, Setter, std::less<>> setters = {
      {"dataset.source",
       [&](auto &k, auto &v) {
         if (v == "synthetic") c.source = DataSource::synthetic;
         else if (v == "xyz") c.source = DataSource::xyz;
         else if (v == "features") c.source = DataSource::features;
         else throw ConfigError(k, "expected synthetic, xyz or features");
       }},
      {"dataset.name", [&](auto &, auto &v) { c.dataset_name = v; }},
      {"dataset.xyz", [&](auto &, auto &v) { c.xyz_path = path(v); }},
      {"dataset.labels", [&](auto &, auto &v) { c.labels_path = path(v); }},
      {"dataset.features", [&](auto &, auto &v) { c.features_path = path(v); }},
      {"synth.pool_size", [&](auto &k, auto &v) { c.synth.pool_size = to_count(k, v); }},
      {"synth.feature_dim", [&](auto &k, auto &v) { c.synth.feature_dim = to_count(k, v); }},
      {"synth.label_mode",
       [&](auto &k, auto &v) {
         if (v == "unimodal") c.synth.mode = LabelMode::unimodal;
         else if (v == "bimodal") c.synth.mode = LabelMode::bimodal;
         else throw ConfigError(k, "expected unimodal or bimodal");
       }},
      {"synth.mode_centers", [&](auto &k, auto &v) { c.synth.mode_centers = parse_real_list(v, k); }},
      {"synth.mode_widths", [&](auto &k, auto &v) { c.synth.mode_widths = parse_real_list(v, k); }},
      {"synth.noise_sd", [&](auto &k, auto &v) { c.synth.noise_sd = to_real(k, v); }},
      {"synth.cluster_separation", [&](auto &k, auto &v) { c.synth.cluster_separation = to_real(k, v); }},
      {"synth.seed", [&](auto &k, auto &v) { c.synth_seed = to_count(k, v); }},
      {"descriptor.elements",
       [&](auto &, auto &v) { c.descriptor.elements = split_list(v); }},
      {"descriptor.grid_min", [&](auto &k, auto &v) { c.descriptor.grid_min = to_real(k, v); }},
      {"descriptor.grid_max", [&](auto &k, auto &v) { c.descriptor.grid_max = to_real(k, v); }},
      {"descriptor.grid_n",
       [&](auto &k, auto &v) { c.descriptor.grid_n = static_cast<int>(to_count(k, v)); }},
      {"descriptor.sigma", [&](auto &k, auto &v) { c.descriptor.sigma = to_real(k, v); }},
      {"descriptor.weight_scale", [&](auto &k, auto &v) { c.descriptor.weight_scale = to_real(k, v); }},
      {"descriptor.cache", [&](auto &, auto &v) { c.descriptor_cache = path(v); }},
      {"gp.length_scale", [&](auto &k, auto &v) { c.gp.length_scale = to_real(k, v); }},
      {"gp.signal_variance", [&](auto &k, auto &v) { c.gp.signal_variance = to_real(k, v); }},
      {"gp.noise", [&](auto &k, auto &v) { c.gp.noise = to_real(k, v); }},
      {"gp.restarts", [&](auto &k, auto &v) { c.restarts = static_cast<int>(to_count(k, v)); }},
      {"gp.bounds_factor", [&](auto &k, auto &v) { c.bounds_factor = to_real(k, v); }},
      {"gp.reoptimize", [&](auto &k, auto &v) { c.reoptimize = to_bool(k, v); }},
      {"gp.max_rows", [&](auto &k, auto &v) { c.gp_cap = to_count(k, v); }},
      {"strategy",
       [&](auto &k, auto &v) {
         auto s = parse_strategy(v);
         if (!s) {
           throw ConfigError(k, "expected random, uncertainty, cluster, "
                                "uncertainty_cluster or property_search");
         }
         c.strategy = *s;
       }},
      {"schedule.kind",
       [&](auto &k, auto &v) {
         if (v == "pow") c.schedule.kind = ScheduleKind::pow;
         else if (v == "const") c.schedule.kind = ScheduleKind::constant;
         else throw ConfigError(k, "expected pow or const");
       }},
      {"schedule.n_const", [&](auto &k, auto &v) { c.schedule.n_const = to_count(k, v); }},
      {"schedule.n_init", [&](auto &k, auto &v) { c.schedule.n_init = to_count(k, v); }},
      {"schedule.pow_variant",
       [&](auto &k, auto &v) {
         if (v == "literal") c.schedule.pow_variant = PowVariant::literal;
         else if (v == "doubling_total") c.schedule.pow_variant = PowVariant::doubling_total;
         else throw ConfigError(k, "expected literal or doubling_total");
       }},
      {"target.epsilon", [&](auto &k, auto &v) { c.target_epsilon = to_real(k, v); }},
      {"target.fraction", [&](auto &k, auto &v) { c.target_fraction = to_real(k, v); }},
      {"n_test", [&](auto &k, auto &v) { c.n_test = to_count(k, v); }},
      {"seeds",
       [&](auto &k, auto &v) {
         c.seeds.clear();
         for (const auto &item : split_list(v)) c.seeds.push_back(to_count(k, item));
       }},
      {"max_train", [&](auto &k, auto &v) { c.max_train = to_count(k, v); }},
      {"stop.all_inrange", [&](auto &k, auto &v) { c.stop_when_all_inrange = to_bool(k, v); }},
      {"oracle.mode",
       [&](auto &k, auto &v) {
         if (v == "precomputed") c.oracle = OracleMode::precomputed;
         else if (v == "deferred") c.oracle = OracleMode::deferred;
         else throw ConfigError(k, "expected precomputed or deferred");
       }},
      {"oracle.request", [&](auto &, auto &v) { c.request_path = path(v); }},
      {"oracle.response", [&](auto &, auto &v) { c.response_path = path(v); }},
  };

  for (const auto &[key, value] : parse_key_values(text)) {
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(key, "unknown key");
    it->second(key, value);
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "cannot read config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str(), path.parent_path());
}

void ExperimentConfig::validate() const {
  auto wrap = [](const char *key, auto &&fn) {
    try {
      fn();
    } catch (const ConfigError &) {
      throw;
    } catch (const Error &e) {
      throw ConfigError(key, e.what());
    }
  };
  switch (source) {
  case DataSource::synthetic: wrap("synth", [&] { synth.validate(); }); break;
  case DataSource::xyz:
    if (xyz_path.empty()) throw ConfigError("dataset.xyz", "required by dataset.source=xyz");
    wrap("descriptor", [&] { descriptor.validate(); });
    break;
  case DataSource::features:
    if (features_path.empty()) {
      throw ConfigError("dataset.features", "required by dataset.source=features");
    }
    break;
  }
  wrap("gp", [&] { gp.validate(); });
  if (!(bounds_factor > 1.0)) throw ConfigError("gp.bounds_factor", "must exceed 1");
  if (gp_cap < 1) throw ConfigError("gp.max_rows", "must be positive");
  wrap("schedule", [&] { schedule.validate(); });
  if (seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    for (std::size_t j = i + 1; j < seeds.size(); ++j) {
      if (seeds[i] == seeds[j]) throw ConfigError("seeds", "repeats " + std::to_string(seeds[i]));
    }
  }
  if (max_train > gp_cap) {
    throw ConfigError("max_train", "exceeds the exact-GP cap gp.max_rows=" +
                                       std::to_string(gp_cap));
  }
  if (max_train < schedule.n_init) {
    throw ConfigError("max_train", "is smaller than schedule.n_init");
  }
  if (target_epsilon && target_fraction) {
    throw ConfigError("target.epsilon", "give either target.epsilon or target.fraction");
  }
  if (target_fraction && !(*target_fraction > 0.0 && *target_fraction < 1.0)) {
    throw ConfigError("target.fraction", "must lie in (0, 1)");
  }
  if (strategy == Strategy::property_search && !has_target()) {
    throw ConfigError("target.epsilon",
                      "required by strategy=property_search (or target.fraction)");
  }
  if (oracle == OracleMode::deferred) {
    if (request_path.empty()) throw ConfigError("oracle.request", "required by oracle.mode=deferred");
    if (response_path.empty()) throw ConfigError("oracle.response", "required by oracle.mode=deferred");
    if (seeds.size() != 1) throw ConfigError("seeds", "oracle.mode=deferred takes exactly one seed");
  }
}

std::string ExperimentConfig::canonical() const {
  std::map<std::string, std::string> kv;
  const char *sources[] = {"synthetic", "xyz", "features"};
  kv["dataset.source"] = sources[static_cast<int>(source)];
  kv["dataset.name"] = dataset_name;
  kv["dataset.xyz"] = xyz_path.string();
  kv["dataset.labels"] = labels_path.string();
  kv["dataset.features"] = features_path.string();
  if (source == DataSource::synthetic) {
    kv["synth.pool_size"] = std::to_string(synth.pool_size);
    kv["synth.feature_dim"] = std::to_string(synth.feature_dim);
    kv["synth.label_mode"] = synth.mode == LabelMode::bimodal ? "bimodal" : "unimodal";
    kv["synth.mode_centers"] = list_text(synth.mode_centers);
    kv["synth.mode_widths"] = list_text(synth.mode_widths);
    kv["synth.noise_sd"] = format_real(synth.noise_sd);
    kv["synth.cluster_separation"] = format_real(synth.cluster_separation);
    kv["synth.seed"] = std::to_string(synth_seed);
  }
  if (source == DataSource::xyz) {
    std::string elems;
    for (const auto &e : descriptor.elements) elems += (elems.empty() ? "" : ",") + e;
    kv["descriptor.elements"] = elems;
    kv["descriptor.grid_min"] = format_real(descriptor.grid_min);
    kv["descriptor.grid_max"] = format_real(descriptor.grid_max);
    kv["descriptor.grid_n"] = std::to_string(descriptor.grid_n);
    kv["descriptor.sigma"] = format_real(descriptor.sigma);
    kv["descriptor.weight_scale"] = format_real(descriptor.weight_scale);
  }
  kv["gp.length_scale"] = format_real(gp.length_scale);
  kv["gp.signal_variance"] = format_real(gp.signal_variance);
  kv["gp.noise"] = format_real(gp.noise);
  kv["gp.restarts"] = std::to_string(restarts);
  kv["gp.bounds_factor"] = format_real(bounds_factor);
  kv["gp.reoptimize"] = reoptimize ? "true" : "false";
  kv["gp.max_rows"] = std::to_string(gp_cap);
  kv["strategy"] = std::string(to_string(strategy));
  kv["schedule.kind"] = schedule.kind == ScheduleKind::pow ? "pow" : "const";
  kv["schedule.n_const"] = std::to_string(schedule.n_const);
  kv["schedule.n_init"] = std::to_string(schedule.n_init);
  kv["schedule.pow_variant"] =
      schedule.pow_variant == PowVariant::literal ? "literal" : "doubling_total";
  if (target_epsilon) kv["target.epsilon"] = format_real(*target_epsilon);
  if (target_fraction) kv["target.fraction"] = format_real(*target_fraction);
  if (n_test) kv["n_test"] = std::to_string(*n_test);
  auto sorted_seeds = seeds;
  std::sort(sorted_seeds.begin(), sorted_seeds.end());
  std::string seed_text;
  for (auto s : sorted_seeds) seed_text += (seed_text.empty() ? "" : ",") + std::to_string(s);
  kv["seeds"] = seed_text;
  kv["max_train"] = std::to_string(max_train);
  kv["stop.all_inrange"] = stop_when_all_inrange ? "true" : "false";
  kv["oracle.mode"] = oracle == OracleMode::deferred ? "deferred" : "precomputed";

  std::string out;
  for (const auto &[k, v] : kv) out += k + " = " + v + '\n';
  return out;
}

std::string ExperimentConfig::digest() const { return hex_digest(fnv1a(canonical())); }

std::size_t ExperimentConfig::test_size(std::size_t pool) const {
  if (n_test) return *n_test;
  if (source != DataSource::xyz && pool <= 5000) return pool / 5;
  return std::min<std::size_t>(1000, pool / 5);
}

}  // namespace alcurator
