//
// Project al-curator - Copyright 2026 The al-curator Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "alcurator/moldata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "alcurator/digest.hpp"
#include "alcurator/elements.hpp"
#include "alcurator/error.hpp"

namespace alcurator {
namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = end + 1;
  }
  return lines;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    auto j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<double> to_real(std::string_view s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<long long> to_integer(std::string_view s) {
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

// Parses the block starting at lines[pos]; `pos` is advanced past it.
Molecule parse_block(const std::vector<std::string_view> &lines,
                     std::size_t &pos) {
  const std::size_t count_line = pos + 1;
  const auto count = to_integer(trim(lines[pos]));
  if (!count || *count < 1) {
    throw ParseError("malformed atom count", count_line,
                     std::string(trim(lines[pos])));
  }
  if (pos + 1 >= lines.size()) {
    throw ParseError("missing comment line", count_line + 1);
  }

  Molecule mol;
  for (auto tok : split_ws(lines[pos + 1])) {
    if (tok.starts_with("id=")) {
      mol.id = std::string(tok.substr(3));
    } else if (tok.starts_with("label=")) {
      auto v = to_real(tok.substr(6));
      if (!v || !std::isfinite(*v)) {
        throw ParseError("malformed label", count_line + 1, std::string(tok));
      }
      mol.label = *v;
    }
  }

  const auto n = static_cast<std::size_t>(*count);
  mol.species.reserve(n);
  mol.positions.reserve(n);
  for (std::size_t a = 0; a < n; ++a) {
    const std::size_t li = pos + 2 + a;
    if (li >= lines.size()) {
      throw ParseError("expected " + std::to_string(n) + " atoms, got " +
                           std::to_string(a),
                       li + 1);
    }
    auto tok = split_ws(lines[li]);
    if (tok.size() < 4) throw ParseError("malformed atom line", li + 1);
    if (!is_element(tok[0])) {
      throw ParseError("unknown element", li + 1, std::string(tok[0]));
    }
    Eigen::Vector3d r;
    for (int k = 0; k < 3; ++k) {
      auto v = to_real(tok[1 + k]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError("non-numeric coordinate", li + 1,
                         std::string(tok[1 + k]));
      }
      r[k] = *v;
    }
    mol.species.emplace_back(tok[0]);
    mol.positions.push_back(r);
  }
  pos += 2 + n;
  return mol;
}

}  // namespace

void validate(const Molecule &mol) {
  if (mol.species.empty()) throw DataError("molecule '" + mol.id + "' has no atoms");
  if (mol.species.size() != mol.positions.size()) {
    throw DataError("molecule '" + mol.id + "': species/positions mismatch");
  }
  for (const auto &r : mol.positions) {
    if (!r.allFinite()) {
      throw DataError("molecule '" + mol.id + "': non-finite coordinate");
    }
  }
}

// -- Dataset -----------------------------------------------------------------

Dataset::Dataset(std::string name, std::vector<Molecule> molecules,
                 std::optional<Eigen::MatrixXd> features)
    : name_(std::move(name)), molecules_(std::move(molecules)),
      features_(std::move(features)) {
  for (Index i = 0; i < molecules_.size(); ++i) {
    validate(molecules_[i]);
    if (!by_id_.emplace(molecules_[i].id, i).second) {
      throw DataError("duplicate molecule id: " + molecules_[i].id);
    }
  }
  if (features_ && static_cast<std::size_t>(features_->rows()) != size()) {
    throw DataError("feature rows do not match molecule count");
  }
}

std::optional<Index> Dataset::find(std::string_view id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

bool Dataset::fully_labeled() const {
  return std::all_of(molecules_.begin(), molecules_.end(),
                     [](const Molecule &m) { return m.label.has_value(); });
}

Eigen::VectorXd Dataset::labels() const {
  Eigen::VectorXd y(static_cast<Eigen::Index>(size()));
  for (Index i = 0; i < size(); ++i) {
    if (!molecules_[i].label) {
      throw DataError("unlabeled molecule: " + molecules_[i].id);
    }
    y[static_cast<Eigen::Index>(i)] = *molecules_[i].label;
  }
  return y;
}

// -- PoolState ---------------------------------------------------------------

PoolState::PoolState(std::size_t n, IndexList heldout, IndexList train,
                     IndexList test)
    : n_(n), heldout_(std::move(heldout)), train_(std::move(train)),
      test_(std::move(test)) {
  std::sort(heldout_.begin(), heldout_.end());
  std::sort(test_.begin(), test_.end());
  if (heldout_.size() + train_.size() + test_.size() != n_) {
    throw DataError("pool partition does not cover the dataset");
  }
  std::vector<char> seen(n_, 0);
  for (const auto *set : {&heldout_, &train_, &test_}) {
    for (Index i : *set) {
      if (i >= n_ || seen[i]) throw DataError("pool partition is not disjoint");
      seen[i] = 1;
    }
  }
}

PoolState PoolState::acquire(std::span<const Index> indices) const {
  std::vector<char> take(n_, 0);
  for (Index i : indices) {
    if (i >= n_ || !std::binary_search(heldout_.begin(), heldout_.end(), i) ||
        take[i]) {
      throw DataError("index " + std::to_string(i) + " is not held out");
    }
    take[i] = 1;
  }
  PoolState next = *this;
  std::erase_if(next.heldout_, [&](Index i) { return take[i] != 0; });
  next.train_.insert(next.train_.end(), indices.begin(), indices.end());
  return next;
}

// -- text formats --------------------------------------------------------------

Molecule parse_xyz(std::string_view text) {
  auto lines = split_lines(text);
  std::size_t pos = 0;
  while (pos < lines.size() && trim(lines[pos]).empty()) ++pos;
  if (pos >= lines.size()) throw ParseError("empty XYZ input", 1);
  auto mol = parse_block(lines, pos);
  for (; pos < lines.size(); ++pos) {
    if (!trim(lines[pos]).empty()) {
      throw ParseError("trailing content after XYZ block", pos + 1);
    }
  }
  return mol;
}

std::vector<Molecule> parse_multi_xyz(std::string_view text) {
  auto lines = split_lines(text);
  std::vector<Molecule> out;
  std::size_t pos = 0;
  while (true) {
    while (pos < lines.size() && trim(lines[pos]).empty()) ++pos;
    if (pos >= lines.size()) break;
    auto mol = parse_block(lines, pos);
    if (mol.id.empty()) mol.id = "mol" + std::to_string(out.size());
    out.push_back(std::move(mol));
  }
  return out;
}

std::string write_xyz(const Molecule &mol) {
  std::string s = std::to_string(mol.size()) + "\n";
  std::string comment;
  if (!mol.id.empty()) comment += "id=" + mol.id;
  if (mol.label) {
    if (!comment.empty()) comment += ' ';
    comment += "label=" + format_real(*mol.label);
  }
  s += comment + "\n";
  for (std::size_t a = 0; a < mol.size(); ++a) {
    const auto &r = mol.positions[a];
    s += mol.species[a] + ' ' + format_real(r.x()) + ' ' + format_real(r.y()) +
         ' ' + format_real(r.z()) + '\n';
  }
  return s;
}

std::map<std::string, double> parse_label_table(std::string_view text) {
  std::map<std::string, double> table;
  auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw ParseError("expected id<TAB>label", i + 1);
    }
    auto id = trim(line.substr(0, tab));
    auto v = to_real(trim(line.substr(tab + 1)));
    if (id.empty() || !v || !std::isfinite(*v)) {
      throw ParseError("malformed label row", i + 1, std::string(line));
    }
    if (!table.emplace(std::string(id), *v).second) {
      throw ParseError("duplicate id in label table", i + 1, std::string(id));
    }
  }
  return table;
}

std::string write_label_table(const Dataset &ds) {
  std::string s = "# id\tlabel_eV\n";
  for (const auto &m : ds.molecules()) {
    if (m.label) s += m.id + '\t' + format_real(*m.label) + '\n';
  }
  return s;
}

Dataset attach_labels(const Dataset &ds,
                      const std::map<std::string, double> &table) {
  std::string unknown;
  for (const auto &[id, _] : table) {
    if (!ds.find(id)) unknown += (unknown.empty() ? "" : ", ") + id;
  }
  if (!unknown.empty()) throw DataError("unknown id: " + unknown);
  if (table.empty()) return ds;

  auto mols = ds.molecules();
  for (auto &m : mols) {
    if (auto it = table.find(m.id); it != table.end()) m.label = it->second;
  }
  return Dataset(ds.name(), std::move(mols), ds.features());
}

// -- pools -------------------------------------------------------------------

PoolState make_pool(const Dataset &ds, std::size_t n_test, std::size_t n_init,
                    std::uint64_t seed) {
  const std::size_t n = ds.size();
  if (n_test + n_init > n) {
    throw DataError("pool of " + std::to_string(n) +
                    " molecules cannot hold n_test=" + std::to_string(n_test) +
                    " plus n_init=" + std::to_string(n_init));
  }
  IndexList perm(n);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  IndexList test(perm.begin(), perm.begin() + n_test);
  IndexList train(perm.begin() + n_test, perm.begin() + n_test + n_init);
  IndexList heldout(perm.begin() + n_test + n_init, perm.end());
  for (const auto *set : {&test, &train}) {
    for (Index i : *set) {
      if (!ds[i].label) throw DataError("unlabeled molecule: " + ds[i].id);
    }
  }
  return PoolState(n, std::move(heldout), std::move(train), std::move(test));
}

TargetSpec select_epsilon(const Dataset &ds, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw DataError("fraction must lie in (0, 1)");
  }
  if (ds.size() == 0) throw DataError("empty dataset");
  Eigen::VectorXd y = ds.labels();
  std::vector<double> sorted(y.data(), y.data() + y.size());
  std::sort(sorted.begin(), sorted.end());

  const std::size_t n = sorted.size();
  auto k = static_cast<std::size_t>(std::llround(fraction * double(n)));
  k = std::min(k, n - 1);
  // Everything strictly above sorted[n-k-1] is in range; ties with it are not.
  return TargetSpec{sorted[n - k - 1]};
}

// -- synthetic pools -----------------------------------------------------------

void SynthSpec::validate() const {
  if (pool_size == 0) throw DataError("synth.pool_size must be positive");
  if (feature_dim == 0) throw DataError("synth.feature_dim must be positive");
  const std::size_t modes = mode == LabelMode::bimodal ? 2 : 1;
  if (mode_centers.size() < modes) {
    throw DataError("synth.mode_centers needs " + std::to_string(modes) +
                    " values");
  }
  if (mode_widths.size() < modes) {
    throw DataError("synth.mode_widths needs " + std::to_string(modes) +
                    " values");
  }
  for (std::size_t k = 0; k < modes; ++k) {
    if (!std::isfinite(mode_centers[k])) {
      throw DataError("synth.mode_centers must be finite");
    }
    if (!(mode_widths[k] > 0.0) || !std::isfinite(mode_widths[k])) {
      throw DataError("synth.mode_widths must be positive");
    }
  }
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
    throw DataError("synth.noise_sd must be non-negative");
  }
  if (!(cluster_separation >= 0.0)) {
    throw DataError("synth.cluster_separation must be non-negative");
  }
}

namespace {

// Smooth response with unit variance for z ~ N(0, I).
double response(const Eigen::VectorXd &z) {
  const auto d = z.size();
  double u = z[0];
  double var = 1.0;
  if (d >= 2) {
    u += std::sin(1.5 * z[1]);
    var += 0.5 * (1.0 - std::exp(-4.5));  // Var[sin(1.5 z)]
  }
  if (d >= 4) {
    u += 0.5 * z[2] * z[3];
    var += 0.25;
  }
  return u / std::sqrt(var);
}

}  // namespace

Dataset synth_dataset(const SynthSpec &spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);

  const auto d = static_cast<Eigen::Index>(spec.feature_dim);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(spec.pool_size), d);
  std::vector<Molecule> mols;
  mols.reserve(spec.pool_size);
  Eigen::VectorXd z(d);
  for (std::size_t i = 0; i < spec.pool_size; ++i) {
    const int k = spec.mode == LabelMode::bimodal && coin(rng) ? 1 : 0;
    for (Eigen::Index j = 0; j < d; ++j) z[j] = normal(rng);
    const double noise = normal(rng);

    auto row = x.row(static_cast<Eigen::Index>(i));
    row = z.transpose();
    row[d - 1] += k * spec.cluster_separation;

    Molecule m;
    char id[32];
    std::snprintf(id, sizeof id, "syn%06zu", i);
    m.id = id;
    m.species = {"H"};
    m.positions = {Eigen::Vector3d::Zero()};
    m.label = spec.mode_centers[k] + spec.mode_widths[k] * response(z) +
              spec.noise_sd * noise;
    mols.push_back(std::move(m));
  }
  const char *mode = spec.mode == LabelMode::bimodal ? "bimodal" : "unimodal";
  return Dataset(std::string("synthetic-") + mode, std::move(mols),
                 std::move(x));
}

std::string write_feature_table(const Dataset &ds) {
  if (!ds.features()) throw DataError("dataset has no feature table");
  const auto &x = *ds.features();
  std::string s = "# id";
  for (Eigen::Index j = 0; j < x.cols(); ++j) s += "\tf" + std::to_string(j);
  s += '\n';
  for (Index i = 0; i < ds.size(); ++i) {
    s += ds[i].id;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      s += '\t' + format_real(x(static_cast<Eigen::Index>(i), j));
    }
    s += '\n';
  }
  return s;
}

Dataset parse_feature_table(std::string_view text, std::string name) {
  std::vector<Molecule> mols;
  std::vector<std::vector<double>> rows;
  auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    auto tok = split_ws(line);
    if (tok.size() < 2) throw ParseError("feature row needs id and values", i + 1);
    std::vector<double> row;
    for (std::size_t k = 1; k < tok.size(); ++k) {
      auto v = to_real(tok[k]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError("non-numeric feature", i + 1, std::string(tok[k]));
      }
      row.push_back(*v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError("inconsistent feature count", i + 1);
    }
    Molecule m;
    m.id = std::string(tok[0]);
    m.species = {"H"};
    m.positions = {Eigen::Vector3d::Zero()};
    mols.push_back(std::move(m));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("empty feature table", 0);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return Dataset(std::move(name), std::move(mols), std::move(x));
}

}  // namespace alcurator
