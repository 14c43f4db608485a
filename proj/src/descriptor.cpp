//
// Project al-curator - Copyright 2026 The al-curator Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "alcurator/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "alcurator/digest.hpp"
#include "alcurator/error.hpp"

namespace alcurator {
namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

void MbtrConfig::validate() const {
  if (elements.empty()) throw DataError("descriptor.elements is empty");
  for (std::size_t i = 0; i < elements.size(); ++i) {
    for (std::size_t j = i + 1; j < elements.size(); ++j) {
      if (elements[i] == elements[j]) {
        throw DataError("descriptor.elements repeats " + elements[i]);
      }
    }
  }
  if (!(grid_min < grid_max)) throw DataError("descriptor grid_min >= grid_max");
  if (grid_n < 2) throw DataError("descriptor.grid_n must be at least 2");
  if (!(sigma > 0.0)) throw DataError("descriptor.sigma must be positive");
  if (!(weight_scale >= 0.0)) {
    throw DataError("descriptor.weight_scale must be non-negative");
  }
}

std::uint64_t MbtrConfig::hash() const {
  std::string s = "mbtr-k2;";
  for (const auto &e : elements) s += e + ',';
  s += ';' + format_real(grid_min) + ';' + format_real(grid_max) + ';' +
       std::to_string(grid_n) + ';' + format_real(sigma) + ';' +
       format_real(weight_scale);
  return fnv1a(s);
}

std::size_t MbtrConfig::pair_block(std::size_t a, std::size_t b) const noexcept {
  if (a > b) std::swap(a, b);
  const std::size_t v = elements.size();
  return a * v - a * (a - 1) / 2 + (b - a);
}

DescriptorVector mbtr_k2(const Molecule &mol, const MbtrConfig &cfg) {
  validate(mol);
  std::vector<std::size_t> kind(mol.size());
  for (std::size_t a = 0; a < mol.size(); ++a) {
    auto it = std::find(cfg.elements.begin(), cfg.elements.end(), mol.species[a]);
    if (it == cfg.elements.end()) {
      throw DataError("element " + mol.species[a] +
                      " is not in the descriptor vocabulary");
    }
    kind[a] = static_cast<std::size_t>(it - cfg.elements.begin());
  }

  const int nbins = cfg.grid_n;
  const double width = (cfg.grid_max - cfg.grid_min) / nbins;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cfg.length()));
  for (std::size_t i = 0; i < mol.size(); ++i) {
    for (std::size_t j = i + 1; j < mol.size(); ++j) {
      const double d = (mol.positions[i] - mol.positions[j]).norm();
      if (d < kCoincidentAtomTolerance) {
        throw DataError("molecule '" + mol.id + "': atoms " + std::to_string(i) +
                        " and " + std::to_string(j) + " coincide");
      }
      const double center = 1.0 / d;
      const double weight = std::exp(-cfg.weight_scale * d);
      const auto offset =
          static_cast<Eigen::Index>(cfg.pair_block(kind[i], kind[j]) * nbins);
      double lower = normal_cdf((cfg.grid_min - center) / cfg.sigma);
      for (int b = 0; b < nbins; ++b) {
        const double upper =
            normal_cdf((cfg.grid_min + (b + 1) * width - center) / cfg.sigma);
        out[offset + b] += weight * (upper - lower);
        lower = upper;
      }
    }
  }
  return {std::move(out), cfg.hash()};
}

DescriptorMatrix mbtr_k2_batch(std::span<const Molecule> mols,
                               const MbtrConfig &cfg, unsigned threads) {
  cfg.validate();
  DescriptorMatrix result;
  result.config_hash = cfg.hash();
  result.rows.resize(static_cast<Eigen::Index>(mols.size()),
                     static_cast<Eigen::Index>(cfg.length()));

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(mols.size())));
  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](unsigned w) {
    try {
      for (std::size_t i = w; i < mols.size(); i += threads) {
        result.rows.row(static_cast<Eigen::Index>(i)) =
            mbtr_k2(mols[i], cfg).values.transpose();
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto &t : pool) t.join();
  }
  for (auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return result;
}

double descriptor_distance(const DescriptorVector &a, const DescriptorVector &b) {
  if (a.config_hash != b.config_hash) {
    throw DataError("descriptors were computed with different configurations");
  }
  if (a.values.size() != b.values.size()) {
    throw DataError("descriptor length mismatch");
  }
  return (a.values - b.values).norm();
}

std::uint64_t feature_table_hash(Eigen::Index dim) {
  return fnv1a("feature-table;" + std::to_string(dim));
}

DescriptorMatrix dataset_descriptors(const Dataset &ds, const MbtrConfig &cfg,
                                     unsigned threads) {
  if (ds.features()) {
    return {*ds.features(), feature_table_hash(ds.features()->cols())};
  }
  return mbtr_k2_batch(ds.molecules(), cfg, threads);
}

void write_descriptor_cache(const std::string &path, const Dataset &ds,
                            const DescriptorMatrix &desc) {
  if (static_cast<std::size_t>(desc.rows.rows()) != ds.size()) {
    throw DataError("descriptor rows do not match dataset size");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write descriptor cache " + path);
  out << "# config_hash " << hex_digest(desc.config_hash) << " rows "
      << desc.rows.rows() << " cols " << desc.rows.cols() << '\n';
  for (Index i = 0; i < ds.size(); ++i) {
    out << ds[i].id;
    for (Eigen::Index j = 0; j < desc.rows.cols(); ++j) {
      out << '\t' << format_real(desc.rows(static_cast<Eigen::Index>(i), j));
    }
    out << '\n';
  }
}

std::optional<DescriptorMatrix>
read_descriptor_cache(const std::string &path, const Dataset &ds,
                      std::uint64_t expected_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  std::istringstream header(line);
  std::string hash_tag, hash_hex, rows_tag, cols_tag, pound;
  Eigen::Index rows = 0, cols = 0;
  header >> pound >> hash_tag >> hash_hex >> rows_tag >> rows >> cols_tag >> cols;
  if (!header || pound != "#" || hash_tag != "config_hash" ||
      hash_hex != hex_digest(expected_hash) ||
      rows != static_cast<Eigen::Index>(ds.size()) || cols <= 0) {
    return std::nullopt;
  }

  DescriptorMatrix desc;
  desc.config_hash = expected_hash;
  desc.rows.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) return std::nullopt;
    std::istringstream row(line);
    std::string id;
    if (!std::getline(row, id, '\t') || id != ds[static_cast<Index>(i)].id) {
      return std::nullopt;
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
      std::string cell;
      if (!std::getline(row, cell, '\t')) return std::nullopt;
      // strtod keeps subnormal tails that stod rejects as out of range
      char *end = nullptr;
      desc.rows(i, j) = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size()) return std::nullopt;
    }
  }
  return desc;
}

}  // namespace alcurator
