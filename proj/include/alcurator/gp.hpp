//
// Project al-curator - Copyright 2026 The al-curator Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef ALCURATOR_GP_HPP_
#define ALCURATOR_GP_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "alcurator/descriptor.hpp"
#include "alcurator/digest.hpp"
#include "alcurator/error.hpp"

/// Exact Gaussian-process regression with a zero prior mean and the kernel
///
///   k(x, x') = signal_variance * exp(-|x - x'|^2 / (2 length_scale^2)).
///
/// `signal_variance` multiplies the exponential directly (it is not squared).
/// Inputs are matrices with one point per row.
namespace alcurator::gp {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar = double>
struct Hyperparams {
  Scalar length_scale = Scalar(700);
  Scalar signal_variance = Scalar(20);
  Scalar noise = Scalar(1e-10);  // sigma_n^2, fixed during optimization

  void validate() const {
    if (!(std::isfinite(length_scale) && length_scale > 0)) {
      throw DataError("gp length_scale must be positive and finite");
    }
    if (!(std::isfinite(signal_variance) && signal_variance > 0)) {
      throw DataError("gp signal_variance must be positive and finite");
    }
    if (!(std::isfinite(noise) && noise >= 0)) {
      throw DataError("gp noise must be non-negative and finite");
    }
  }

  friend bool operator==(const Hyperparams &, const Hyperparams &) = default;
};

struct FitOptions {
  std::size_t max_rows = 4000;  // exact-GP training size cap
  double jitter_start = 1e-10;
  double jitter_max = 1e-4;
  double jitter_growth = 10.0;
};

template <typename DerivedA, typename DerivedB, typename Scalar>
Scalar rbf_kernel(const Eigen::MatrixBase<DerivedA> &x,
                  const Eigen::MatrixBase<DerivedB> &xp,
                  const Hyperparams<Scalar> &h) {
  const Scalar d2 = (x - xp).squaredNorm();
  return h.signal_variance *
         std::exp(-d2 / (Scalar(2) * h.length_scale * h.length_scale));
}

inline double rbf_kernel(const DescriptorVector &x, const DescriptorVector &xp,
                         const Hyperparams<double> &h) {
  if (x.config_hash != xp.config_hash) {
    throw DataError("descriptors were computed with different configurations");
  }
  return rbf_kernel(x.values, xp.values, h);
}

/// Pairwise squared Euclidean distances between the rows of `a` and `b`.
template <typename DerivedA, typename DerivedB>
Matrix<typename DerivedA::Scalar>
squared_distances(const Eigen::MatrixBase<DerivedA> &a,
                  const Eigen::MatrixBase<DerivedB> &b) {
  using Scalar = typename DerivedA::Scalar;
  Matrix<Scalar> d2 = Scalar(-2) * (a.eval() * b.eval().transpose());
  d2.colwise() += a.rowwise().squaredNorm();
  d2.rowwise() += b.rowwise().squaredNorm().transpose();
  return d2.cwiseMax(Scalar(0));
}

template <typename Derived, typename Scalar>
Matrix<Scalar> kernel_from_squared(const Eigen::MatrixBase<Derived> &d2,
                                   const Hyperparams<Scalar> &h) {
  const Scalar scale = Scalar(-1) / (Scalar(2) * h.length_scale * h.length_scale);
  return h.signal_variance * (d2.array() * scale).exp().matrix();
}

template <typename DerivedA, typename DerivedB, typename Scalar>
Matrix<Scalar> kernel_matrix(const Eigen::MatrixBase<DerivedA> &a,
                             const Eigen::MatrixBase<DerivedB> &b,
                             const Hyperparams<Scalar> &h) {
  return kernel_from_squared(squared_distances(a, b), h);
}

template <typename Scalar>
struct Prediction {
  Vector<Scalar> mean;
  Vector<Scalar> variance;  // clamped at zero
  /// Most negative variance seen before clamping (0 when none was negative).
  Scalar most_negative_variance = Scalar(0);
};

namespace detail {

template <typename Scalar>
struct Factor {
  Matrix<Scalar> lower;
  Scalar jitter = Scalar(0);
};

/// Cholesky of `k`, escalating diagonal jitter on failure.
template <typename Scalar>
Factor<Scalar> factorize(const Matrix<Scalar> &k, const FitOptions &opts) {
  const auto n = k.rows();
  const Scalar max_diag = k.diagonal().maxCoeff();
  // A pivot this small relative to the diagonal is numerically singular.
  const Scalar pivot_floor = Scalar(n) * std::numeric_limits<Scalar>::epsilon() *
                             std::max(max_diag, Scalar(1e-300));

  auto attempt = [&](Scalar jitter) -> std::optional<Factor<Scalar>> {
    Matrix<Scalar> kj = k;
    kj.diagonal().array() += jitter;
    Eigen::LLT<Matrix<Scalar>> llt(kj);
    if (llt.info() != Eigen::Success) return std::nullopt;
    Matrix<Scalar> lower = llt.matrixL();
    const Vector<Scalar> diag = lower.diagonal();
    if (!diag.allFinite() || (diag.array().square() <= pivot_floor).any()) {
      return std::nullopt;
    }
    return Factor<Scalar>{std::move(lower), jitter};
  };

  if (auto f = attempt(Scalar(0))) return *std::move(f);
  Scalar jitter = Scalar(opts.jitter_start);
  while (jitter <= Scalar(opts.jitter_max) * Scalar(1 + 1e-9)) {
    if (auto f = attempt(jitter)) return *std::move(f);
    jitter *= Scalar(opts.jitter_growth);
  }
  const double tried = static_cast<double>(jitter / Scalar(opts.jitter_growth));
  throw IllConditionedError(
      "kernel matrix is not positive definite after jitter up to " +
          format_real(tried),
      tried);
}

template <typename Scalar, typename Derived>
Scalar lml_from_factor(const Factor<Scalar> &f,
                       const Eigen::MatrixBase<Derived> &y) {
  const Vector<Scalar> beta = f.lower.template triangularView<Eigen::Lower>().solve(y);
  const auto n = static_cast<Scalar>(y.size());
  return Scalar(-0.5) * beta.squaredNorm() -
         f.lower.diagonal().array().log().sum() -
         Scalar(0.5) * n * std::log(Scalar(2) * std::numbers::pi_v<Scalar>);
}

template <typename Derived>
void check_training_data(const Eigen::MatrixBase<Derived> &y, Eigen::Index rows,
                         const FitOptions &opts) {
  if (rows < 1) throw DataError("GP fit needs at least one training row");
  if (y.size() != rows) throw DataError("label count does not match inputs");
  if (static_cast<std::size_t>(rows) > opts.max_rows) {
    throw DataError("training set of " + std::to_string(rows) +
                    " rows exceeds the exact-GP cap of " +
                    std::to_string(opts.max_rows) +
                    "; reduce the schedule or max_train");
  }
  if (!y.allFinite()) throw DataError("training labels must be finite");
}

}  // namespace detail

/// A fitted, immutable GP model.
template <typename Scalar = double>
class Model {
public:
  template <typename DerivedX, typename DerivedY>
  Model(const Eigen::MatrixBase<DerivedX> &x, const Eigen::MatrixBase<DerivedY> &y,
        const Hyperparams<Scalar> &h, const FitOptions &opts = {})
      : hyper_(h), inputs_(x), labels_(y) {
    h.validate();
    detail::check_training_data(y, x.rows(), opts);
    Matrix<Scalar> k = kernel_matrix(inputs_, inputs_, hyper_);
    k.diagonal().array() += hyper_.noise;
    factor_ = detail::factorize(k, opts);
    alpha_ = factor_.lower.template triangularView<Eigen::Lower>().solve(labels_);
    factor_.lower.template triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
  }

  const Hyperparams<Scalar> &hyper() const noexcept { return hyper_; }
  const Matrix<Scalar> &inputs() const noexcept { return inputs_; }
  const Vector<Scalar> &labels() const noexcept { return labels_; }
  /// Lower-triangular L with L L^T = K(X,X) + (noise + jitter) I.
  const Matrix<Scalar> &factor() const noexcept { return factor_.lower; }
  /// Diagonal jitter added beyond the configured noise.
  Scalar jitter() const noexcept { return factor_.jitter; }
  /// (K(X,X) + noise I)^{-1} y.
  const Vector<Scalar> &weights() const noexcept { return alpha_; }

  /// Posterior mean and variance at the rows of `xs`, `chunk` rows at a time.
  template <typename Derived>
  Prediction<Scalar> predict(const Eigen::MatrixBase<Derived> &xs,
                             Eigen::Index chunk = 1024) const {
    if (xs.cols() != inputs_.cols()) {
      throw DataError("query dimension " + std::to_string(xs.cols()) +
                      " does not match training dimension " +
                      std::to_string(inputs_.cols()));
    }
    chunk = std::max<Eigen::Index>(chunk, 1);
    Prediction<Scalar> out;
    out.mean.resize(xs.rows());
    out.variance.resize(xs.rows());
    for (Eigen::Index start = 0; start < xs.rows(); start += chunk) {
      const Eigen::Index m = std::min(chunk, xs.rows() - start);
      const Matrix<Scalar> ks =
          kernel_matrix(xs.middleRows(start, m), inputs_, hyper_);
      out.mean.segment(start, m) = ks * alpha_;
      const Matrix<Scalar> v =
          factor_.lower.template triangularView<Eigen::Lower>().solve(ks.transpose());
      for (Eigen::Index i = 0; i < m; ++i) {
        const Scalar var = hyper_.signal_variance - v.col(i).squaredNorm();
        out.most_negative_variance = std::min(out.most_negative_variance, var);
        out.variance[start + i] = std::max(var, Scalar(0));
      }
    }
    return out;
  }

  Scalar log_marginal_likelihood() const {
    return detail::lml_from_factor(factor_, labels_);
  }

private:
  Hyperparams<Scalar> hyper_;
  Matrix<Scalar> inputs_;
  Vector<Scalar> labels_;
  detail::Factor<Scalar> factor_;
  Vector<Scalar> alpha_;
};

template <typename DerivedX, typename DerivedY, typename Scalar>
Model<Scalar> fit(const Eigen::MatrixBase<DerivedX> &x,
                  const Eigen::MatrixBase<DerivedY> &y,
                  const Hyperparams<Scalar> &h, const FitOptions &opts = {}) {
  return Model<Scalar>(x, y, h, opts);
}

/// -1/2 y^T K^-1 y - 1/2 log det K - n/2 log 2 pi, with K = K(X,X) + noise I.
template <typename DerivedX, typename DerivedY, typename Scalar>
Scalar log_marginal_likelihood(const Eigen::MatrixBase<DerivedX> &x,
                               const Eigen::MatrixBase<DerivedY> &y,
                               const Hyperparams<Scalar> &h,
                               const FitOptions &opts = {}) {
  h.validate();
  detail::check_training_data(y, x.rows(), opts);
  Matrix<Scalar> k = kernel_matrix(x, x, h);
  k.diagonal().array() += h.noise;
  return detail::lml_from_factor(detail::factorize(k, opts), y);
}

// -- hyperparameter search -----------------------------------------------------

struct OptimizeOptions {
  int restarts = 2;
  double bounds_factor = 100.0;
  std::uint64_t seed = 0;
  int max_sweeps = 6;
  double tolerance = 1e-3;  // golden-section interval width, log units
  FitOptions fit;
};

template <typename Scalar>
struct SearchBox {
  Hyperparams<Scalar> lower;
  Hyperparams<Scalar> upper;
};

/// [init / factor, init * factor] for length scale and signal variance; the
/// noise is carried over unchanged.
template <typename Scalar>
SearchBox<Scalar> search_bounds(const Hyperparams<Scalar> &init, double factor) {
  if (!(factor > 1.0)) throw DataError("bounds_factor must exceed 1");
  SearchBox<Scalar> box{init, init};
  box.lower.length_scale = init.length_scale / Scalar(factor);
  box.lower.signal_variance = init.signal_variance / Scalar(factor);
  box.upper.length_scale = init.length_scale * Scalar(factor);
  box.upper.signal_variance = init.signal_variance * Scalar(factor);
  return box;
}

template <typename Scalar>
struct OptimizeResult {
  Hyperparams<Scalar> hyper;
  Scalar log_marginal_likelihood;
  int best_start = 0;  // 0 is the initial guess, 1.. the random restarts
  int evaluations = 0;
};

/// Maximizes the log marginal likelihood over (length_scale, signal_variance)
/// within [init / bounds_factor, init * bounds_factor], noise held fixed.
///
/// Runs a coordinate-wise golden-section search in log space from `init`,
/// then from `restarts` log-uniform random points. The best start wins; ties
/// go to the earliest start. Never returns a point worse than `init` when
/// `init` itself can be evaluated.
template <typename DerivedX, typename DerivedY, typename Scalar>
OptimizeResult<Scalar>
optimize_hyperparams(const Eigen::MatrixBase<DerivedX> &x,
                     const Eigen::MatrixBase<DerivedY> &y,
                     const Hyperparams<Scalar> &init,
                     const OptimizeOptions &opts = {}) {
  init.validate();
  detail::check_training_data(y, x.rows(), opts.fit);
  if (!(opts.bounds_factor > 1.0)) throw DataError("bounds_factor must exceed 1");
  if (opts.restarts < 0) throw DataError("restarts must be non-negative");

  const Matrix<Scalar> d2 = squared_distances(x, x);
  const Vector<Scalar> labels = y;
  constexpr Scalar kNoValue = -std::numeric_limits<Scalar>::infinity();
  int evaluations = 0;
  const auto box = search_bounds(init, opts.bounds_factor);

  auto hyper_at = [&](const std::array<Scalar, 2> &theta) {
    Hyperparams<Scalar> h = init;
    h.length_scale = std::clamp(std::exp(theta[0]), box.lower.length_scale,
                                box.upper.length_scale);
    h.signal_variance = std::clamp(std::exp(theta[1]), box.lower.signal_variance,
                                   box.upper.signal_variance);
    return h;
  };
  // exp(-d2 / 2l^2) for the last length scale seen.
  Matrix<Scalar> corr;
  Scalar corr_length = std::numeric_limits<Scalar>::quiet_NaN();
  auto evaluate = [&](const std::array<Scalar, 2> &theta) -> Scalar {
    ++evaluations;
    const auto h = hyper_at(theta);
    if (!(h.length_scale == corr_length)) {
      const Scalar scale = Scalar(-1) / (Scalar(2) * h.length_scale * h.length_scale);
      corr = (d2.array() * scale).exp().matrix();
      corr_length = h.length_scale;
    }
    Matrix<Scalar> k = h.signal_variance * corr;
    k.diagonal().array() += h.noise;
    try {
      const Scalar v = detail::lml_from_factor(detail::factorize(k, opts.fit), labels);
      return std::isfinite(v) ? v : kNoValue;
    } catch (const IllConditionedError &) {
      return kNoValue;
    }
  };

  const Scalar span = std::log(Scalar(opts.bounds_factor));
  const std::array<Scalar, 2> center = {std::log(init.length_scale),
                                        std::log(init.signal_variance)};
  const std::array<Scalar, 2> lo = {std::log(box.lower.length_scale),
                                    std::log(box.lower.signal_variance)};
  const std::array<Scalar, 2> hi = {std::log(box.upper.length_scale),
                                    std::log(box.upper.signal_variance)};
  const Scalar golden = (std::sqrt(Scalar(5)) - 1) / 2;

  // Golden-section along one coordinate within `half_width` of the current
  // point; keeps the best point evaluated.
  auto line_search = [&](std::array<Scalar, 2> &theta, Scalar &value, int c,
                         Scalar half_width) {
    auto at = [&](Scalar t) {
      auto p = theta;
      p[c] = t;
      return p;
    };
    Scalar a = std::max(lo[c], theta[c] - half_width);
    Scalar b = std::min(hi[c], theta[c] + half_width);
    Scalar u = b - golden * (b - a), w = a + golden * (b - a);
    Scalar fu = evaluate(at(u)), fw = evaluate(at(w));
    auto consider = [&](Scalar t, Scalar f) {
      if (f > value) {
        value = f;
        theta[c] = t;
      }
    };
    consider(u, fu);
    consider(w, fw);
    while (b - a > Scalar(opts.tolerance)) {
      if (fu >= fw) {
        b = w;
        w = u;
        fw = fu;
        u = b - golden * (b - a);
        fu = evaluate(at(u));
        consider(u, fu);
      } else {
        a = u;
        u = w;
        fu = fw;
        w = a + golden * (b - a);
        fw = evaluate(at(w));
        consider(w, fw);
      }
    }
  };

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::array<Scalar, 2>> starts{center};
  for (int r = 0; r < opts.restarts; ++r) {
    std::array<Scalar, 2> s;
    for (int c = 0; c < 2; ++c) s[c] = lo[c] + Scalar(unit(rng)) * (hi[c] - lo[c]);
    starts.push_back(s);
  }

  std::optional<OptimizeResult<Scalar>> best;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    auto theta = starts[s];
    Scalar value = evaluate(theta);
    Scalar half_width = Scalar(2) * span;
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
      const Scalar before = value;
      line_search(theta, value, 0, half_width);
      line_search(theta, value, 1, half_width);
      half_width = std::max(half_width / Scalar(4), Scalar(8 * opts.tolerance));
      if (std::isfinite(before) &&
          value - before <= Scalar(1e-9) * (Scalar(1) + std::abs(value))) {
        break;
      }
    }
    if (value == kNoValue) continue;
    if (!best || value > best->log_marginal_likelihood) {
      best = OptimizeResult<Scalar>{hyper_at(theta), value, static_cast<int>(s), 0};
      // Keep the initial values bit-exact when the search never moved.
      if (theta == center) best->hyper = init;
    }
  }
  if (!best) {
    throw IllConditionedError(
        "log marginal likelihood could not be evaluated at any search point",
        opts.fit.jitter_max);
  }
  best->evaluations = evaluations;
  return *best;
}

}  // namespace alcurator::gp

#endif  // ALCURATOR_GP_HPP_
