#pragma once

// Fixed-memory vector autoregression y_k = sum_{i=1..l} M_i y_{k-i}, lagged
// design construction, and PACF-based lag selection.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spoar/error.hpp"
#include "spoar/geometry.hpp"

namespace spoar {

/// Ordered lag matrices M_1..M_l, each d x d. Stored stacked as a single
/// d x (l*d) block [M_1 M_2 ... M_l] acting on windows [y_{k-1}; ...; y_{k-l}].
class ArModel {
 public:
  ArModel(std::size_t lag, std::size_t dim) : ArModel(Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(lag * dim)), lag) {}

  ArModel(Matrix stacked, std::size_t lag) : stacked_(std::move(stacked)), lag_(lag) {
    detail::require(lag_ >= 1, Errc::invalid_argument, "lag must be positive");
    detail::require(stacked_.rows() > 0, Errc::invalid_argument, "model dimension must be positive");
    detail::require(stacked_.cols() == stacked_.rows() * static_cast<Eigen::Index>(lag_), Errc::dimension_mismatch,
                    "stacked matrix must be d x (lag*d)");
    detail::require(stacked_.allFinite(), Errc::non_finite, "model has a non-finite entry");
  }

  static ArModel from_mats(const std::vector<Matrix>& mats) {
    detail::require(!mats.empty(), Errc::invalid_argument, "need at least one lag matrix");
    const auto d = mats.front().rows();
    Matrix stacked(d, d * static_cast<Eigen::Index>(mats.size()));
    for (std::size_t i = 0; i < mats.size(); ++i) {
      detail::require(mats[i].rows() == d && mats[i].cols() == d, Errc::dimension_mismatch,
                      "lag matrix " + std::to_string(i + 1) + " is not d x d");
      stacked.middleCols(static_cast<Eigen::Index>(i) * d, d) = mats[i];
    }
    return ArModel(std::move(stacked), mats.size());
  }

  static ArModel identity(std::size_t dim) {
    return ArModel(Matrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)), 1);
  }

  [[nodiscard]] std::size_t lag() const noexcept { return lag_; }
  [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(stacked_.rows()); }
  [[nodiscard]] const Matrix& stacked() const noexcept { return stacked_; }

  /// M_i for i in 1..lag.
  [[nodiscard]] Matrix mat(std::size_t i) const {
    detail::require(i >= 1 && i <= lag_, Errc::invalid_argument, "lag index out of range");
    const auto d = stacked_.rows();
    return stacked_.middleCols(static_cast<Eigen::Index>(i - 1) * d, d);
  }

  /// Prediction from a stacked (l*d) window, newest observation first.
  [[nodiscard]] Vector predict_stacked(const Vector& window) const {
    detail::require(window.size() == stacked_.cols(), Errc::dimension_mismatch, "stacked window has wrong length");
    return stacked_ * window;
  }

  /// Prediction from the `lag` most recent observations, newest first.
  [[nodiscard]] Vector predict(std::span<const Vector> window) const {
    detail::require(window.size() == lag_, Errc::dimension_mismatch,
                    "window holds " + std::to_string(window.size()) + " observations, model lag is " +
                        std::to_string(lag_));
    const auto d = stacked_.rows();
    Vector out = Vector::Zero(d);
    for (std::size_t i = 0; i < lag_; ++i) {
      detail::require(window[i].size() == d, Errc::dimension_mismatch, "window observation has wrong dimension");
      out.noalias() += stacked_.middleCols(static_cast<Eigen::Index>(i) * d, d) * window[i];
    }
    return out;
  }

 private:
  Matrix stacked_;
  std::size_t lag_;
};

/// Stacks the window [y_{k-1}; ...; y_{k-l}] preceding 0-based index k.
inline Vector stack_window(std::span<const Vector> series, std::size_t k, std::size_t lag) {
  const auto d = series[k - 1].size();
  Vector z(d * static_cast<Eigen::Index>(lag));
  for (std::size_t i = 0; i < lag; ++i) z.segment(static_cast<Eigen::Index>(i) * d, d) = series[k - 1 - i];
  return z;
}

struct LaggedDataset {
  std::vector<Vector> windows;
  std::vector<Vector> targets;
  /// 0-based position of each target in the source trajectory.
  std::vector<std::size_t> target_index;
  std::size_t lag = 0;
  std::size_t dim = 0;

  [[nodiscard]] std::size_t size() const noexcept { return targets.size(); }
  [[nodiscard]] bool empty() const noexcept { return targets.empty(); }
};

/// Every (window, target) pair of a trajectory: n - lag pairs, each window
/// holding exactly the lag observations before its target.
inline LaggedDataset build_lagged(std::span<const Vector> trajectory, std::size_t lag) {
  detail::require(lag >= 1, Errc::invalid_argument, "lag must be positive");
  detail::require(trajectory.size() > lag, Errc::insufficient_data,
                  "trajectory of length " + std::to_string(trajectory.size()) + " has no targets at lag " +
                      std::to_string(lag));
  const auto d = trajectory.front().size();
  for (const auto& y : trajectory)
    detail::require(y.size() == d, Errc::dimension_mismatch, "trajectory observations differ in dimension");
  LaggedDataset out;
  out.lag = lag;
  out.dim = static_cast<std::size_t>(d);
  const auto n = trajectory.size() - lag;
  out.windows.reserve(n);
  out.targets.reserve(n);
  out.target_index.reserve(n);
  for (std::size_t k = lag; k < trajectory.size(); ++k) {
    out.windows.push_back(stack_window(trajectory, k, lag));
    out.targets.push_back(trajectory[k]);
    out.target_index.push_back(k);
  }
  return out;
}

namespace detail {

// True when x_t is reproduced (to rounding) by least squares on an intercept
// and its `order` predecessors. PACF beyond `order` is then undefined.
inline bool exact_recursion(std::span<const double> x, std::size_t order) {
  const auto rows = static_cast<Eigen::Index>(x.size() - order);
  Matrix design(rows, static_cast<Eigen::Index>(order) + 1);
  Vector rhs(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto t = static_cast<std::size_t>(r) + order;
    design(r, 0) = 1.0;
    for (std::size_t j = 1; j <= order; ++j) design(r, static_cast<Eigen::Index>(j)) = x[t - j];
    rhs[r] = x[t];
  }
  const Vector coef = design.colPivHouseholderQr().solve(rhs);
  const double rss = (design * coef - rhs).squaredNorm();
  const double tss = (rhs.array() - rhs.mean()).square().sum();
  return rss <= 1e-20 * std::max(tss, 1e-300);
}

}  // namespace detail

/// Partial autocorrelations at lags 1..max_lag, by Durbin-Levinson recursion
/// on the biased, mean-removed sample autocovariances.
inline std::vector<double> pacf(std::span<const double> series, std::size_t max_lag) {
  detail::require(max_lag >= 1, Errc::invalid_argument, "max_lag must be positive");
  detail::require(series.size() > max_lag + 1, Errc::insufficient_data,
                  "series of length " + std::to_string(series.size()) + " is too short for max_lag " +
                      std::to_string(max_lag));
  for (double v : series) detail::require(std::isfinite(v), Errc::non_finite, "series has a non-finite value");

  const auto n = series.size();
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);

  std::vector<double> acov(max_lag + 1, 0.0);
  for (std::size_t k = 0; k <= max_lag; ++k) {
    double s = 0.0;
    for (std::size_t t = k; t < n; ++t) s += (series[t] - mean) * (series[t - k] - mean);
    acov[k] = s / static_cast<double>(n);
  }
  detail::require(acov[0] > 1e-300, Errc::degenerate_variance, "series has zero variance");

  std::vector<double> out(max_lag);
  std::vector<double> phi(max_lag + 1, 0.0);
  std::vector<double> prev(max_lag + 1, 0.0);
  double innovation = acov[0];
  for (std::size_t k = 1; k <= max_lag; ++k) {
    if (k >= 2) {
      detail::require(!detail::exact_recursion(series, k - 1), Errc::degenerate_variance,
                      "series follows an exact recursion of order " + std::to_string(k - 1) +
                          "; partial autocorrelation after that lag is undefined");
    }
    double num = acov[k];
    for (std::size_t j = 1; j < k; ++j) num -= prev[j] * acov[k - j];
    detail::require(innovation > 1e-14 * acov[0], Errc::degenerate_variance,
                    "innovation variance vanished at lag " + std::to_string(k - 1));
    const double reflection = num / innovation;
    phi[k] = reflection;
    for (std::size_t j = 1; j < k; ++j) phi[j] = prev[j] - reflection * prev[k - j];
    innovation *= (1.0 - reflection * reflection);
    out[k - 1] = reflection;
    prev = phi;
  }
  return out;
}

/// One memory length for a vector series: per coordinate the PACF cutoff is
/// the last lag of the leading run of lags whose |pacf| exceeds
/// confidence / sqrt(n); the result is the max over coordinates, at least 1.
inline std::size_t select_lag(std::span<const Vector> trajectory, std::size_t max_lag, double confidence = 1.96) {
  detail::require(max_lag >= 1, Errc::invalid_argument, "max_lag must be positive");
  detail::require(confidence > 0.0, Errc::invalid_argument, "confidence multiplier must be positive");
  detail::require(trajectory.size() >= 10 * max_lag, Errc::insufficient_data,
                  "lag selection needs at least 10 * max_lag observations");
  const auto n = trajectory.size();
  const auto d = trajectory.front().size();
  const double band = confidence / std::sqrt(static_cast<double>(n));
  std::size_t chosen = 1;
  std::vector<double> column(n);
  for (Eigen::Index c = 0; c < d; ++c) {
    for (std::size_t t = 0; t < n; ++t) {
      detail::require(trajectory[t].size() == d, Errc::dimension_mismatch, "trajectory observations differ in dimension");
      column[t] = trajectory[t][c];
    }
    const auto coeffs = pacf(column, max_lag);
    std::size_t cutoff = 0;
    while (cutoff < coeffs.size() && std::abs(coeffs[cutoff]) > band) ++cutoff;
    chosen = std::max(chosen, cutoff);
  }
  return chosen;
}

}  // namespace spoar
