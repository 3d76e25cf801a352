#pragma once

// Theory-side evaluators: interleaved block splitting of a dependent
// sequence, Monte Carlo empirical Rademacher complexity of the SPO loss over
// a finite model set, the mixing generalization bound, and the calibration /
// excess-risk rates for polyhedral and strongly convex regions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "spoar/armodel.hpp"
#include "spoar/error.hpp"
#include "spoar/geometry.hpp"
#include "spoar/losses.hpp"
#include "spoar/random.hpp"

namespace spoar {

/// Closed 1-based index range [first, last].
struct IndexRange {
  std::size_t first = 0;
  std::size_t last = 0;

  [[nodiscard]] std::size_t length() const noexcept { return last - first + 1; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

struct BlockSplit {
  std::size_t a = 0;
  std::size_t m = 0;
  std::size_t l = 0;
  std::vector<IndexRange> y0_blocks;
  std::vector<IndexRange> y1_blocks;
};

/// Skips the first l indices of 1..n, then deals 2m consecutive length-a
/// blocks alternately to Y0 (odd blocks) and Y1 (even blocks).
inline BlockSplit block_split(std::size_t n, std::size_t a, std::size_t m, std::size_t l) {
  detail::require(a >= 1 && m >= 1, Errc::invalid_argument, "block length and count must be positive");
  detail::require(2 * a * m + l == n, Errc::invalid_argument,
                  "2am + l = " + std::to_string(2 * a * m + l) + " does not equal n = " + std::to_string(n));
  detail::require(a > l, Errc::invalid_argument, "block length a must exceed the lag l");
  BlockSplit s{a, m, l, {}, {}};
  s.y0_blocks.reserve(m);
  s.y1_blocks.reserve(m);
  for (std::size_t j = 0; j < 2 * m; ++j) {
    const IndexRange block{l + j * a + 1, l + (j + 1) * a};
    (j % 2 == 0 ? s.y0_blocks : s.y1_blocks).push_back(block);
  }
  return s;
}

struct RademacherEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t draws = 0;
};

/// Per-target SPO losses of every model: row f, column i for targets
/// i = l+1..n (1-based). Each model reads its own lag from the l-window.
inline std::vector<std::vector<double>> spo_loss_table(std::span<const ArModel> models,
                                                       std::span<const Vector> trajectory, std::size_t l,
                                                       const FeasibleRegion& region) {
  detail::require(!models.empty(), Errc::invalid_argument, "model list is empty");
  detail::require(trajectory.size() > l, Errc::insufficient_data, "trajectory too short for lag");
  std::vector<std::vector<double>> table;
  table.reserve(models.size());
  for (const auto& model : models) {
    detail::require(model.lag() <= l && model.lag() >= 1, Errc::invalid_argument, "model lag exceeds l");
    detail::require(model.dim() == region.dim(), Errc::dimension_mismatch, "model and region dimensions differ");
    std::vector<double> row;
    row.reserve(trajectory.size() - l);
    for (std::size_t k = l; k < trajectory.size(); ++k) {
      const Vector y_hat = model.predict_stacked(stack_window(trajectory, k, model.lag()));
      row.push_back(spo_loss(y_hat, trajectory[k], region));
    }
    table.push_back(std::move(row));
  }
  return table;
}

/// E_sigma[ sup_f (1/(n-l)) sum_i sigma_i loss_SPO(f(window_i), y_i) ] over
/// the supplied finite model set, by Monte Carlo over n_draws sign vectors.
inline RademacherEstimate empirical_rademacher(std::span<const ArModel> models, std::span<const Vector> trajectory,
                                               std::size_t l, const FeasibleRegion& region, std::size_t n_draws,
                                               std::uint64_t seed) {
  detail::require(!models.empty(), Errc::invalid_argument, "model list is empty");
  detail::require(n_draws >= 100, Errc::invalid_argument, "need at least 100 Rademacher draws");
  const auto table = spo_loss_table(models, trajectory, l, region);
  const auto count = table.front().size();
  const double inv = 1.0 / static_cast<double>(count);

  Rng rng(seed);
  std::vector<int> sigma(count);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t draw = 0; draw < n_draws; ++draw) {
    for (auto& s : sigma) s = rng.sign();
    double sup = -std::numeric_limits<double>::infinity();
    for (const auto& row : table) {
      double acc = 0.0;
      for (std::size_t i = 0; i < count; ++i) acc += sigma[i] * row[i];
      sup = std::max(sup, acc * inv);
    }
    sum += sup;
    sum_sq += sup * sup;
  }
  const double draws = static_cast<double>(n_draws);
  const double mean = sum / draws;
  const double var = std::max(0.0, (sum_sq - draws * mean * mean) / (draws - 1.0));
  return {mean, std::sqrt(var / draws), n_draws};
}

enum class BoundVariant { expected, empirical };

enum class BetaSource { user, proxy };

inline const char* to_string(BoundVariant v) noexcept { return v == BoundVariant::expected ? "expected" : "empirical"; }
inline const char* to_string(BetaSource s) noexcept { return s == BetaSource::user ? "user" : "proxy"; }

struct BoundInputs {
  double empirical_risk = 0.0;
  double rademacher = 0.0;
  /// Linear optimization gap sup over the cost support.
  double omega = 0.0;
  std::size_t m = 1;
  double delta = 0.05;
  /// beta(a - l), supplied or from mixing_proxy.
  double beta_al = 0.0;
  BetaSource beta_source = BetaSource::user;

  void validate() const {
    detail::require(delta > 0.0 && delta < 1.0, Errc::invalid_argument, "delta must lie in (0, 1)");
    detail::require(beta_al >= 0.0, Errc::invalid_argument, "beta(a - l) must be nonnegative");
    detail::require(m >= 1, Errc::invalid_argument, "m must be positive");
    detail::require(omega >= 0.0, Errc::invalid_argument, "omega must be nonnegative");
  }
};

/// delta' = delta - 2 m beta(a - l); must stay positive.
inline double effective_delta(double delta, std::size_t m, double beta_al) {
  const double dp = delta - 2.0 * static_cast<double>(m) * beta_al;
  detail::require(dp > 0.0, Errc::infeasible_confidence,
                  "delta' = " + std::to_string(dp) + " <= 0: mixing too slow for the requested confidence");
  return dp;
}

struct BoundResult {
  double bound = 0.0;
  double delta_prime = 0.0;
};

/// expected:  R + 2 Rad + omega sqrt(log(2/delta') / (2m))
/// empirical: R + 2 Rad + 3 omega sqrt(log(4/delta') / (2m))
inline BoundResult generalization_bound(const BoundInputs& in, BoundVariant variant) {
  in.validate();
  const double dp = effective_delta(in.delta, in.m, in.beta_al);
  const double two_m = 2.0 * static_cast<double>(in.m);
  const double tail = variant == BoundVariant::expected ? in.omega * std::sqrt(std::log(2.0 / dp) / two_m)
                                                        : 3.0 * in.omega * std::sqrt(std::log(4.0 / dp) / two_m);
  return {in.empirical_risk + 2.0 * in.rademacher + tail, dp};
}

/// Lower bound on the SPO+ calibration function over a polytope:
/// alpha Xi_S / (4 sqrt(2 pi) e^3) * min(eps^2 / D_S, eps). `alpha` has no
/// default; it comes from the noise model.
inline double calibration_bound_polyhedral(double eps, const FeasibleRegion& region, double alpha) {
  detail::require(eps > 0.0, Errc::invalid_argument, "eps must be positive");
  detail::require(alpha > 0.0, Errc::invalid_argument, "alpha must be positive");
  const double xi = xi_constant(region);
  const double diam = diameter(region);
  const double scale = alpha * xi / (4.0 * std::sqrt(2.0 * std::numbers::pi) * std::exp(3.0));
  return scale * std::min(eps * eps / diam, eps);
}

/// alpha mu^{9/2} / (4 L^{9/2}) * eps for a mu-strongly convex, L-smooth level set.
inline double calibration_bound_strongly_convex(double eps, double mu, double smoothness, double alpha) {
  detail::require(eps > 0.0, Errc::invalid_argument, "eps must be positive");
  detail::require(alpha > 0.0, Errc::invalid_argument, "alpha must be positive");
  detail::require(mu > 0.0 && mu <= smoothness, Errc::invalid_argument, "need 0 < mu <= L");
  return alpha * std::pow(mu / smoothness, 4.5) / 4.0 * eps;
}

/// C sqrt(log(1/delta')) / m^{1/4} (polytope) or / m^{1/2} (ball), up to the
/// unknown constant C.
inline double excess_risk_rate(std::size_t m, double delta, double beta_al, double c, RegionKind kind) {
  detail::require(m >= 1, Errc::invalid_argument, "m must be positive");
  detail::require(delta > 0.0 && delta < 1.0, Errc::invalid_argument, "delta must lie in (0, 1)");
  detail::require(beta_al >= 0.0, Errc::invalid_argument, "beta(a - l) must be nonnegative");
  const double dp = effective_delta(delta, m, beta_al);
  const double exponent = kind == RegionKind::polytope ? 0.25 : 0.5;
  return c * std::sqrt(std::log(1.0 / dp)) / std::pow(static_cast<double>(m), exponent);
}

}  // namespace spoar
