#pragma once

// Decision losses (SPO, SPO+) and pointwise baselines (L1, L2), with
// (sub)gradients taken with respect to the predicted cost vector.

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "spoar/error.hpp"
#include "spoar/geometry.hpp"

namespace spoar {

/// SPO is evaluation-only: it is piecewise constant in the prediction and is
/// never offered as a training objective.
enum class LossKind { spo, spo_plus, l1, l2 };

inline constexpr std::string_view to_string(LossKind kind) noexcept {
  switch (kind) {
    case LossKind::spo: return "spo";
    case LossKind::spo_plus: return "spo+";
    case LossKind::l1: return "l1";
    case LossKind::l2: return "l2";
  }
  return "unknown";
}

inline LossKind parse_loss_kind(std::string_view name) {
  if (name == "spo") return LossKind::spo;
  if (name == "spo+" || name == "spo_plus" || name == "spoplus") return LossKind::spo_plus;
  if (name == "l1") return LossKind::l1;
  if (name == "l2") return LossKind::l2;
  throw Error(Errc::invalid_argument, "unknown loss '" + std::string(name) + "'");
}

namespace detail {

inline void check_pair(const FeasibleRegion& region, const Vector& y_hat, const Vector& y) {
  check_cost(region, y_hat);
  check_cost(region, y);
}

inline void check_pair(const Vector& y_hat, const Vector& y) {
  require(y_hat.size() == y.size(), Errc::dimension_mismatch, "prediction and target lengths differ");
  require(y_hat.allFinite() && y.allFinite(), Errc::non_finite, "loss input has a NaN or infinite component");
}

}  // namespace detail

/// y^T w*(y_hat) - y^T w*(y); lies in [0, lin_opt_gap(region, y)].
inline double spo_loss(const Vector& y_hat, const Vector& y, const FeasibleRegion& region) {
  detail::check_pair(region, y_hat, y);
  const auto decided = detail::solve_linear_unchecked(region, y_hat);
  const auto best = detail::solve_linear_unchecked(region, y);
  return std::max(0.0, y.dot(decided.minimizer) - best.value);
}

/// max_{w in S} (y - 2 y_hat)^T w + 2 y_hat^T w*(y) - y^T w*(y).
inline double spo_plus_loss(const Vector& y_hat, const Vector& y, const FeasibleRegion& region) {
  detail::check_pair(region, y_hat, y);
  const auto best = detail::solve_linear_unchecked(region, y);
  const Vector shifted = y - 2.0 * y_hat;
  return detail::max_linear_unchecked(region, shifted) + 2.0 * y_hat.dot(best.minimizer) - best.value;
}

/// 2 (w*(y) - w*(2 y_hat - y)), a subgradient of SPO+ in y_hat.
///
/// A literal reading of the batch update in the original training loop drops
/// the factor 2; pass factor_two = false to reproduce that, the difference is
/// absorbed by the step size.
inline Vector spo_plus_subgradient(const Vector& y_hat, const Vector& y, const FeasibleRegion& region,
                                   bool factor_two = true) {
  detail::check_pair(region, y_hat, y);
  const Vector probe = 2.0 * y_hat - y;
  Vector g = detail::solve_linear_unchecked(region, y).minimizer - detail::solve_linear_unchecked(region, probe).minimizer;
  return factor_two ? Vector(2.0 * g) : g;
}

struct LossEval {
  double loss = 0.0;
  Vector grad;
  /// False for SPO, whose gradient slot is zero-filled.
  bool has_grad = true;
};

/// Dispatch over loss kinds. L2 is ||y_hat - y||^2 (no 1/2 factor) and L1 uses
/// sign(0) = 0. `region` is required for SPO and SPO+.
inline LossEval pointwise_loss_and_grad(LossKind kind, const Vector& y_hat, const Vector& y,
                                        const FeasibleRegion* region = nullptr, bool need_grad = false,
                                        bool factor_two = true) {
  switch (kind) {
    case LossKind::l2: {
      detail::check_pair(y_hat, y);
      const Vector diff = y_hat - y;
      return {diff.squaredNorm(), 2.0 * diff, true};
    }
    case LossKind::l1: {
      detail::check_pair(y_hat, y);
      const Vector diff = y_hat - y;
      Vector sub = diff.unaryExpr([](double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); });
      return {diff.lpNorm<1>(), sub, true};
    }
    case LossKind::spo_plus:
      detail::require(region != nullptr, Errc::invalid_argument, "SPO+ needs a feasible region");
      return {spo_plus_loss(y_hat, y, *region), spo_plus_subgradient(y_hat, y, *region, factor_two), true};
    case LossKind::spo:
      detail::require(region != nullptr, Errc::invalid_argument, "SPO needs a feasible region");
      detail::require(!need_grad, Errc::invalid_argument, "SPO loss has no usable gradient");
      return {spo_loss(y_hat, y, *region), Vector::Zero(y.size()), false};
  }
  throw Error(Errc::invalid_argument, "unknown loss kind");
}

}  // namespace spoar
