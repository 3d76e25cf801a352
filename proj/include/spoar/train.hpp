#pragma once

// Fitting ArModel parameters by empirical risk minimization: full-batch (or
// minibatch) matrix subgradient descent, an Adam variant, and closed-form
// least squares.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "spoar/armodel.hpp"
#include "spoar/error.hpp"
#include "spoar/geometry.hpp"
#include "spoar/losses.hpp"
#include "spoar/random.hpp"

namespace spoar {

enum class Schedule { constant, inv_sqrt_t };
enum class OptimizerKind { subgradient, adam };
enum class StopReason { tolerance, max_epochs, closed_form };

inline constexpr std::string_view to_string(Schedule s) noexcept {
  return s == Schedule::constant ? "constant" : "inv_sqrt_t";
}
inline constexpr std::string_view to_string(OptimizerKind o) noexcept {
  return o == OptimizerKind::subgradient ? "subgradient" : "adam";
}
inline constexpr std::string_view to_string(StopReason r) noexcept {
  switch (r) {
    case StopReason::tolerance: return "tolerance";
    case StopReason::max_epochs: return "max_epochs";
    case StopReason::closed_form: return "closed_form";
  }
  return "unknown";
}

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  LossKind loss = LossKind::spo_plus;
  double step_size = 0.01;
  Schedule schedule = Schedule::constant;
  /// Frobenius-norm change between consecutive epochs that ends training.
  double stop_tol = 1e-6;
  std::size_t max_epochs = 2000;
  OptimizerKind optimizer = OptimizerKind::subgradient;
  AdamParams adam;
  std::uint64_t seed = 0;
  /// Keep the 2 in the SPO+ subgradient; false reproduces the literal batch update.
  bool factor_two = true;
  /// 0 means full batch.
  std::size_t batch_size = 0;
  /// L2 only: solve the normal equations instead of iterating.
  bool closed_form = false;
  /// Initial entries are uniform on [-init_scale, init_scale].
  double init_scale = 0.1;

  void validate() const {
    detail::require(std::isfinite(step_size) && step_size >= 0.0, Errc::invalid_argument,
                    "step_size must be finite and nonnegative");
    detail::require(std::isfinite(stop_tol) && stop_tol > 0.0, Errc::invalid_argument, "stop_tol must be positive");
    detail::require(max_epochs >= 1, Errc::invalid_argument, "max_epochs must be at least 1");
    detail::require(loss != LossKind::spo, Errc::invalid_argument, "SPO loss cannot be used as a training objective");
    detail::require(!closed_form || loss == LossKind::l2, Errc::invalid_argument, "closed form is only available for L2");
    detail::require(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 && adam.eps > 0.0,
                    Errc::invalid_argument, "Adam parameters out of range");
    detail::require(init_scale >= 0.0, Errc::invalid_argument, "init_scale must be nonnegative");
  }
};

struct TrainReport {
  ArModel model;
  std::size_t epochs = 0;
  /// Empirical risk of the iterate each epoch started from.
  std::vector<double> risk_trace;
  StopReason stop = StopReason::max_epochs;
  /// Frobenius norm of the last epoch's parameter change.
  double last_step = 0.0;
};

struct RiskEval {
  double risk = 0.0;
  Matrix grad;
};

namespace detail {

// Per-dataset evaluator for the training losses. SPO+ caches w*(y_i) and
// z*(y_i) per target and uses one oracle call per row:
// max_w (y - 2 y_hat)^T w = -min_w (2 y_hat - y)^T w.
class RiskKernel {
 public:
  RiskKernel(const LaggedDataset& data, LossKind kind, const FeasibleRegion* region, bool factor_two)
      : data_(data), kind_(kind), region_(region), factor_two_(factor_two) {
    const auto d = static_cast<Eigen::Index>(data.dim);
    y_hat_.resize(d);
    probe_.resize(d);
    row_grad_.resize(d);
    if (kind_ == LossKind::spo_plus) {
      require(region_ != nullptr, Errc::invalid_argument, "SPO+ needs a feasible region");
      for (const auto& y : data.targets) {
        check_cost(*region_, y);
        auto sol = solve_linear_unchecked(*region_, y);
        target_value_.push_back(sol.value);
        target_argmin_.push_back(std::move(sol.minimizer));
      }
    }
  }

  RiskEval operator()(const Matrix& stacked, std::span<const std::size_t> rows, bool need_grad) {
    RiskEval out{0.0, need_grad ? Matrix(Matrix::Zero(stacked.rows(), stacked.cols())) : Matrix()};
    if (rows.empty()) return out;
    for (const auto i : rows) {
      const Vector& z = data_.windows[i];
      const Vector& y = data_.targets[i];
      y_hat_.noalias() = stacked * z;
      require(y_hat_.allFinite(), Errc::non_finite, "prediction became non-finite");
      switch (kind_) {
        case LossKind::spo_plus: {
          probe_ = 2.0 * y_hat_ - y;
          const Vector& w_probe = argmin_ref(*region_, probe_, scratch_);
          const Vector& w_target = target_argmin_[i];
          out.risk += -probe_.dot(w_probe) + 2.0 * y_hat_.dot(w_target) - target_value_[i];
          if (need_grad) row_grad_ = (factor_two_ ? 2.0 : 1.0) * (w_target - w_probe);
          break;
        }
        case LossKind::l2:
          row_grad_ = y_hat_ - y;
          out.risk += row_grad_.squaredNorm();
          row_grad_ *= 2.0;
          break;
        case LossKind::l1:
          row_grad_ = y_hat_ - y;
          out.risk += row_grad_.lpNorm<1>();
          row_grad_ = row_grad_.unaryExpr([](double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); });
          break;
        case LossKind::spo:
          require(!need_grad, Errc::invalid_argument, "SPO loss has no usable gradient");
          out.risk += spo_loss(y_hat_, y, *region_);
          break;
      }
      if (need_grad) out.grad.noalias() += row_grad_ * z.transpose();
    }
    const double scale = 1.0 / static_cast<double>(rows.size());
    out.risk *= scale;
    if (need_grad) out.grad *= scale;
    return out;
  }

 private:
  const LaggedDataset& data_;
  LossKind kind_;
  const FeasibleRegion* region_;
  bool factor_two_;
  std::vector<Vector> target_argmin_;
  std::vector<double> target_value_;
  Vector y_hat_, probe_, row_grad_, scratch_;
};

}  // namespace detail

/// Mean loss and mean parameter subgradient of `stacked` over the dataset rows
/// in `rows`, summed in index order.
inline RiskEval evaluate_risk(const Matrix& stacked, const LaggedDataset& data, std::span<const std::size_t> rows,
                              LossKind kind, const FeasibleRegion* region, bool factor_two = true,
                              bool need_grad = true) {
  if (kind == LossKind::spo) detail::require(region != nullptr, Errc::invalid_argument, "SPO needs a feasible region");
  detail::RiskKernel kernel(data, kind, region, factor_two);
  return kernel(stacked, rows, need_grad);
}

/// Mean loss of `model` over the whole dataset; SPO is allowed here.
inline double empirical_risk(const ArModel& model, const LaggedDataset& data, LossKind kind,
                             const FeasibleRegion* region = nullptr) {
  detail::require(model.lag() == data.lag && model.dim() == data.dim, Errc::dimension_mismatch,
                  "model and dataset disagree on lag or dimension");
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return evaluate_risk(model.stacked(), data, rows, kind, region, true, false).risk;
}

struct AdamState {
  Matrix m;
  Matrix v;
};

/// One bias-corrected Adam update of `params` at step t >= 1.
inline void adam_step(AdamState& state, Matrix& params, const Matrix& grad, std::size_t t, double alpha,
                      const AdamParams& p = {}) {
  detail::require(t >= 1, Errc::invalid_argument, "Adam step counter starts at 1");
  detail::require(grad.allFinite(), Errc::non_finite, "Adam received a non-finite gradient");
  detail::require(grad.rows() == params.rows() && grad.cols() == params.cols(), Errc::dimension_mismatch,
                  "gradient and parameter shapes differ");
  if (state.m.size() == 0) {
    state.m = Matrix::Zero(params.rows(), params.cols());
    state.v = Matrix::Zero(params.rows(), params.cols());
  }
  state.m = p.beta1 * state.m + (1.0 - p.beta1) * grad;
  state.v = p.beta2 * state.v + (1.0 - p.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(p.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(p.beta2, static_cast<double>(t));
  params.array() -= alpha * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + p.eps);
}

/// Least squares on the lagged design. Falls back to ridge (lambda = 1e-8)
/// when the design is rank deficient and `ridge_fallback` is set.
inline ArModel l2_closed_form(const LaggedDataset& data, bool ridge_fallback = true) {
  detail::require(!data.empty(), Errc::insufficient_data, "empty dataset");
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto d = static_cast<Eigen::Index>(data.dim);
  const auto cols = d * static_cast<Eigen::Index>(data.lag);
  Matrix design(n, cols);
  Matrix rhs(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    design.row(i) = data.windows[static_cast<std::size_t>(i)].transpose();
    rhs.row(i) = data.targets[static_cast<std::size_t>(i)].transpose();
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  if (qr.rank() == cols) return ArModel(Matrix(qr.solve(rhs).transpose()), data.lag);
  detail::require(ridge_fallback, Errc::rank_deficient,
                  "lagged design has rank " + std::to_string(qr.rank()) + " < " + std::to_string(cols));
  constexpr double kRidge = 1e-8;
  Matrix gram = design.transpose() * design;
  gram.diagonal().array() += kRidge;
  const Matrix coef = gram.ldlt().solve(design.transpose() * rhs);
  return ArModel(Matrix(coef.transpose()), data.lag);
}

namespace detail {

inline Matrix random_init(Eigen::Index rows, Eigen::Index cols, double scale, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  // Column-major fill order is part of the reproducibility contract.
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(-scale, scale);
  return m;
}

inline double step_at(const TrainConfig& cfg, std::size_t t) {
  return cfg.schedule == Schedule::constant ? cfg.step_size : cfg.step_size / std::sqrt(static_cast<double>(t));
}

inline TrainReport run_descent(const LaggedDataset& data, const FeasibleRegion* region, const TrainConfig& cfg) {
  const auto d = static_cast<Eigen::Index>(data.dim);
  Matrix params = random_init(d, d * static_cast<Eigen::Index>(data.lag), cfg.init_scale, cfg.seed);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = cfg.batch_size == 0 ? data.size() : std::min(cfg.batch_size, data.size());
  Rng shuffler(splitmix64(cfg.seed ^ 0x5bd1e995ULL));

  RiskKernel kernel(data, cfg.loss, region, cfg.factor_two);
  AdamState adam;
  std::size_t updates = 0;
  double initial_risk = 0.0;
  TrainReport report{ArModel(params, data.lag), 0, {}, StopReason::max_epochs, 0.0};

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const Matrix start = params;
    double risk = 0.0;
    if (batch == data.size()) {
      const auto eval = kernel(params, order, true);
      risk = eval.risk;
      ++updates;
      if (cfg.optimizer == OptimizerKind::adam) {
        adam_step(adam, params, eval.grad, updates, step_at(cfg, updates), cfg.adam);
      } else {
        params -= step_at(cfg, epoch) * eval.grad;
      }
    } else {
      risk = kernel(params, order, false).risk;
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffler.below(i)]);
      for (std::size_t lo = 0; lo < order.size(); lo += batch) {
        const auto hi = std::min(order.size(), lo + batch);
        const auto eval = kernel(params, std::span<const std::size_t>(order).subspan(lo, hi - lo), true);
        ++updates;
        if (cfg.optimizer == OptimizerKind::adam) {
          adam_step(adam, params, eval.grad, updates, step_at(cfg, updates), cfg.adam);
        } else {
          params -= step_at(cfg, updates) * eval.grad;
        }
      }
    }

    if (epoch == 1) initial_risk = risk;
    require(std::isfinite(risk) && params.allFinite(), Errc::divergence,
            "non-finite risk or parameters at epoch " + std::to_string(epoch));
    require(!(initial_risk > 0.0 && risk > 1e6 * initial_risk), Errc::divergence,
            "empirical risk grew past 1e6 times its initial value at epoch " + std::to_string(epoch));

    report.risk_trace.push_back(risk);
    report.epochs = epoch;
    report.last_step = (params - start).norm();
    if (report.last_step <= cfg.stop_tol) {
      report.stop = StopReason::tolerance;
      break;
    }
  }
  report.model = ArModel(std::move(params), data.lag);
  return report;
}

}  // namespace detail

/// Matrix subgradient descent on the empirical SPO+ risk. Each epoch averages
/// 2 (w*(y) - w*(2 M z - y)) z^T over the batch and steps against it; stops
/// once an epoch moves M by at most stop_tol in Frobenius norm.
inline TrainReport train_spo_plus(const LaggedDataset& data, const FeasibleRegion& region, TrainConfig cfg) {
  cfg.loss = LossKind::spo_plus;
  cfg.validate();
  detail::require(!data.empty(), Errc::insufficient_data, "empty dataset");
  detail::require(data.dim == region.dim(), Errc::dimension_mismatch, "dataset and region dimensions differ");
  return detail::run_descent(data, &region, cfg);
}

/// Two-stage baselines: L1 or L2 regression of the next cost vector.
inline TrainReport train_pointwise(const LaggedDataset& data, const TrainConfig& cfg) {
  cfg.validate();
  detail::require(cfg.loss == LossKind::l1 || cfg.loss == LossKind::l2, Errc::invalid_argument,
                  "pointwise training takes L1 or L2");
  detail::require(!data.empty(), Errc::insufficient_data, "empty dataset");
  if (cfg.closed_form) return TrainReport{l2_closed_form(data), 0, {}, StopReason::closed_form, 0.0};
  return detail::run_descent(data, nullptr, cfg);
}

/// Dispatches on cfg.loss.
inline TrainReport train(const LaggedDataset& data, const FeasibleRegion& region, const TrainConfig& cfg) {
  if (cfg.loss == LossKind::spo_plus) return train_spo_plus(data, region, cfg);
  return train_pointwise(data, cfg);
}

}  // namespace spoar
