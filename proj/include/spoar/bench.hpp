#pragma once

// Experiment harness: seeded trials of (simulate, select lag, train per loss,
// score normalized SPO regret on a held-out horizon), aggregation, and the
// degree / coupling sweeps.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "spoar/armodel.hpp"
#include "spoar/dynsys.hpp"
#include "spoar/error.hpp"
#include "spoar/geometry.hpp"
#include "spoar/losses.hpp"
#include "spoar/random.hpp"
#include "spoar/train.hpp"

namespace spoar {

struct LagPolicy {
  bool use_pacf = false;
  std::size_t fixed = 1;
  std::size_t max_lag = 5;
  double confidence = 1.96;
};

struct ExperimentConfig {
  SystemSpec system = SystemSpec::benchmark(2);
  FeasibleRegion region = FeasibleRegion::covering_square();
  std::size_t q = 1000;
  std::size_t p = 300;
  LagPolicy lag;
  /// One entry per compared loss, reported in this order.
  std::vector<TrainConfig> losses;
  std::size_t trials = 50;
  std::uint64_t master_seed = 0;

  void validate() const {
    system.validate();
    detail::require(region.dim() == system.dim(), Errc::dimension_mismatch, "region and system dimensions differ");
    const std::size_t lag_bound = lag.use_pacf ? lag.max_lag : lag.fixed;
    detail::require(lag_bound >= 1, Errc::invalid_argument, "lag must be positive");
    detail::require(q > lag_bound, Errc::invalid_argument, "training length q must exceed the lag");
    detail::require(!lag.use_pacf || q >= 10 * lag.max_lag, Errc::invalid_argument,
                    "PACF lag selection needs q >= 10 * max_lag");
    detail::require(p >= 1, Errc::invalid_argument, "test length p must be positive");
    detail::require(trials >= 1, Errc::invalid_argument, "trials must be positive");
    detail::require(!losses.empty(), Errc::invalid_argument, "no losses configured");
    for (const auto& tc : losses) tc.validate();
  }
};

/// Test-horizon regret: sum over t = q+1..q+p of loss_SPO(f(y_{t-l..t-1}), y_t)
/// divided by sum |z*(y_t)|, with one-step-ahead predictions from realized
/// observations.
inline double normalized_regret(const ArModel& model, std::span<const Vector> trajectory, std::size_t q,
                                std::size_t p, const FeasibleRegion& region) {
  detail::require(q >= model.lag(), Errc::invalid_argument, "q must be at least the model lag");
  detail::require(trajectory.size() >= q + p, Errc::insufficient_data, "trajectory shorter than q + p");
  detail::require(p >= 1, Errc::invalid_argument, "test length p must be positive");
  double regret = 0.0;
  double scale = 0.0;
  for (std::size_t k = q; k < q + p; ++k) {
    const Vector y_hat = model.predict_stacked(stack_window(trajectory, k, model.lag()));
    regret += spo_loss(y_hat, trajectory[k], region);
    scale += std::abs(solve_linear(region, trajectory[k]).value);
  }
  detail::require(scale >= 1e-9, Errc::degenerate_denominator, "total optimal cost on the test horizon is ~0");
  return regret / scale;
}

struct LossOutcome {
  LossKind loss = LossKind::spo_plus;
  double regret = 0.0;
  std::size_t epochs = 0;
  StopReason stop = StopReason::max_epochs;
};

struct TrialRecord {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::size_t lag = 0;
  std::vector<LossOutcome> outcomes;
};

/// One independent trial; the trajectory seed is derive_seed(master, index)
/// and each loss's initialization seed is derived from that.
inline TrialRecord run_trial(const ExperimentConfig& cfg, std::size_t trial_index) {
  try {
    TrialRecord rec;
    rec.trial = trial_index;
    rec.seed = derive_seed(cfg.master_seed, trial_index);
    const auto traj = simulate(cfg.system, cfg.q + cfg.p, rec.seed);
    const std::span<const Vector> train_part(traj.data.data(), cfg.q);
    rec.lag = cfg.lag.use_pacf ? select_lag(train_part, cfg.lag.max_lag, cfg.lag.confidence) : cfg.lag.fixed;
    const auto data = build_lagged(train_part, rec.lag);
    for (const auto& base : cfg.losses) {
      TrainConfig tc = base;
      tc.seed = derive_seed(rec.seed, base.seed);
      const auto report = train(data, cfg.region, tc);
      rec.outcomes.push_back({tc.loss, normalized_regret(report.model, traj.data, cfg.q, cfg.p, cfg.region),
                              report.epochs, report.stop});
    }
    return rec;
  } catch (const Error& e) {
    throw Error(e.code(), "trial " + std::to_string(trial_index) + ": " + e.what());
  }
}

/// min, quartiles (linear interpolation between order statistics), max, mean.
struct Quantiles {
  double min = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

inline Quantiles summarize(std::vector<double> values) {
  detail::require(!values.empty(), Errc::invalid_argument, "cannot summarize an empty sample");
  std::sort(values.begin(), values.end());
  const auto at = [&](double prob) {
    const double pos = prob * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  double sum = 0.0;
  for (double v : values) sum += v;
  return {values.front(), at(0.25), at(0.5), at(0.75), values.back(), sum / static_cast<double>(values.size())};
}

struct LossSummary {
  LossKind loss = LossKind::spo_plus;
  std::vector<double> regrets;
  Quantiles stats;
};

struct RegretReport {
  std::vector<TrialRecord> trials;
  std::vector<LossSummary> summaries;
  double rho = 0.0;
  double sigma_max = 0.0;
  int deg = 0;
  double a12 = 0.0;
  double runtime_seconds = 0.0;

  [[nodiscard]] const LossSummary& summary(LossKind kind) const {
    for (const auto& s : summaries)
      if (s.loss == kind) return s;
    throw Error(Errc::invalid_argument, "loss " + std::string(to_string(kind)) + " not in report");
  }
};

/// Thrown when a trial fails; carries every record that did complete.
class TrialFailure : public Error {
 public:
  TrialFailure(const std::string& what, std::vector<TrialRecord> partial)
      : Error(Errc::trial_failed, what), partial_(std::move(partial)) {}
  [[nodiscard]] const std::vector<TrialRecord>& partial() const noexcept { return partial_; }

 private:
  std::vector<TrialRecord> partial_;
};

inline RegretReport aggregate(const ExperimentConfig& cfg, std::vector<TrialRecord> trials) {
  RegretReport report;
  report.rho = spectral_radius(cfg.system.A);
  report.sigma_max = spectral_norm(cfg.system.A);
  report.deg = cfg.system.deg;
  report.a12 = cfg.system.A.rows() >= 2 ? cfg.system.A(0, 1) : 0.0;
  for (std::size_t i = 0; i < cfg.losses.size(); ++i) {
    LossSummary s;
    s.loss = cfg.losses[i].loss;
    for (const auto& t : trials) s.regrets.push_back(t.outcomes[i].regret);
    s.stats = summarize(s.regrets);
    report.summaries.push_back(std::move(s));
  }
  report.trials = std::move(trials);
  return report;
}

/// Runs every trial on `jobs` worker threads (0 = hardware concurrency).
/// Records land in trial order regardless of scheduling.
inline RegretReport run_experiment(const ExperimentConfig& cfg, unsigned jobs = 0) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, cfg.trials));

  std::vector<std::optional<TrialRecord>> slots(cfg.trials);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::optional<std::pair<std::size_t, std::string>> first_error;

  const auto worker = [&] {
    while (!failed.load()) {
      const auto i = next.fetch_add(1);
      if (i >= cfg.trials) return;
      try {
        slots[i] = run_trial(cfg, i);
      } catch (const std::exception& e) {
        std::lock_guard lock(error_mutex);
        if (!first_error || i < first_error->first) first_error = {i, e.what()};
        failed = true;
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  std::vector<TrialRecord> done;
  for (auto& s : slots)
    if (s) done.push_back(std::move(*s));
  if (first_error) throw TrialFailure(first_error->second, std::move(done));

  auto report = aggregate(cfg, std::move(done));
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

struct SweepPoint {
  double value = 0.0;
  RegretReport report;
  /// (k, c rho^k) pairs; empty when rho >= 1.
  std::vector<std::pair<std::size_t, double>> mixing_proxy;
};

inline constexpr std::size_t kProxyLags[] = {1, 5, 10, 20};

inline SweepPoint make_point(double value, const ExperimentConfig& cfg, unsigned jobs) {
  SweepPoint pt{value, run_experiment(cfg, jobs), {}};
  if (pt.report.rho < 1.0)
    for (auto k : kProxyLags) pt.mixing_proxy.emplace_back(k, mixing_proxy(cfg.system.A, k));
  return pt;
}

/// One experiment per observer degree, all sharing the master seed.
inline std::vector<SweepPoint> sweep_deg(const ExperimentConfig& base, std::span<const int> degs, unsigned jobs = 0) {
  std::vector<SweepPoint> out;
  for (int deg : degs) {
    ExperimentConfig cfg = base;
    cfg.system.deg = deg;
    out.push_back(make_point(deg, cfg, jobs));
  }
  return out;
}

/// One experiment per off-diagonal coupling A(0,1) = a12.
inline std::vector<SweepPoint> sweep_a12(const ExperimentConfig& base, std::span<const double> values,
                                         unsigned jobs = 0) {
  detail::require(base.system.A.rows() >= 2, Errc::dimension_mismatch, "a12 sweep needs a system of dimension >= 2");
  std::vector<SweepPoint> out;
  for (double a12 : values) {
    ExperimentConfig cfg = base;
    cfg.system.A(0, 1) = a12;
    out.push_back(make_point(a12, cfg, jobs));
  }
  return out;
}

inline constexpr const char* kTrialsCsvHeader = "trial,loss,normalized_regret,rho,sigma_max,deg,a12";

/// Rows of trials.csv for one report; numbers use %.17g so reruns are byte-identical.
inline void write_trials_rows(std::ostream& os, const RegretReport& report) {
  char buf[160];
  for (const auto& t : report.trials) {
    for (const auto& o : t.outcomes) {
      std::snprintf(buf, sizeof buf, "%zu,%s,%.17g,%.17g,%.17g,%d,%.17g\n", t.trial, std::string(to_string(o.loss)).c_str(),
                    o.regret, report.rho, report.sigma_max, report.deg, report.a12);
      os << buf;
    }
  }
}

inline void write_trials_csv(std::ostream& os, std::span<const RegretReport> reports) {
  os << kTrialsCsvHeader << '\n';
  for (const auto& r : reports) write_trials_rows(os, r);
}

}  // namespace spoar
