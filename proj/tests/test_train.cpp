#include <cmath>

#include <gtest/gtest.h>

#include "spoar/bench.hpp"
#include "spoar/train.hpp"
#include "support.hpp"

using namespace spoar;

namespace {

/// y_k = M z_k exactly, started from random initial values.
std::vector<Vector> linear_recursion(const ArModel& truth, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vector> out;
  for (std::size_t i = 0; i < truth.lag(); ++i) out.push_back(fixtures::random_vector(rng, static_cast<long>(truth.dim()), 0.5, 2.0));
  while (out.size() < n) out.push_back(truth.predict_stacked(stack_window(out, out.size(), truth.lag())));
  return out;
}

/// Randomly driven recursion: full-rank design for recovery checks.
std::vector<Vector> driven_recursion(const ArModel& truth, std::size_t n, std::uint64_t seed, double noise) {
  Rng rng(seed);
  std::vector<Vector> out;
  for (std::size_t i = 0; i < truth.lag(); ++i) out.push_back(fixtures::random_vector(rng, static_cast<long>(truth.dim())));
  while (out.size() < n) {
    Vector y = truth.predict_stacked(stack_window(out, out.size(), truth.lag()));
    for (Eigen::Index j = 0; j < y.size(); ++j) y[j] += noise * rng.normal();
    out.push_back(y);
  }
  return out;
}

const ArModel kStableTruth = ArModel::from_mats({Matrix{{0.5, 0.2}, {-0.1, 0.4}}, Matrix{{0.1, 0.0}, {0.05, -0.2}}});

}  // namespace

TEST(ClosedForm, RecoversNoiselessRecursion) {
  // Exact data from a noise-driven run: targets are recomputed without noise.
  const auto series = driven_recursion(kStableTruth, 300, 1, 1.0);
  auto data = build_lagged(series, 2);
  for (std::size_t i = 0; i < data.size(); ++i) data.targets[i] = kStableTruth.predict_stacked(data.windows[i]);
  const auto fit = l2_closed_form(data);
  EXPECT_LE((fit.stacked() - kStableTruth.stacked()).norm(), 1e-8);
}

TEST(ClosedForm, RandomTruthManySeeds) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    Matrix m(3, 6);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
    const ArModel truth(m, 2);
    std::vector<Vector> series;
    for (int i = 0; i < 200; ++i) series.push_back(fixtures::random_vector(rng, 3));
    auto data = build_lagged(series, 2);
    for (std::size_t i = 0; i < data.size(); ++i) data.targets[i] = truth.predict_stacked(data.windows[i]);
    EXPECT_LE((l2_closed_form(data).stacked() - m).norm(), 1e-8);
  }
}

TEST(ClosedForm, RankDeficientFallsBackToRidge) {
  std::vector<Vector> series(20, Vector{{1.0, 1.0}});
  const auto data = build_lagged(series, 1);
  const auto fit = l2_closed_form(data);
  EXPECT_TRUE(fit.stacked().allFinite());
  EXPECT_THROW(l2_closed_form(data, false), Error);
}

TEST(SpoPlusTraining, ReachesZeroRiskOnNoiselessRecursion) {
  // Positive, decaying costs from a stable positive recursion.
  const auto truth = ArModel::from_mats({Matrix{{0.6, 0.3}, {0.2, 0.7}}});
  const auto series = linear_recursion(truth, 200, 3);
  const auto data = build_lagged(series, 1);
  const auto region = FeasibleRegion::covering_square();
  EXPECT_NEAR(empirical_risk(truth, data, LossKind::spo_plus, &region), 0.0, 1e-12);

  TrainConfig cfg;
  cfg.step_size = 0.05;
  cfg.max_epochs = 3000;
  const auto report = train_spo_plus(data, region, cfg);
  EXPECT_LE(empirical_risk(report.model, data, LossKind::spo_plus, &region), 1e-3);
}

TEST(SpoPlusTraining, GradientMatchesFiniteDifferencesOfRisk) {
  Rng rng(4);
  const auto series = driven_recursion(kStableTruth, 60, 4, 0.5);
  const auto data = build_lagged(series, 2);
  const auto region = fixtures::unit_ball2();
  Matrix m(2, 4);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
  std::vector<std::size_t> rows(data.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const auto eval = evaluate_risk(m, data, rows, LossKind::spo_plus, &region, true);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    Matrix up = m, down = m;
    up.data()[i] += h;
    down.data()[i] -= h;
    const double fd = (evaluate_risk(up, data, rows, LossKind::spo_plus, &region, true, false).risk -
                       evaluate_risk(down, data, rows, LossKind::spo_plus, &region, true, false).risk) /
                      (2 * h);
    EXPECT_NEAR(eval.grad.data()[i], fd, 1e-5);
  }
}

TEST(L2Training, GradientModeMatchesClosedForm) {
  const auto series = driven_recursion(kStableTruth, 400, 5, 0.3);
  const auto data = build_lagged(series, 2);
  TrainConfig cfg;
  cfg.loss = LossKind::l2;
  cfg.optimizer = OptimizerKind::adam;
  cfg.step_size = 0.01;
  cfg.max_epochs = 20000;
  cfg.stop_tol = 1e-9;
  const auto report = train_pointwise(data, cfg);
  EXPECT_LE((report.model.stacked() - l2_closed_form(data).stacked()).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(L1Training, RiskNonIncreasingUnderDecayingSteps) {
  Rng rng(6);
  std::vector<Vector> series;
  for (int i = 0; i < 300; ++i) series.push_back(fixtures::random_vector(rng, 2, -1.0, 1.0));
  const auto data = build_lagged(series, 1);
  TrainConfig cfg;
  cfg.loss = LossKind::l1;
  cfg.schedule = Schedule::inv_sqrt_t;
  cfg.step_size = 0.01;
  cfg.max_epochs = 200;
  const auto report = train_pointwise(data, cfg);
  ASSERT_GE(report.risk_trace.size(), 2u);
  for (std::size_t i = 1; i < report.risk_trace.size(); ++i)
    EXPECT_LE(report.risk_trace[i], report.risk_trace[i - 1] + 1e-9) << "epoch " << i + 1;
}

TEST(Training, ZeroStepSizeStopsAfterOneEpoch) {
  const auto series = driven_recursion(kStableTruth, 50, 7, 0.3);
  const auto data = build_lagged(series, 1);
  TrainConfig cfg;
  cfg.step_size = 0.0;
  const auto report = train_spo_plus(data, FeasibleRegion::covering_square(), cfg);
  EXPECT_EQ(report.epochs, 1u);
  EXPECT_EQ(report.stop, StopReason::tolerance);
  EXPECT_EQ(report.model.stacked(), detail::random_init(2, 2, cfg.init_scale, cfg.seed));
}

TEST(Training, DeterministicForSeed) {
  const auto series = driven_recursion(kStableTruth, 100, 8, 0.3);
  const auto data = build_lagged(series, 2);
  TrainConfig cfg;
  cfg.max_epochs = 50;
  cfg.batch_size = 16;
  cfg.seed = 99;
  const auto a = train_spo_plus(data, FeasibleRegion::covering_square(), cfg);
  const auto b = train_spo_plus(data, FeasibleRegion::covering_square(), cfg);
  EXPECT_EQ(a.model.stacked(), b.model.stacked());
  cfg.seed = 100;
  const auto c = train_spo_plus(data, FeasibleRegion::covering_square(), cfg);
  EXPECT_NE(a.model.stacked(), c.model.stacked());
}

TEST(Training, DivergenceIsReported) {
  const auto series = driven_recursion(kStableTruth, 100, 9, 1.0);
  const auto data = build_lagged(series, 1);
  TrainConfig cfg;
  cfg.loss = LossKind::l2;
  cfg.step_size = 50.0;
  cfg.max_epochs = 200;
  try {
    train_pointwise(data, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::divergence);
  }
}

TEST(Training, ConfigValidation) {
  TrainConfig cfg;
  cfg.loss = LossKind::spo;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.loss = LossKind::spo_plus;
  cfg.closed_form = true;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.closed_form = false;
  cfg.step_size = -1.0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Adam, MinimizesQuadraticBowl) {
  Matrix m = Matrix::Constant(2, 3, 1.0);
  AdamState state;
  for (std::size_t t = 1; t <= 5000; ++t) adam_step(state, m, 2.0 * m, t, 0.01, AdamParams{});
  EXPECT_LE(m.norm(), 1e-4);
  EXPECT_THROW(adam_step(state, m, m, 0, 0.01, AdamParams{}), Error);
}

TEST(Training, BenchmarkSystemImprovesOverInitialization) {
  const auto traj = simulate(SystemSpec::benchmark(2), 1300, 17);
  const std::span<const Vector> train_part(traj.data.data(), 1000);
  const auto data = build_lagged(train_part, 1);
  const auto region = FeasibleRegion::covering_square();
  TrainConfig cfg;
  cfg.optimizer = OptimizerKind::adam;
  cfg.max_epochs = 500;
  const auto report = train_spo_plus(data, region, cfg);
  const ArModel init(detail::random_init(2, 2, cfg.init_scale, cfg.seed), 1);
  EXPECT_LT(normalized_regret(report.model, traj.data, 1000, 300, region),
            normalized_regret(init, traj.data, 1000, 300, region));
}
