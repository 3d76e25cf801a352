#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "spoar/bench.hpp"

using namespace spoar;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.q = 200;
  cfg.p = 50;
  cfg.trials = 4;
  cfg.master_seed = 42;
  TrainConfig spo;
  spo.max_epochs = 50;
  spo.optimizer = OptimizerKind::adam;
  TrainConfig l2 = spo;
  l2.loss = LossKind::l2;
  l2.seed = 2;
  cfg.losses = {spo, l2};
  return cfg;
}

}  // namespace

TEST(NormalizedRegret, WorstPredictorOnBallIsTwo) {
  const auto ball = FeasibleRegion::ball(Vector::Zero(2), 1.0);
  const auto traj = simulate(SystemSpec::benchmark(1), 20, 5).data;
  const ArModel negate(Matrix(-Matrix::Identity(2, 2)), 1);
  // The window's previous cost stands in for y_t by making the series constant.
  std::vector<Vector> constant_run(60, traj[10]);
  EXPECT_NEAR(normalized_regret(negate, constant_run, 10, 50, ball), 2.0, 1e-12);
}

TEST(NormalizedRegret, ZeroForNoiselessDegreeOneSystem) {
  SystemSpec spec = SystemSpec::benchmark(1);
  spec.Q.setZero();
  spec.xi_halfwidth = 0.0;
  spec.x0 = Vector{{2.0, 1.0}};
  spec.burn_in = 0;
  // y = x + 0.5 obeys y_{k+1} = (I + A) y_k - A y_{k-1}, which a lag-2 model represents.
  const auto traj = simulate(spec, 80, 1).data;
  const auto data = build_lagged(std::span<const Vector>(traj).first(60), 2);
  const auto fit = l2_closed_form(data);
  EXPECT_LE(normalized_regret(fit, traj, 60, 20, FeasibleRegion::covering_square()), 1e-6);
}

TEST(NormalizedRegret, Errors) {
  const auto traj = simulate(SystemSpec::benchmark(2), 100, 1).data;
  const auto model = ArModel::identity(2);
  EXPECT_THROW(normalized_regret(model, traj, 90, 20, FeasibleRegion::covering_square()), Error);
  try {
    std::vector<Vector> zeros(20, Vector::Zero(2));
    normalized_regret(model, zeros, 10, 10, FeasibleRegion::unit_square());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate_denominator);
  }
}

TEST(Summarize, LinearInterpolationQuantiles) {
  const auto q = summarize({4.0, 1.0, 3.0, 2.0, 5.0});
  EXPECT_EQ(q.min, 1.0);
  EXPECT_EQ(q.q25, 2.0);
  EXPECT_EQ(q.median, 3.0);
  EXPECT_EQ(q.q75, 4.0);
  EXPECT_EQ(q.max, 5.0);
  EXPECT_EQ(q.mean, 3.0);
  const auto even = summarize({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(even.median, 2.5);
  EXPECT_DOUBLE_EQ(even.q25, 1.75);
  EXPECT_THROW(summarize({}), Error);
}

TEST(Experiment, DeterministicAcrossThreadCounts) {
  const auto cfg = small_config();
  const auto a = run_experiment(cfg, 1);
  const auto b = run_experiment(cfg, 3);
  std::ostringstream sa, sb;
  write_trials_csv(sa, std::span(&a, 1));
  write_trials_csv(sb, std::span(&b, 1));
  EXPECT_EQ(sa.str(), sb.str());
  ASSERT_EQ(a.trials.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(a.trials[i].trial, i);
}

TEST(Experiment, TrialsCsvLayout) {
  const auto report = run_experiment(small_config(), 1);
  std::ostringstream os;
  write_trials_csv(os, std::span(&report, 1));
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "trial,loss,normalized_regret,rho,sigma_max,deg,a12");
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6);
  }
  EXPECT_EQ(rows, 8u);
}

TEST(Experiment, SeedChangesResults) {
  auto cfg = small_config();
  const auto a = run_experiment(cfg, 1);
  cfg.master_seed = 43;
  const auto b = run_experiment(cfg, 1);
  EXPECT_NE(a.summaries[0].regrets, b.summaries[0].regrets);
}

TEST(Experiment, FailureKeepsCompletedTrials) {
  auto cfg = small_config();
  cfg.trials = 3;
  cfg.losses[1].step_size = 1e6;
  cfg.losses[1].optimizer = OptimizerKind::subgradient;
  try {
    run_experiment(cfg, 1);
    FAIL();
  } catch (const TrialFailure& f) {
    EXPECT_EQ(f.code(), Errc::trial_failed);
    EXPECT_NE(std::string(f.what()).find("trial 0"), std::string::npos);
    EXPECT_TRUE(f.partial().empty());
  }
}

TEST(Experiment, ConfigValidation) {
  auto cfg = small_config();
  cfg.q = 1;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = small_config();
  cfg.p = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = small_config();
  cfg.losses.clear();
  EXPECT_THROW(cfg.validate(), Error);
  cfg = small_config();
  cfg.region = FeasibleRegion::ball(Vector::Zero(3), 1.0);
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Sweep, PointsCarryRhoSigmaAndProxy) {
  auto cfg = small_config();
  cfg.trials = 2;
  const std::vector<double> values{0.0, 0.6};
  const auto pts = sweep_a12(cfg, values, 1);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_NEAR(pts[0].report.rho, 0.8, 1e-15);
  EXPECT_NEAR(pts[1].report.rho, 0.8, 1e-15);
  EXPECT_NEAR(pts[0].report.sigma_max, 0.8, 1e-12);
  EXPECT_NEAR(pts[1].report.sigma_max, 1.154400374531753, 1e-12);
  EXPECT_EQ(pts[1].report.a12, 0.6);
  ASSERT_EQ(pts[1].mixing_proxy.size(), 4u);
  EXPECT_NEAR(pts[1].mixing_proxy[2].second, 0.10737418240000006, 1e-14);
  const std::vector<int> degs{1, 3};
  const auto dpts = sweep_deg(cfg, degs, 1);
  EXPECT_EQ(dpts[1].report.deg, 3);
}

TEST(Experiment, BenchmarkSystemRegretMostlyBelowOne) {
  ExperimentConfig cfg;
  cfg.trials = 50;
  cfg.master_seed = 7;
  TrainConfig spo;
  spo.optimizer = OptimizerKind::adam;
  spo.max_epochs = 300;
  cfg.losses = {spo};
  const auto report = run_experiment(cfg, 0);
  int below = 0;
  for (double r : report.summaries[0].regrets) below += std::isfinite(r) && r < 1.0;
  EXPECT_GE(below, 45);
}
