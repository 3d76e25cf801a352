#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "spoar/dynsys.hpp"

using namespace spoar;

TEST(Spectra, UpperTriangularBenchmark) {
  for (double a12 : {0.0, 0.3, 0.6}) EXPECT_NEAR(spectral_radius(Matrix{{0.8, a12}, {0.0, 0.8}}), 0.8, 1e-15);
  // sqrt((1.64 + sqrt(1.0512)) / 2)
  EXPECT_NEAR(spectral_norm(Matrix{{0.8, 0.6}, {0.0, 0.8}}), 1.154400374531753, 1e-12);
  EXPECT_NEAR(spectral_norm(Matrix{{0.8, 0.0}, {0.0, 0.8}}), 0.8, 1e-15);
}

TEST(Spectra, ComplexAndLargerMatrices) {
  // Rotation scaled by 0.9 has complex eigenvalues of modulus 0.9.
  const double c = 0.9 * std::cos(0.7), s = 0.9 * std::sin(0.7);
  EXPECT_NEAR(spectral_radius(Matrix{{c, -s}, {s, c}}), 0.9, 1e-12);
  const Matrix a3{{0.5, 1.0, 0.0}, {0.0, -0.7, 2.0}, {0.0, 0.0, 0.2}};
  EXPECT_NEAR(spectral_radius(a3), 0.7, 1e-12);
}

TEST(MixingProxy, PowerOfSpectralRadius) {
  EXPECT_NEAR(mixing_proxy(SystemSpec::benchmark(1).A, 10), 0.10737418240000006, 1e-14);
  EXPECT_NEAR(mixing_proxy(SystemSpec::benchmark(1).A, 10, 3.0), 3 * 0.10737418240000006, 1e-14);
  try {
    mixing_proxy(Matrix{{1.0, 0.0}, {0.0, 0.5}}, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unstable_system);
  }
}

TEST(Simulate, LengthDimensionAndDeterminism) {
  const auto spec = SystemSpec::benchmark(2);
  const auto a = simulate(spec, 1300, 7);
  const auto b = simulate(spec, 1300, 7);
  const auto c = simulate(spec, 1300, 8);
  ASSERT_EQ(a.size(), 1300u);
  EXPECT_EQ(a.dim(), 2u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.data[i], b.data[i]);
  EXPECT_NE(a.data[0], c.data[0]);
  EXPECT_TRUE(a.warnings.empty());
}

TEST(Simulate, EvenDegreeCostsArePositive) {
  const auto traj = simulate(SystemSpec::benchmark(4), 2000, 3);
  for (const auto& y : traj.data) EXPECT_GE(y.minCoeff(), 0.5 * 0.75 - 1e-15);
}

TEST(Simulate, NoiselessDegreeOneIsExactRecursion) {
  SystemSpec spec = SystemSpec::benchmark(1);
  spec.Q.setZero();
  spec.xi_halfwidth = 0.0;
  spec.x0 = Vector{{1.0, -2.0}};
  spec.burn_in = 0;
  const auto traj = simulate(spec, 20, 1);
  Vector x = spec.x0;
  for (const auto& y : traj.data) {
    EXPECT_NEAR((y - (x.array() + 0.5).matrix()).norm(), 0.0, 1e-14);
    x = spec.A * x;
  }
}

TEST(Simulate, SampleMeanMatchesLongRunMean) {
  const auto spec = SystemSpec::benchmark(2);
  const auto long_run = simulate(spec, 100000, 12345);
  Vector long_mean = Vector::Zero(2);
  for (const auto& y : long_run.data) long_mean += y;
  long_mean /= 100000.0;
  // Batch means over the long run give a dependence-aware standard error for a 1300-step mean.
  const std::size_t block = 1300;
  const std::size_t blocks = long_run.size() / block;
  Vector sq = Vector::Zero(2);
  for (std::size_t b = 0; b < blocks; ++b) {
    Vector m = Vector::Zero(2);
    for (std::size_t i = 0; i < block; ++i) m += long_run.data[b * block + i];
    m /= static_cast<double>(block);
    sq += (m - long_mean).cwiseAbs2();
  }
  const Vector se = (sq / static_cast<double>(blocks - 1)).cwiseSqrt();
  const auto short_run = simulate(spec, 1300, 7);
  Vector mean = Vector::Zero(2);
  for (const auto& y : short_run.data) mean += y;
  mean /= 1300.0;
  for (int j = 0; j < 2; ++j) EXPECT_LE(std::abs(mean[j] - long_mean[j]), 3.0 * se[j]);
}

TEST(Simulate, UnstableSystems) {
  SystemSpec spec = SystemSpec::benchmark(1);
  spec.A = Matrix{{1.01, 0.0}, {0.0, 0.5}};
  try {
    simulate(spec, 10, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unstable_system);
  }
  spec.allow_unstable = true;
  const auto traj = simulate(spec, 10, 1);
  EXPECT_EQ(traj.warnings.size(), 1u);

  spec.A = Matrix{{3.0, 0.0}, {0.0, 3.0}};
  spec.deg = 9;
  try {
    simulate(spec, 2000, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::overflow);
  }
}

TEST(SystemSpec, Validation) {
  auto spec = SystemSpec::benchmark(2);
  spec.Q = Matrix{{0.1, 0.2}, {0.0, 0.1}};
  EXPECT_THROW(spec.validate(), Error);
  spec.Q = Matrix{{1.0, 2.0}, {2.0, 1.0}};
  try {
    spec.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::not_psd);
  }
  spec = SystemSpec::benchmark(0);
  EXPECT_THROW(spec.validate(), Error);
  spec = SystemSpec::benchmark(2);
  spec.xi_halfwidth = 1.0;
  EXPECT_THROW(spec.validate(), Error);
  spec = SystemSpec::benchmark(2);
  spec.H = Matrix::Identity(3, 3);
  EXPECT_THROW(spec.validate(), Error);
}

TEST(TrajectoryCsv, HeaderAndRows) {
  std::ostringstream os;
  write_trajectory_csv(os, {Vector{{0.1, 2.0}}, Vector{{-3.0, 0.25}}});
  EXPECT_EQ(os.str(), "t,y1,y2\n1,0.10000000000000001,2\n2,-3,0.25\n");
}
