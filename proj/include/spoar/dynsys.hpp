#pragma once

// Cost trajectories from a linear Gaussian state process observed through a
// power nonlinearity with multiplicative noise:
//
//   x_{k+1} = A x_k + w_k,          w_k ~ N(0, Q)
//   y_k     = ((H x_k)^deg + 0.5) * xi_k,  xi_k ~ U[1 - xi_bar, 1 + xi_bar]
//
// plus stability and mixing-rate diagnostics.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "spoar/error.hpp"
#include "spoar/geometry.hpp"
#include "spoar/random.hpp"

namespace spoar {

/// max |eigenvalue|. Closed form for 2x2, general eigensolver otherwise.
inline double spectral_radius(const Matrix& a) {
  detail::require(a.rows() == a.cols() && a.rows() > 0, Errc::dimension_mismatch, "spectral radius needs a square matrix");
  detail::require(a.allFinite(), Errc::non_finite, "matrix has a non-finite entry");
  if (a.rows() == 1) return std::abs(a(0, 0));
  if (a.rows() == 2) {
    const double half_trace = 0.5 * (a(0, 0) + a(1, 1));
    const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    const double disc = half_trace * half_trace - det;
    if (disc < 0.0) return std::sqrt(det);  // complex pair, |lambda|^2 = det
    const double root = std::sqrt(disc);
    return std::max(std::abs(half_trace + root), std::abs(half_trace - root));
  }
  Eigen::EigenSolver<Matrix> solver(a, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

/// Largest singular value, sqrt(lambda_max(A^T A)).
inline double spectral_norm(const Matrix& a) {
  detail::require(a.rows() == a.cols() && a.rows() > 0, Errc::dimension_mismatch, "spectral norm needs a square matrix");
  detail::require(a.allFinite(), Errc::non_finite, "matrix has a non-finite entry");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.transpose() * a, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, solver.eigenvalues().maxCoeff()));
}

/// c * rho(A)^k, a plug-in proxy for the beta-mixing coefficient beta(k) of a
/// stable linear system. Undefined once rho(A) >= 1.
inline double mixing_proxy(const Matrix& a, std::size_t k, double c = 1.0) {
  detail::require(c >= 0.0, Errc::invalid_argument, "proxy constant must be nonnegative");
  const double rho = spectral_radius(a);
  detail::require(rho < 1.0, Errc::unstable_system,
                  "mixing proxy undefined for spectral radius " + std::to_string(rho) + " >= 1");
  return c * std::pow(rho, static_cast<double>(k));
}

struct SystemSpec {
  Matrix A;
  Matrix Q;
  /// Observer matrix; identity when left empty.
  Matrix H;
  int deg = 1;
  double xi_halfwidth = 0.25;
  /// Initial state; zero when left empty.
  Vector x0;
  std::size_t burn_in = 200;
  /// Permit rho(A) >= 1; the run then carries a warning.
  bool allow_unstable = false;

  [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(A.rows()); }

  [[nodiscard]] Matrix observer() const {
    return H.size() == 0 ? Matrix(Matrix::Identity(A.rows(), A.rows())) : H;
  }
  [[nodiscard]] Vector initial_state() const { return x0.size() == 0 ? Vector(Vector::Zero(A.rows())) : x0; }

  /// The two-dimensional benchmark system: A = [[0.8, a12], [0, 0.8]], Q = 0.1 I.
  static SystemSpec benchmark(int deg, double a12 = 0.5) {
    SystemSpec s;
    s.A = Matrix{{0.8, a12}, {0.0, 0.8}};
    s.Q = 0.1 * Matrix::Identity(2, 2);
    s.deg = deg;
    return s;
  }

  void validate() const {
    const auto d = A.rows();
    detail::require(d > 0 && A.cols() == d, Errc::dimension_mismatch, "A must be square and nonempty");
    detail::require(Q.rows() == d && Q.cols() == d, Errc::dimension_mismatch, "Q must match A");
    detail::require(H.size() == 0 || (H.rows() == d && H.cols() == d), Errc::dimension_mismatch, "H must match A");
    detail::require(x0.size() == 0 || x0.size() == d, Errc::dimension_mismatch, "x0 must match A");
    detail::require(A.allFinite() && Q.allFinite() && (H.size() == 0 || H.allFinite()) && (x0.size() == 0 || x0.allFinite()),
                    Errc::non_finite, "system matrices must be finite");
    detail::require(deg >= 1, Errc::invalid_argument, "deg must be at least 1");
    detail::require(xi_halfwidth >= 0.0 && xi_halfwidth < 1.0, Errc::invalid_argument,
                    "noise half width must lie in [0, 1)");
    const double asym = (Q - Q.transpose()).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
    detail::require(asym <= 1e-12 * scale, Errc::not_psd, "Q is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(Q, Eigen::EigenvaluesOnly);
    detail::require(solver.eigenvalues().minCoeff() >= -1e-12 * scale, Errc::not_psd,
                    "Q has a negative eigenvalue");
  }
};

struct CostTrajectory {
  std::vector<Vector> data;
  SystemSpec spec;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  [[nodiscard]] std::size_t size() const noexcept { return data.size(); }
  [[nodiscard]] std::size_t dim() const noexcept { return data.empty() ? 0 : static_cast<std::size_t>(data.front().size()); }
};

namespace detail {

// Symmetric square root factor L with L L^T = Q; clips rounding negatives.
inline Matrix noise_factor(const Matrix& q) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(q);
  const Vector roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * roots.asDiagonal();
}

}  // namespace detail

/// n observations after discarding spec.burn_in steps; deterministic in (spec, n, seed).
///
/// Per step the draws are taken in a fixed order: one uniform for xi_k, then
/// d standard normals (Box-Muller) for the state noise.
inline CostTrajectory simulate(const SystemSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  CostTrajectory out;
  out.spec = spec;
  out.seed = seed;
  const double rho = spectral_radius(spec.A);
  if (rho >= 1.0) {
    detail::require(spec.allow_unstable, Errc::unstable_system,
                    "spectral radius " + std::to_string(rho) + " >= 1; set allow_unstable to proceed");
    out.warnings.push_back("spectral radius " + std::to_string(rho) + " >= 1: process is not stationary");
  }

  const auto d = spec.A.rows();
  const Matrix h = spec.observer();
  const Matrix factor = detail::noise_factor(spec.Q);
  Rng rng(seed);
  Vector x = spec.initial_state();
  Vector noise(d);
  out.data.reserve(n);

  const std::size_t total = spec.burn_in + n;
  for (std::size_t k = 0; k < total; ++k) {
    const double xi = rng.uniform(1.0 - spec.xi_halfwidth, 1.0 + spec.xi_halfwidth);
    Vector y = (h * x).array().pow(spec.deg).matrix();
    y.array() += 0.5;
    y *= xi;
    detail::require(x.allFinite() && y.allFinite(), Errc::overflow,
                    "state or observation overflowed at step " + std::to_string(k));
    if (k >= spec.burn_in) out.data.push_back(std::move(y));
    for (Eigen::Index i = 0; i < d; ++i) noise[i] = rng.normal();
    x = spec.A * x + factor * noise;
  }
  return out;
}

/// Trajectory CSV: header "t,y1,...,yd", one row per step, t from 1.
inline void write_trajectory_csv(std::ostream& os, const std::vector<Vector>& data) {
  const auto d = data.empty() ? 0 : data.front().size();
  os << "t";
  for (Eigen::Index j = 1; j <= d; ++j) os << ",y" << j;
  os << '\n';
  char buf[32];
  for (std::size_t t = 0; t < data.size(); ++t) {
    os << (t + 1);
    for (Eigen::Index j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", data[t][j]);
      os << ',' << buf;
    }
    os << '\n';
  }
}

}  // namespace spoar
