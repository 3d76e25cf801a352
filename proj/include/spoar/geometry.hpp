#pragma once

// Feasible regions and the linear optimization oracle w*(y) = argmin_{w in S} y^T w.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spoar/error.hpp"

namespace spoar {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Absolute tolerance under which two vertex objective values count as tied.
inline constexpr double kTieTolerance = 1e-12;

enum class RegionKind { polytope, ball };

inline const char* to_string(RegionKind kind) noexcept {
  return kind == RegionKind::polytope ? "polytope" : "ball";
}

namespace detail {

inline bool lex_less(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

}  // namespace detail

/// A bounded decision set S, either the convex hull of a vertex list or a
/// Euclidean ball. Immutable once built.
class FeasibleRegion {
 public:
  static FeasibleRegion polytope(std::vector<Vector> vertices) {
    detail::require(!vertices.empty(), Errc::invalid_argument, "polytope needs at least one vertex");
    const auto dim = vertices.front().size();
    detail::require(dim > 0, Errc::invalid_argument, "vertex dimension must be positive");
    for (const auto& v : vertices) {
      detail::require(v.size() == dim, Errc::dimension_mismatch, "all vertices must share one dimension");
      detail::require(v.allFinite(), Errc::non_finite, "vertex has a non-finite coordinate");
    }
    FeasibleRegion r;
    r.kind_ = RegionKind::polytope;
    r.dim_ = static_cast<std::size_t>(dim);
    r.vertices_ = std::move(vertices);
    return r;
  }

  static FeasibleRegion ball(Vector center, double radius) {
    detail::require(center.size() > 0, Errc::invalid_argument, "ball center must be nonempty");
    detail::require(center.allFinite(), Errc::non_finite, "ball center has a non-finite coordinate");
    detail::require(std::isfinite(radius) && radius > 0.0, Errc::invalid_argument, "ball radius must be positive");
    FeasibleRegion r;
    r.kind_ = RegionKind::ball;
    r.dim_ = static_cast<std::size_t>(center.size());
    r.center_ = std::move(center);
    r.radius_ = radius;
    return r;
  }

  /// Default experiment region: {w in [0,1]^2 : w1 + w2 >= 1}. A stand-in for
  /// the unstated "knapsack" set; minimizing positive costs over it is a
  /// genuine choice between the two unit vectors.
  static FeasibleRegion covering_square() {
    return polytope({Vector{{1.0, 0.0}}, Vector{{0.0, 1.0}}, Vector{{1.0, 1.0}}});
  }

  static FeasibleRegion unit_square() {
    return polytope({Vector{{0.0, 0.0}}, Vector{{1.0, 0.0}}, Vector{{0.0, 1.0}}, Vector{{1.0, 1.0}}});
  }

  [[nodiscard]] RegionKind kind() const noexcept { return kind_; }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] const std::vector<Vector>& vertices() const noexcept { return vertices_; }
  [[nodiscard]] const Vector& center() const noexcept { return center_; }
  [[nodiscard]] double radius() const noexcept { return radius_; }

 private:
  FeasibleRegion() = default;

  RegionKind kind_ = RegionKind::polytope;
  std::size_t dim_ = 0;
  std::vector<Vector> vertices_;
  Vector center_;
  double radius_ = 0.0;
};

struct OracleResult {
  Vector minimizer;
  double value = 0.0;
};

namespace detail {

inline void check_cost(const FeasibleRegion& region, const Vector& y) {
  require(static_cast<std::size_t>(y.size()) == region.dim(), Errc::dimension_mismatch,
          "cost vector has length " + std::to_string(y.size()) + ", region dimension is " +
              std::to_string(region.dim()));
  require(y.allFinite(), Errc::non_finite, "cost vector has a NaN or infinite component");
}

// Argmin without input validation or copying polytope vertices; ball
// minimizers are written into `scratch`.
inline const Vector& argmin_ref(const FeasibleRegion& region, const Vector& y, Vector& scratch) {
  if (region.kind() == RegionKind::ball) {
    const double norm = y.norm();
    if (norm == 0.0) return region.center();
    scratch = region.center() - (region.radius() / norm) * y;
    return scratch;
  }
  const auto& vs = region.vertices();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& v : vs) best = std::min(best, y.dot(v));
  const Vector* pick = nullptr;
  for (const auto& v : vs) {
    if (y.dot(v) <= best + kTieTolerance && (pick == nullptr || lex_less(v, *pick))) pick = &v;
  }
  return *pick;
}

inline OracleResult solve_linear_unchecked(const FeasibleRegion& region, const Vector& y) {
  if (region.kind() == RegionKind::ball) {
    const double norm = y.norm();
    if (norm == 0.0) return {region.center(), 0.0};
    Vector w = region.center() - (region.radius() / norm) * y;
    return {w, y.dot(region.center()) - region.radius() * norm};
  }
  Vector unused;
  const Vector& w = argmin_ref(region, y, unused);
  return {w, y.dot(w)};
}

inline double max_linear_unchecked(const FeasibleRegion& region, const Vector& y) {
  if (region.kind() == RegionKind::ball) return y.dot(region.center()) + region.radius() * y.norm();
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& v : region.vertices()) best = std::max(best, y.dot(v));
  return best;
}

}  // namespace detail

/// argmin and min of y^T w over S. Polytope ties within kTieTolerance resolve
/// to the lexicographically smallest vertex; the ball returns its center for y = 0.
inline OracleResult solve_linear(const FeasibleRegion& region, const Vector& y) {
  detail::check_cost(region, y);
  return detail::solve_linear_unchecked(region, y);
}

/// max_{w in S} y^T w.
inline double max_linear(const FeasibleRegion& region, const Vector& y) {
  detail::check_cost(region, y);
  return detail::max_linear_unchecked(region, y);
}

/// Linear optimization gap: max_{w in S} y^T w - min_{w in S} y^T w.
inline double lin_opt_gap(const FeasibleRegion& region, const Vector& y) {
  detail::check_cost(region, y);
  return std::max(0.0, detail::max_linear_unchecked(region, y) - detail::solve_linear_unchecked(region, y).value);
}

/// Supremum of the gap over a sample of cost vectors; 0 for an empty sample.
inline double lin_opt_gap(const FeasibleRegion& region, std::span<const Vector> ys) {
  double sup = 0.0;
  for (const auto& y : ys) sup = std::max(sup, lin_opt_gap(region, y));
  return sup;
}

/// D_S = sup ||w - w'||_2.
inline double diameter(const FeasibleRegion& region) {
  if (region.kind() == RegionKind::ball) return 2.0 * region.radius();
  const auto& vs = region.vertices();
  double best = 0.0;
  for (std::size_t i = 0; i < vs.size(); ++i)
    for (std::size_t j = i + 1; j < vs.size(); ++j) best = std::max(best, (vs[i] - vs[j]).norm());
  return best;
}

namespace detail {

inline double cross(const Vector& o, const Vector& a, const Vector& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// Andrew's monotone chain; collinear points are dropped.
inline std::vector<Vector> convex_hull_2d(std::vector<Vector> pts) {
  std::sort(pts.begin(), pts.end(), lex_less);
  pts.erase(std::unique(pts.begin(), pts.end(), [](const Vector& a, const Vector& b) { return a == b; }),
            pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vector> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace detail

/// d_S = min over unit v of (max v^T w - min v^T w). Exact for balls and for
/// polytopes in one or two dimensions, where the minimum sits at an edge normal
/// of the convex hull. Returns 0 for degenerate (flat or single-point) polytopes.
inline double width(const FeasibleRegion& region) {
  if (region.kind() == RegionKind::ball) return 2.0 * region.radius();
  const auto& vs = region.vertices();
  if (region.dim() == 1) return diameter(region);
  detail::require(region.dim() == 2, Errc::unsupported,
                  "polytope width is implemented for dimension <= 2, got " + std::to_string(region.dim()));
  const auto hull = detail::convex_hull_2d(vs);
  if (hull.size() < 3) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vector& a = hull[i];
    const Vector& b = hull[(i + 1) % hull.size()];
    Vector normal{{-(b[1] - a[1]), b[0] - a[0]}};
    normal.normalize();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& p : hull) {
      lo = std::min(lo, normal.dot(p));
      hi = std::max(hi, normal.dot(p));
    }
    best = std::min(best, hi - lo);
  }
  return best;
}

/// Xi_S = (1 + 2 sqrt(3) D_S / d_S)^(1 - d) for a polytope with positive width.
inline double xi_constant(const FeasibleRegion& region) {
  detail::require(region.kind() == RegionKind::polytope, Errc::wrong_region_kind,
                  "Xi_S is defined for polytopes only");
  const double d = static_cast<double>(region.dim());
  if (region.dim() == 1) {
    detail::require(diameter(region) > 0.0, Errc::degenerate_region, "segment has zero length");
    return 1.0;
  }
  const double w = width(region);
  detail::require(w > 0.0, Errc::degenerate_region, "polytope has zero width");
  return std::pow(1.0 + 2.0 * std::sqrt(3.0) * diameter(region) / w, 1.0 - d);
}

}  // namespace spoar
