#pragma once

#include <vector>

#include "spoar/geometry.hpp"
#include "spoar/random.hpp"

namespace spoar::fixtures {

inline Vector random_vector(Rng& rng, Eigen::Index d, double lo = -2.0, double hi = 2.0) {
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

inline FeasibleRegion unit_ball2() { return FeasibleRegion::ball(Vector::Zero(2), 1.0); }

/// A random polytope: k random vertices in [-1, 1]^d.
inline FeasibleRegion random_polytope(Rng& rng, Eigen::Index d, int k) {
  std::vector<Vector> vs;
  for (int i = 0; i < k; ++i) vs.push_back(random_vector(rng, d, -1.0, 1.0));
  return FeasibleRegion::polytope(std::move(vs));
}

}  // namespace spoar::fixtures
