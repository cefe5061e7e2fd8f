#pragma once

// Hand-rolled generators and numerical oracles shared by the unit tests.

#include "kinshape/types.hpp"

#include <cmath>
#include <functional>
#include <random>

namespace kinshape::test {

inline Vec uniform(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

inline Vec uniform(std::mt19937_64& rng, const Vec& lo, const Vec& hi) {
  Vec v(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i)
    v[i] = std::uniform_real_distribution<double>(lo[i], hi[i])(rng);
  return v;
}

/// Random vector that is never (numerically) zero.
inline Vec nonzero(std::mt19937_64& rng, int n, double range) {
  Vec v;
  do v = uniform(rng, n, -range, range);
  while (v.norm() < 1e-3);
  return v;
}

/// Central-difference gradient of a scalar function.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                       double h = 1e-6) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2 * h);
  }
  return g;
}

/// Central-difference partial of a matrix function in coordinate i.
inline Mat fd_partial(const std::function<Mat(const Vec&)>& f, const Vec& x,
                      int i, double h = 1e-6) {
  Vec xp = x, xm = x;
  xp[i] += h;
  xm[i] -= h;
  return (f(xp) - f(xm)) / (2 * h);
}

inline double rel_err(const Vec& a, const Vec& b, double floor = 1e-6) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

}  // namespace kinshape::test
