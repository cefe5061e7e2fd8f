#pragma once

#include "kinshape/types.hpp"

namespace kinshape {

/// Optimizer of  min ||A x - b||_inf  over A with A + A' <= 0,
/// split into its symmetric and skew-symmetric parts.
struct ShapeSolution {
  Mat a_sym;     // (a_s / |x|^2) I
  Mat a_skew;    // (v x' - x v') / |x|^2
  double a_s = 0.0;  // x' A_sym x, always <= 0
  Vec xi;        // optimal residual b - A_sym x - v
  Vec v;         // A_skew x, orthogonal to x
  double phi = 0.0;  // optimal objective, max(0, x'b / |x|_1)

  Mat matrix() const { return a_sym + a_skew; }
};

/// Norms of x below this are treated as x = 0.
inline constexpr double kDegenerateNorm = 1e-12;

/// Closed-form minimiser. sign(0) is taken as 0 in xi.
/// Throws std::invalid_argument if x and b differ in size or x is
/// (numerically) zero.
ShapeSolution solve(const Vec& x, const Vec& b);

/// Optimal value of  min ||y - b||_inf  s.t.  x'y <= 0, found by bisection on
/// the ball radius. {A x : A + A' <= 0} is exactly that half-space, so this is
/// an independent check of ShapeSolution::phi.
double oracle_phi(const Vec& x, const Vec& b, double tol);

/// True iff the largest eigenvalue of (A + A')/2 is <= tol.
bool check_feasible(const Mat& a, double tol);

/// Largest eigenvalue of the symmetric part of a.
double max_sym_eigenvalue(const Mat& a);

}  // namespace kinshape
