#include "kinshape/linfshape.hpp"

#include <cmath>
#include <stdexcept>

namespace kinshape {

namespace {

void require_nonzero(const Vec& x, const Vec& b, const char* who) {
  if (x.size() == 0 || x.size() != b.size())
    throw std::invalid_argument(std::string(who) +
                                ": x and b must be nonempty and equal length");
  if (!x.allFinite() || !b.allFinite())
    throw std::invalid_argument(std::string(who) + ": non-finite input");
  if (x.lpNorm<1>() < kDegenerateNorm || x.norm() < kDegenerateNorm)
    throw std::invalid_argument(std::string(who) + ": x must be nonzero");
}

double sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

ShapeSolution solve(const Vec& x, const Vec& b) {
  require_nonzero(x, b, "solve");
  const Eigen::Index n = x.size();
  const double xb = x.dot(b);
  const double x_l1 = x.lpNorm<1>();
  const double x_sq = x.squaredNorm();

  ShapeSolution s;
  s.a_s = std::min(0.0, xb);
  s.a_sym = (s.a_s / x_sq) * Mat::Identity(n, n);

  const double level = (xb - s.a_s) / x_l1;
  s.xi.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) s.xi[i] = sign(x[i]) * level;

  s.v = b - (s.a_s / x_sq) * x - s.xi;
  s.a_skew = (s.v * x.transpose() - x * s.v.transpose()) / x_sq;
  s.phi = std::max(0.0, xb / x_l1);
  return s;
}

double oracle_phi(const Vec& x, const Vec& b, double tol) {
  require_nonzero(x, b, "oracle_phi");
  if (!(tol > 0.0)) throw std::invalid_argument("oracle_phi: tol must be > 0");

  const double xb = x.dot(b);
  const double x_l1 = x.lpNorm<1>();
  // The inf-ball of radius t around b reaches {x'y <= 0} iff
  // min over the ball of x'y = x'b - t |x|_1 is <= 0.
  auto reaches = [&](double t) { return xb - t * x_l1 <= 0.0; };

  if (reaches(0.0)) return 0.0;
  double lo = 0.0;
  double hi = b.lpNorm<Eigen::Infinity>();  // y = 0 is always feasible
  for (int it = 0; it < 4000 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (reaches(mid) ? hi : lo) = mid;
  }
  return hi;
}

double max_sym_eigenvalue(const Mat& a) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("max_sym_eigenvalue: matrix must be square");
  if (a.size() == 0) return 0.0;
  const Mat sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

bool check_feasible(const Mat& a, double tol) {
  return max_sym_eigenvalue(a) <= tol;
}

}  // namespace kinshape
