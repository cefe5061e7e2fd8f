#include "kinshape/linfshape.hpp"
#include "kinshape/sweep.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace kinshape;
using kinshape::test::nonzero;
using kinshape::test::uniform;

namespace {

Vec vec(std::initializer_list<double> v) {
  return Eigen::Map<const Vec>(v.begin(), static_cast<Eigen::Index>(v.size()));
}

// Exhaustive search over feasible 2x2 matrices on a grid: A = [[a, c], [d, e]]
// with the symmetric part negative semidefinite. Returns the best objective.
double brute_force_2x2(const Vec& x, const Vec& b) {
  double best = 1e300;
  const int steps = 40;
  const double range = 2.0;
  for (int i = 0; i <= steps; ++i) {
    for (int j = 0; j <= steps; ++j) {
      for (int k = 0; k <= steps; ++k) {
        for (int l = 0; l <= steps; ++l) {
          Mat a(2, 2);
          a << -range + 2 * range * i / steps, -range + 2 * range * j / steps,
              -range + 2 * range * k / steps, -range + 2 * range * l / steps;
          if (max_sym_eigenvalue(a) > 0.0) continue;
          best = std::min(best, (a * x - b).lpNorm<Eigen::Infinity>());
        }
      }
    }
  }
  return best;
}

void check_invariants(const Vec& x, const Vec& b, const ShapeSolution& s) {
  const double xx = x.squaredNorm();
  CHECK((s.a_skew + s.a_skew.transpose()).norm() == 0.0);
  CHECK((s.a_sym - s.a_s / xx * Mat::Identity(x.size(), x.size())).norm() == 0.0);
  CHECK(s.a_s <= 0.0);
  CHECK(std::abs(s.v.dot(x)) <= 1e-12 * std::max(1.0, s.v.norm() * x.norm()));
  const double res = (s.matrix() * x - b).lpNorm<Eigen::Infinity>();
  CHECK(std::abs(res - s.phi) <= 1e-12 * std::max(1.0, b.lpNorm<Eigen::Infinity>()));
  if (x.dot(b) <= 0.0) CHECK(res <= 1e-12 * std::max(1.0, b.lpNorm<Eigen::Infinity>()));
  CHECK(check_feasible(s.matrix(), 1e-12));
}

}  // namespace

TEST_CASE("solve: two coordinates, positive alignment") {
  const Vec x = vec({1, 1}), b = vec({1, 0});
  const auto s = solve(x, b);
  CHECK(s.phi == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.a_sym.norm() == 0.0);
  Mat aw(2, 2);
  aw << 0, 0.5, -0.5, 0;
  CHECK((s.a_skew - aw).norm() < 1e-15);
  CHECK((s.matrix() * x - b - vec({-0.5, -0.5})).norm() < 1e-15);
  CHECK(oracle_phi(x, b, 1e-12) == doctest::Approx(s.phi).epsilon(1e-11));
  check_invariants(x, b, s);
}

TEST_CASE("solve: exact cancellation") {
  const Vec x = vec({1, 0}), b = vec({-1, 0});
  const auto s = solve(x, b);
  CHECK(s.a_s == -1.0);
  CHECK((s.a_sym + Mat::Identity(2, 2)).norm() == 0.0);
  CHECK(s.xi.norm() == 0.0);
  CHECK(s.v.norm() == 0.0);
  CHECK(s.phi == 0.0);
  check_invariants(x, b, s);
}

TEST_CASE("solve: zero target") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const int n = 1 + k % 6;
    const Vec x = nonzero(rng, n, 5.0);
    const auto s = solve(x, Vec::Zero(n));
    CHECK(s.matrix().norm() == 0.0);
    CHECK(s.phi == 0.0);
  }
}

TEST_CASE("solve: a single coordinate cannot be reduced when aligned") {
  const auto s = solve(vec({2}), vec({3}));
  CHECK(s.a_s == 0.0);
  CHECK(s.a_skew.norm() == 0.0);
  CHECK(s.phi == 3.0);
  CHECK(oracle_phi(vec({2}), vec({3}), 1e-12) == doctest::Approx(3.0).epsilon(1e-11));
}

TEST_CASE("solve: sign(0) is zero in xi") {
  const Vec x = vec({2, 0, -1}), b = vec({3, 5, 1});
  const auto s = solve(x, b);
  CHECK(s.xi[1] == 0.0);
  CHECK(std::abs(std::abs(s.xi[0]) - std::abs(s.xi[2])) < 1e-15);
  check_invariants(x, b, s);
}

TEST_CASE("solve: rejects bad input") {
  CHECK_THROWS_AS(solve(Vec::Zero(3), Vec::Ones(3)), std::invalid_argument);
  CHECK_THROWS_AS(solve(Vec::Ones(2), Vec::Ones(3)), std::invalid_argument);
  CHECK_THROWS_AS(solve(Vec::Constant(2, 1e-14), Vec::Ones(2)), std::invalid_argument);
  CHECK_THROWS_AS(oracle_phi(Vec::Zero(2), Vec::Ones(2), 1e-9), std::invalid_argument);
}

TEST_CASE("oracle_phi examples") {
  CHECK(oracle_phi(vec({1, 1}), vec({1, 0}), 1e-12) == doctest::Approx(0.5).epsilon(1e-11));
  CHECK(oracle_phi(vec({1, -2, 3}), vec({1, 1, 1}), 1e-12) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-11));
  CHECK(oracle_phi(vec({1, 2}), vec({-1, -1}), 1e-12) == 0.0);
  CHECK(oracle_phi(vec({1, 0}), vec({0, 7}), 1e-12) == 0.0);
}

TEST_CASE("check_feasible examples") {
  CHECK(check_feasible(-Mat::Identity(3, 3), 0.0));
  Mat skew(3, 3);
  skew << 0, 1, -2, -1, 0, 3, 2, -3, 0;
  CHECK(check_feasible(skew, 0.0));
  CHECK_FALSE(check_feasible(Mat::Identity(3, 3), 1e-9));
  Mat nonsym(2, 2);
  nonsym << -1, 4, -4, -1;
  CHECK(check_feasible(nonsym, 0.0));
}

TEST_CASE("property: closed form matches the oracle and its formula") {
  std::mt19937_64 rng(77);
  for (int n = 1; n <= 6; ++n) {
    for (int k = 0; k < 300; ++k) {
      const Vec x = nonzero(rng, n, 10.0);
      const Vec b = uniform(rng, n, -10.0, 10.0);
      const auto s = solve(x, b);
      CHECK(std::abs(s.phi - oracle_phi(x, b, 1e-12)) <= 1e-9);
      CHECK(s.phi == std::max(0.0, x.dot(b) / x.lpNorm<1>()));
      check_invariants(x, b, s);
    }
  }
}

TEST_CASE("property: no feasible matrix beats the optimum") {
  std::mt19937_64 rng(123);
  for (int n = 1; n <= 6; ++n) {
    for (int k = 0; k < 50; ++k) {
      const Vec x = nonzero(rng, n, 10.0);
      const Vec b = uniform(rng, n, -10.0, 10.0);
      const auto s = solve(x, b);
      for (int w = 0; w < 50; ++w) {
        const Mat a = random_feasible(rng, n, s.matrix());
        REQUIRE(check_feasible(a, 1e-9));
        CHECK((a * x - b).lpNorm<Eigen::Infinity>() >= s.phi - 1e-9);
      }
    }
  }
}

TEST_CASE("property: brute-force grid search in two dimensions") {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 6; ++k) {
    const Vec x = nonzero(rng, 2, 1.0);
    const Vec b = uniform(rng, 2, -1.0, 1.0);
    const auto s = solve(x, b);
    const double best = brute_force_2x2(x, b);
    CHECK(best >= s.phi - 1e-12);
    // The grid is coarse; it should still get within a grid cell.
    CHECK(best <= s.phi + 0.2 * x.lpNorm<Eigen::Infinity>());
  }
}

TEST_CASE("property: scale covariance") {
  std::mt19937_64 rng(31);
  for (int k = 0; k < 500; ++k) {
    const int n = 1 + k % 6;
    const Vec x = nonzero(rng, n, 10.0);
    const Vec b = uniform(rng, n, -10.0, 10.0);
    const double c = std::exp(uniform(rng, 1, -3.0, 3.0)[0]);
    const double phi = solve(x, b).phi;
    CHECK(solve(x, c * b).phi == doctest::Approx(c * phi).epsilon(1e-12));
    CHECK(solve(c * x, b).phi == doctest::Approx(phi).epsilon(1e-12));
  }
}
