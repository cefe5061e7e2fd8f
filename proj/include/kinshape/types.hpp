#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace kinshape {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using MatList = std::vector<Mat>;

/// Configuration and momentum pair of a mechanical system, p = M(q) qdot.
struct State {
  Vec q;
  Vec p;

  bool finite() const { return q.allFinite() && p.allFinite(); }
};

/// A model or design produced a value that breaks its definition
/// (singular or indefinite inertia, dimension mismatch).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A design-level invariant was violated (M_d not positive definite,
/// V_d not minimised at q*, damping not positive definite).
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Closed-loop integration left the finite / bounded region.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

std::string format_vec(const Vec& v);

}  // namespace kinshape
