#pragma once

#include "kinshape/types.hpp"

#include <functional>
#include <span>

namespace kinshape {

/// Fully specified mechanical system in port-Hamiltonian form
///
///   qdot =  dH/dp
///   pdot = -dH/dq + G u,     H(q, p) = 1/2 p' M(q)^-1 p + V(q).
///
/// Implementations are immutable after construction; every method is a pure
/// function of its arguments, so one instance may be shared across threads.
class MechanicalModel {
 public:
  virtual ~MechanicalModel() = default;

  virtual std::string name() const = 0;
  virtual int dof() const = 0;
  int actuators() const { return static_cast<int>(input_map().cols()); }

  virtual Mat mass(const Vec& q) const = 0;
  /// dM/dq_i for i = 0..n-1. The default is a central finite difference
  /// with step 1e-6 * max(1, |q_i|); catalog models override it analytically.
  virtual MatList mass_partials(const Vec& q) const;
  virtual double potential(const Vec& q) const = 0;
  virtual Vec potential_grad(const Vec& q) const = 0;

  /// Constant input map G (n x m).
  virtual const Mat& input_map() const = 0;
  /// Full-rank left annihilator of G, (n - m) x n. Empty when m = n.
  virtual const Mat& annihilator() const = 0;
};

/// Central finite-difference partials of a matrix-valued function of q.
MatList finite_difference_partials(const std::function<Mat(const Vec&)>& f,
                                   const Vec& q);

enum class QuadraticForm {
  Direct,   // p' W(q) p
  Inverse,  // p' W(q)^-1 p
};

/// Gradient in q of p' W p (Direct) or p' W^-1 p (Inverse), given W(q) and
/// its partials. Throws ModelError if the inverse form is requested and W is
/// not positive definite.
Vec grad_q_quadratic(const Mat& w, std::span<const Mat> w_partials,
                     const Vec& p, QuadraticForm form);

double hamiltonian(const MechanicalModel& model, const State& s);

/// dH/dq = 1/2 grad(p' M^-1 p) + grad V.
Vec hamiltonian_grad_q(const MechanicalModel& model, const State& s);

struct StateRate {
  Vec qdot;
  Vec pdot;
};

StateRate plant_rhs(const MechanicalModel& model, const State& s,
                    const Vec& u);

/// Cholesky factor of M(q); throws ModelError naming q when M(q) is not
/// symmetric positive definite.
Eigen::LLT<Mat> factor_spd(const Mat& m, const char* what, const Vec& q);

// ---------------------------------------------------------------------------
// Catalog models

/// Physical parameters of the Pendubot; the lumped constants c1..c5 are
/// derived from them.
struct PendubotParams {
  double m1 = 1.0;
  double m2 = 1.0;
  double l1 = 1.0;
  double l2 = 1.0;
  double lc1 = 0.5;
  double lc2 = 0.5;
  double i1 = 1.0 / 12.0;
  double i2 = 1.0 / 12.0;
  double g = 9.8;

  double c1() const { return i1 + lc1 * lc1 * m1 + l1 * l1 * m2; }
  double c2() const { return i2 + lc2 * lc2 * m2; }
  double c3() const { return l1 * lc2 * m2; }
  double c4() const { return lc1 * m1 + l1 * m2; }
  double c5() const { return lc2 * m2; }

  /// Throws ModelError unless c1, c2 > 0, c1 c2 > c3^2 and c4, c5 > 0.
  void validate() const;
};

/// Two-link arm actuated at the shoulder only; q = 0 hangs down,
/// q = (pi, 0) is the upright equilibrium.
class Pendubot final : public MechanicalModel {
 public:
  explicit Pendubot(PendubotParams params = {});

  std::string name() const override { return "pendubot"; }
  int dof() const override { return 2; }
  Mat mass(const Vec& q) const override;
  MatList mass_partials(const Vec& q) const override;
  double potential(const Vec& q) const override;
  Vec potential_grad(const Vec& q) const override;
  const Mat& input_map() const override { return g_; }
  const Mat& annihilator() const override { return g_perp_; }

  const PendubotParams& params() const { return params_; }

 private:
  PendubotParams params_;
  double c1_, c2_, c3_, c4_, c5_;
  Mat g_;
  Mat g_perp_;
};

/// Lumped inertial/gravity parameters of the 3-DOF haptic arm.
struct TouchParams {
  double phi1 = 0.00251729;
  double phi2 = 0.00108246;
  double phi3 = 0.00137408;
  double phi4 = 0.00449158;
  double phi5 = 0.00534505;
  double g = 9.81;

  void validate() const;
};

/// Fully actuated three-joint haptic arm (G = I).
class Touch final : public MechanicalModel {
 public:
  explicit Touch(TouchParams params = {});

  std::string name() const override { return "touch"; }
  int dof() const override { return 3; }
  Mat mass(const Vec& q) const override;
  MatList mass_partials(const Vec& q) const override;
  double potential(const Vec& q) const override;
  Vec potential_grad(const Vec& q) const override;
  const Mat& input_map() const override { return g_; }
  const Mat& annihilator() const override { return g_perp_; }

  const TouchParams& params() const { return params_; }

 private:
  TouchParams params_;
  Mat g_;
  Mat g_perp_;
};

/// User-defined model with constant inertia and quadratic potential
/// V = 1/2 q' K q. Uses the finite-difference partials fallback.
class QuadraticModel final : public MechanicalModel {
 public:
  QuadraticModel(Mat mass, Mat stiffness, Mat input_map);

  std::string name() const override { return "custom"; }
  int dof() const override { return static_cast<int>(mass_.rows()); }
  Mat mass(const Vec&) const override { return mass_; }
  double potential(const Vec& q) const override {
    return 0.5 * q.dot(stiffness_ * q);
  }
  Vec potential_grad(const Vec& q) const override { return stiffness_ * q; }
  const Mat& input_map() const override { return g_; }
  const Mat& annihilator() const override { return g_perp_; }

 private:
  Mat mass_;
  Mat stiffness_;
  Mat g_;
  Mat g_perp_;
};

/// Orthonormal basis of the left null space of g, as rows.
Mat left_annihilator(const Mat& g);

}  // namespace kinshape
