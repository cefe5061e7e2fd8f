#pragma once

#include "kinshape/linfshape.hpp"
#include "kinshape/mechmodel.hpp"

#include <optional>

namespace kinshape {

/// Target closed-loop energy H_d = 1/2 p' M_d^-1 p + V_d(q) together with the
/// interconnection term Lambda_k that solves the kinetic matching PDE and the
/// damping gain K_v.
class ShapingDesign {
 public:
  virtual ~ShapingDesign() = default;

  virtual Mat mass_d(const Vec& q) const = 0;
  /// Finite-difference fallback unless overridden.
  virtual MatList mass_d_partials(const Vec& q) const;
  virtual double potential_d(const Vec& q) const = 0;
  virtual Vec potential_d_grad(const Vec& q) const = 0;
  /// Lambda_k(q, p); must satisfy Lambda_k + Lambda_k' <= 0.
  virtual Mat lambda_k(const MechanicalModel& model, const State& s) const = 0;
  virtual const Mat& damping() const = 0;
  virtual const Vec& q_star() const = 0;
};

double desired_hamiltonian(const ShapingDesign& design, const State& s);

/// Throws InvariantError unless M_d(q*) > 0, grad V_d(q*) = 0, the Hessian of
/// V_d at q* is positive semidefinite, K_v > 0 and all dimensions agree.
void validate_design(const MechanicalModel& model, const ShapingDesign& design);

enum class Branch { Ida, Th1 };
enum class Controller { Ida, Th1, Reduced };

const char* to_string(Branch b);
const char* to_string(Controller c);
Controller parse_controller(const std::string& s);

struct Thresholds {
  double x = 1e-8;  // |G' M_d^-1 p| at or below this skips the optimisation
  double p = 1e-6;  // clamp of the Pendubot gyroscopic solution
};

/// Additive decomposition of one control evaluation.
///   u      = u_ki + u_pe + u_damp + lambda_uan x,   x = G' M_d^-1 p
///   u_ovki = u_ki + lambda_uan x
/// phi is ||u_ovki||_inf, which equals the optimal value on the Th1 branch.
struct ControlBreakdown {
  Vec u;
  Vec u_ki;
  Vec u_pe;
  Vec u_damp;
  Vec u_ovki;
  Vec x;
  double phi = 0.0;
  Mat lambda_uan;
  Branch selected = Branch::Ida;
};

Vec u_kinetic(const MechanicalModel& model, const ShapingDesign& design,
              const State& s);

ControlBreakdown u_ida(const MechanicalModel& model,
                       const ShapingDesign& design, const State& s);

ControlBreakdown u_th1(const MechanicalModel& model,
                       const ShapingDesign& design, const State& s,
                       double x_threshold = Thresholds{}.x);

/// Whichever of u_ida / u_th1 has the smaller ||u||_inf; ties pick Ida.
ControlBreakdown u_reduced(const MechanicalModel& model,
                           const ShapingDesign& design, const State& s,
                           double x_threshold = Thresholds{}.x);

ControlBreakdown evaluate(Controller c, const MechanicalModel& model,
                          const ShapingDesign& design, const State& s,
                          const Thresholds& th = {});

/// Lambda = Lambda_k + G Lambda_uan G' - G K_v G'.
Mat assemble_lambda(const MechanicalModel& model, const ShapingDesign& design,
                    const State& s, const Mat& lambda_uan);

struct PdeResiduals {
  Vec kinetic;    // size n - m
  Vec potential;  // size n - m
};

/// Left-hand sides of the kinetic and potential matching equations with
/// Lambda = Lambda_k (+ G lambda_uan G' if given). Empty when fully actuated.
PdeResiduals pde_residuals(const MechanicalModel& model,
                           const ShapingDesign& design, const State& s,
                           const std::optional<Mat>& lambda_uan = std::nullopt);

/// Unactuated component of grad(p'M^-1 p) - M_d M^-1 grad(p'M_d^-1 p).
double pendubot_kinetic_mismatch(const MechanicalModel& model,
                                 const ShapingDesign& design, const State& s);

/// Skew J2 = [[0, j], [-j, 0]] solving the kinetic matching equation for a
/// two-DOF system actuated through G = (1, 0)'. j = 0 when
/// |(M_d^-1 p)_1| < p_threshold.
Mat pendubot_j2(const MechanicalModel& model, const ShapingDesign& design,
                const State& s, double p_threshold);

// ---------------------------------------------------------------------------
// Catalog designs

struct PendubotGains {
  double rho = 10.0;
  double k3 = 1.0;
  double kp = 1.0;
  double kv = 10.0;
};

/// M_d = k3 [[rho, c1 - c2], [c1 - c2, c3 cos q2 - c2]],
/// V_d = c5 g / k3 (cos(q1 + q2) + 1) + kp/2 (q2 + 2 q1 - 2 pi)^2,
/// Lambda_k from pendubot_j2. Targets the upright equilibrium (pi, 0).
class PendubotDesign final : public ShapingDesign {
 public:
  PendubotDesign(const Pendubot& model, PendubotGains gains,
                 double p_threshold = Thresholds{}.p);

  Mat mass_d(const Vec& q) const override;
  MatList mass_d_partials(const Vec& q) const override;
  double potential_d(const Vec& q) const override;
  Vec potential_d_grad(const Vec& q) const override;
  Mat lambda_k(const MechanicalModel& model, const State& s) const override;
  const Mat& damping() const override { return kv_; }
  const Vec& q_star() const override { return q_star_; }

  const PendubotGains& gains() const { return gains_; }

 private:
  PendubotGains gains_;
  double c1_, c2_, c3_, c5_, g_;
  double p_threshold_;
  Mat kv_;
  Vec q_star_;
};

struct TouchGains {
  double kappa = 0.001;
  Vec kp = Vec::Constant(3, 1.0);
  Mat kv = 0.3 * Mat::Identity(3, 3);
  Vec q_star = (Vec(3) << 0.5, 0.7853981633974483, -0.5).finished();
};

/// M_d = kappa I, V_d = sum kp_i log cosh(q_i - q*_i), Lambda_k = 0.
class TouchDesign final : public ShapingDesign {
 public:
  explicit TouchDesign(TouchGains gains = {});

  Mat mass_d(const Vec&) const override;
  MatList mass_d_partials(const Vec& q) const override;
  double potential_d(const Vec& q) const override;
  Vec potential_d_grad(const Vec& q) const override;
  Mat lambda_k(const MechanicalModel& model, const State& s) const override;
  const Mat& damping() const override { return gains_.kv; }
  const Vec& q_star() const override { return gains_.q_star; }

 private:
  TouchGains gains_;
};

/// Constant M_d, quadratic V_d = 1/2 (q - q*)' K_p (q - q*), Lambda_k = 0.
/// Pairs with QuadraticModel for user-defined experiments.
class QuadraticDesign final : public ShapingDesign {
 public:
  QuadraticDesign(Mat mass_d, Mat kp, Mat kv, Vec q_star);

  Mat mass_d(const Vec&) const override { return mass_d_; }
  double potential_d(const Vec& q) const override;
  Vec potential_d_grad(const Vec& q) const override;
  Mat lambda_k(const MechanicalModel& model, const State& s) const override;
  const Mat& damping() const override { return kv_; }
  const Vec& q_star() const override { return q_star_; }

 private:
  Mat mass_d_;
  Mat kp_;
  Mat kv_;
  Vec q_star_;
};

}  // namespace kinshape
