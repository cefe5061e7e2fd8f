#include "kinshape/idapbc.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kinshape {

namespace {

// Quantities shared by every term of the control law at one state.
struct Terms {
  Mat m;
  Mat md;
  Eigen::LLT<Mat> m_llt;
  Eigen::LLT<Mat> md_llt;
  Mat md_minv;  // M_d M^-1
  Vec md_inv_p;
  Vec grad_k;   // grad(p' M^-1 p)
  Vec grad_kd;  // grad(p' M_d^-1 p)
};

Terms compute_terms(const MechanicalModel& model, const ShapingDesign& design,
                    const State& s) {
  Terms t;
  t.m = model.mass(s.q);
  t.m_llt = factor_spd(t.m, "mass matrix", s.q);
  t.md = design.mass_d(s.q);
  t.md_llt.compute(t.md);
  if (t.md_llt.info() != Eigen::Success)
    throw InvariantError("desired mass matrix M_d is not positive definite at q = " +
                         format_vec(s.q));
  // M_d M^-1 = (M^-1 M_d)' since both are symmetric.
  t.md_minv = t.m_llt.solve(t.md).transpose();
  t.md_inv_p = t.md_llt.solve(s.p);

  const MatList dm = model.mass_partials(s.q);
  const MatList dmd = design.mass_d_partials(s.q);
  const Vec m_inv_p = t.m_llt.solve(s.p);
  t.grad_k.resize(s.q.size());
  t.grad_kd.resize(s.q.size());
  for (std::size_t i = 0; i < dm.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    t.grad_k[k] = -m_inv_p.dot(dm[i] * m_inv_p);
    t.grad_kd[k] = -t.md_inv_p.dot(dmd[i] * t.md_inv_p);
  }
  return t;
}

Mat pseudo_inverse(const Mat& g) {
  const Mat gtg = g.transpose() * g;
  Eigen::LDLT<Mat> ldlt(gtg);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 0.0)
    throw ModelError("G'G is singular");
  return ldlt.solve(g.transpose());
}

Vec kinetic_from_terms(const MechanicalModel& model, const ShapingDesign& design,
                       const State& s, const Terms& t) {
  const Mat lk = design.lambda_k(model, s);
  const Vec inner =
      0.5 * t.grad_k - t.md_minv * (0.5 * t.grad_kd) + lk * t.md_inv_p;
  return pseudo_inverse(model.input_map()) * inner;
}

ControlBreakdown ida_from_terms(const MechanicalModel& model,
                                const ShapingDesign& design, const State& s,
                                const Terms& t) {
  const Mat& g = model.input_map();
  const Eigen::Index m = g.cols();
  ControlBreakdown c;
  c.u_ki = kinetic_from_terms(model, design, s, t);
  c.u_pe = pseudo_inverse(g) * (model.potential_grad(s.q) -
                                t.md_minv * design.potential_d_grad(s.q));
  c.x = g.transpose() * t.md_inv_p;
  c.u_damp = -design.damping() * c.x;
  c.u = c.u_ki + c.u_pe + c.u_damp;
  c.u_ovki = c.u_ki;
  c.phi = c.u_ovki.lpNorm<Eigen::Infinity>();
  c.lambda_uan = Mat::Zero(m, m);
  c.selected = Branch::Ida;
  return c;
}

ControlBreakdown th1_from_ida(const ControlBreakdown& ida, double x_threshold) {
  const double xn = ida.x.norm();
  if (xn <= x_threshold || xn < kDegenerateNorm ||
      ida.x.lpNorm<1>() < kDegenerateNorm)
    return ida;
  const ShapeSolution sol = solve(ida.x, -ida.u_ki);
  ControlBreakdown c = ida;
  c.lambda_uan = sol.matrix();
  const Vec shaped = c.lambda_uan * c.x;
  c.u = ida.u + shaped;
  c.u_ovki = ida.u_ki + shaped;
  c.phi = c.u_ovki.lpNorm<Eigen::Infinity>();
  c.selected = Branch::Th1;
  return c;
}

void check_dimensions(const MechanicalModel& model, const ShapingDesign& design,
                      const State& s) {
  const int n = model.dof();
  if (s.q.size() != n || s.p.size() != n)
    throw ModelError("state dimension does not match the model");
  if (design.damping().rows() != model.actuators() ||
      design.damping().cols() != model.actuators())
    throw ModelError("damping matrix must be m x m");
}

}  // namespace

MatList ShapingDesign::mass_d_partials(const Vec& q) const {
  return finite_difference_partials([this](const Vec& x) { return mass_d(x); },
                                    q);
}

double desired_hamiltonian(const ShapingDesign& design, const State& s) {
  Eigen::LLT<Mat> llt(design.mass_d(s.q));
  if (llt.info() != Eigen::Success)
    throw InvariantError("desired mass matrix M_d is not positive definite at q = " +
                         format_vec(s.q));
  return 0.5 * s.p.dot(llt.solve(s.p)) + design.potential_d(s.q);
}

void validate_design(const MechanicalModel& model,
                     const ShapingDesign& design) {
  const int n = model.dof();
  const int m = model.actuators();
  const Vec& qs = design.q_star();
  if (qs.size() != n) throw InvariantError("q_star must have n entries");
  const Mat md = design.mass_d(qs);
  if (md.rows() != n || md.cols() != n)
    throw InvariantError("M_d must be n x n");
  if (Eigen::LLT<Mat>(md).info() != Eigen::Success ||
      !md.isApprox(md.transpose(), 1e-12))
    throw InvariantError("M_d(q*) is not symmetric positive definite");

  const Mat& kv = design.damping();
  if (kv.rows() != m || kv.cols() != m)
    throw InvariantError("damping K_v must be m x m");
  if (!kv.isApprox(kv.transpose(), 1e-12) ||
      Eigen::LLT<Mat>(kv).info() != Eigen::Success)
    throw InvariantError("damping K_v is not symmetric positive definite");

  const Vec grad = design.potential_d_grad(qs);
  if (grad.lpNorm<Eigen::Infinity>() > 1e-8)
    throw InvariantError("grad V_d(q*) = " + format_vec(grad) + " is not zero");

  Mat hess(n, n);
  for (int i = 0; i < n; ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(qs[i]));
    Vec qp = qs, qm = qs;
    qp[i] += h;
    qm[i] -= h;
    hess.col(i) = (design.potential_d_grad(qp) - design.potential_d_grad(qm)) /
                  (qp[i] - qm[i]);
  }
  const Mat sym = 0.5 * (hess + hess.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-6)
    throw InvariantError("V_d does not have a local minimum at q*");

  const Mat lk = design.lambda_k(model, State{qs, Vec::Zero(n)});
  if (lk.rows() != n || lk.cols() != n)
    throw InvariantError("Lambda_k must be n x n");
}

const char* to_string(Branch b) { return b == Branch::Ida ? "IDA" : "TH1"; }

const char* to_string(Controller c) {
  switch (c) {
    case Controller::Ida:
      return "ida";
    case Controller::Th1:
      return "th1";
    case Controller::Reduced:
      return "reduced";
  }
  return "?";
}

Controller parse_controller(const std::string& s) {
  if (s == "ida") return Controller::Ida;
  if (s == "th1") return Controller::Th1;
  if (s == "reduced") return Controller::Reduced;
  throw std::invalid_argument("unknown controller '" + s +
                              "' (expected ida, th1 or reduced)");
}

Vec u_kinetic(const MechanicalModel& model, const ShapingDesign& design,
              const State& s) {
  check_dimensions(model, design, s);
  return kinetic_from_terms(model, design, s, compute_terms(model, design, s));
}

ControlBreakdown u_ida(const MechanicalModel& model,
                       const ShapingDesign& design, const State& s) {
  check_dimensions(model, design, s);
  return ida_from_terms(model, design, s, compute_terms(model, design, s));
}

ControlBreakdown u_th1(const MechanicalModel& model,
                       const ShapingDesign& design, const State& s,
                       double x_threshold) {
  return th1_from_ida(u_ida(model, design, s), x_threshold);
}

ControlBreakdown u_reduced(const MechanicalModel& model,
                           const ShapingDesign& design, const State& s,
                           double x_threshold) {
  ControlBreakdown ida = u_ida(model, design, s);
  ControlBreakdown th1 = th1_from_ida(ida, x_threshold);
  if (th1.u.lpNorm<Eigen::Infinity>() < ida.u.lpNorm<Eigen::Infinity>())
    return th1;
  return ida;
}

ControlBreakdown evaluate(Controller c, const MechanicalModel& model,
                          const ShapingDesign& design, const State& s,
                          const Thresholds& th) {
  switch (c) {
    case Controller::Ida:
      return u_ida(model, design, s);
    case Controller::Th1:
      return u_th1(model, design, s, th.x);
    case Controller::Reduced:
      return u_reduced(model, design, s, th.x);
  }
  throw std::invalid_argument("evaluate: bad controller");
}

Mat assemble_lambda(const MechanicalModel& model, const ShapingDesign& design,
                    const State& s, const Mat& lambda_uan) {
  const Mat& g = model.input_map();
  return design.lambda_k(model, s) + g * lambda_uan * g.transpose() -
         g * design.damping() * g.transpose();
}

PdeResiduals pde_residuals(const MechanicalModel& model,
                           const ShapingDesign& design, const State& s,
                           const std::optional<Mat>& lambda_uan) {
  const Mat& gp = model.annihilator();
  if (gp.rows() == 0) return {Vec(0), Vec(0)};
  check_dimensions(model, design, s);
  const Terms t = compute_terms(model, design, s);
  Mat lambda = design.lambda_k(model, s);
  if (lambda_uan) {
    const Mat& g = model.input_map();
    lambda += g * (*lambda_uan) * g.transpose();
  }
  PdeResiduals r;
  r.kinetic =
      gp * (t.grad_k - t.md_minv * t.grad_kd + 2.0 * lambda * t.md_inv_p);
  r.potential = gp * (model.potential_grad(s.q) -
                      t.md_minv * design.potential_d_grad(s.q));
  return r;
}

double pendubot_kinetic_mismatch(const MechanicalModel& model,
                                 const ShapingDesign& design, const State& s) {
  const Terms t = compute_terms(model, design, s);
  const Vec r = model.annihilator() * (t.grad_k - t.md_minv * t.grad_kd);
  return r[0];
}

Mat pendubot_j2(const MechanicalModel& model, const ShapingDesign& design,
                const State& s, double p_threshold) {
  const Mat& g = model.input_map();
  if (model.dof() != 2 || g.cols() != 1 || g(0, 0) != 1.0 || g(1, 0) != 0.0)
    throw std::invalid_argument(
        "pendubot_j2: requires n = 2, m = 1 and G = (1, 0)'");
  const Terms t = compute_terms(model, design, s);
  const double w = t.md_inv_p[0];
  Mat j2 = Mat::Zero(2, 2);
  if (std::abs(w) < p_threshold) return j2;
  const double mismatch =
      (model.annihilator() * (t.grad_k - t.md_minv * t.grad_kd))(0);
  // G_perp J2 M_d^-1 p = -j w, so 2 J2 M_d^-1 p cancels the mismatch.
  const double j = mismatch / (2.0 * w);
  j2(0, 1) = j;
  j2(1, 0) = -j;
  return j2;
}

// ---------------------------------------------------------------------------

PendubotDesign::PendubotDesign(const Pendubot& model, PendubotGains gains,
                               double p_threshold)
    : gains_(gains), p_threshold_(p_threshold) {
  const auto& pp = model.params();
  c1_ = pp.c1();
  c2_ = pp.c2();
  c3_ = pp.c3();
  c5_ = pp.c5();
  g_ = pp.g;
  if (gains_.k3 == 0.0) throw InvariantError("pendubot design: k3 must be nonzero");
  kv_ = Mat::Constant(1, 1, gains_.kv);
  q_star_ = Vec(2);
  q_star_ << std::numbers::pi, 0.0;
}

Mat PendubotDesign::mass_d(const Vec& q) const {
  Mat md(2, 2);
  md << gains_.rho, c1_ - c2_,  //
      c1_ - c2_, -c2_ + c3_ * std::cos(q[1]);
  return gains_.k3 * md;
}

MatList PendubotDesign::mass_d_partials(const Vec& q) const {
  Mat d2 = Mat::Zero(2, 2);
  d2(1, 1) = -gains_.k3 * c3_ * std::sin(q[1]);
  return {Mat::Zero(2, 2), d2};
}

double PendubotDesign::potential_d(const Vec& q) const {
  const double e = q[1] + 2.0 * q[0] - 2.0 * std::numbers::pi;
  return c5_ * g_ / gains_.k3 * (std::cos(q[0] + q[1]) + 1.0) +
         0.5 * gains_.kp * e * e;
}

Vec PendubotDesign::potential_d_grad(const Vec& q) const {
  const double e = q[1] + 2.0 * q[0] - 2.0 * std::numbers::pi;
  const double s = -c5_ * g_ / gains_.k3 * std::sin(q[0] + q[1]);
  Vec grad(2);
  grad << s + 2.0 * gains_.kp * e, s + gains_.kp * e;
  return grad;
}

Mat PendubotDesign::lambda_k(const MechanicalModel& model,
                             const State& s) const {
  return pendubot_j2(model, *this, s, p_threshold_);
}

// ---------------------------------------------------------------------------

TouchDesign::TouchDesign(TouchGains gains) : gains_(std::move(gains)) {
  if (gains_.kp.size() != 3 || gains_.q_star.size() != 3)
    throw InvariantError("touch design: kp and q_star need 3 entries");
  if (!(gains_.kappa > 0.0))
    throw InvariantError("touch design: kappa must be positive");
}

Mat TouchDesign::mass_d(const Vec&) const {
  return gains_.kappa * Mat::Identity(3, 3);
}

MatList TouchDesign::mass_d_partials(const Vec&) const {
  return MatList(3, Mat::Zero(3, 3));
}

double TouchDesign::potential_d(const Vec& q) const {
  double v = 0.0;
  for (int i = 0; i < 3; ++i) {
    // integral of tanh from 0 to e is log cosh(e)
    const double a = std::abs(q[i] - gains_.q_star[i]);
    v += gains_.kp[i] * (a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2);
  }
  return v;
}

Vec TouchDesign::potential_d_grad(const Vec& q) const {
  return gains_.kp.cwiseProduct((q - gains_.q_star).array().tanh().matrix());
}

Mat TouchDesign::lambda_k(const MechanicalModel&, const State&) const {
  return Mat::Zero(3, 3);
}

// ---------------------------------------------------------------------------

QuadraticDesign::QuadraticDesign(Mat mass_d, Mat kp, Mat kv, Vec q_star)
    : mass_d_(std::move(mass_d)),
      kp_(std::move(kp)),
      kv_(std::move(kv)),
      q_star_(std::move(q_star)) {
  const Eigen::Index n = q_star_.size();
  if (mass_d_.rows() != n || mass_d_.cols() != n || kp_.rows() != n ||
      kp_.cols() != n)
    throw InvariantError("custom design: inconsistent matrix dimensions");
}

double QuadraticDesign::potential_d(const Vec& q) const {
  const Vec e = q - q_star_;
  return 0.5 * e.dot(kp_ * e);
}

Vec QuadraticDesign::potential_d_grad(const Vec& q) const {
  return 0.5 * (kp_ + kp_.transpose()) * (q - q_star_);
}

Mat QuadraticDesign::lambda_k(const MechanicalModel&, const State& s) const {
  return Mat::Zero(s.q.size(), s.q.size());
}

}  // namespace kinshape
