#include "kinshape/mechmodel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kinshape {

std::string format_vec(const Vec& v) {
  std::ostringstream os;
  os.precision(6);
  os << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << v[i];
  }
  os << ")";
  return os.str();
}

MatList finite_difference_partials(const std::function<Mat(const Vec&)>& f,
                                   const Vec& q) {
  MatList out;
  out.reserve(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(q[i]));
    Vec qp = q, qm = q;
    qp[i] += h;
    qm[i] -= h;
    out.push_back((f(qp) - f(qm)) / (qp[i] - qm[i]));
  }
  return out;
}

MatList MechanicalModel::mass_partials(const Vec& q) const {
  return finite_difference_partials([this](const Vec& x) { return mass(x); },
                                    q);
}

Eigen::LLT<Mat> factor_spd(const Mat& m, const char* what, const Vec& q) {
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success) {
    throw ModelError(std::string(what) +
                     " is not symmetric positive definite at q = " +
                     format_vec(q));
  }
  return llt;
}

Vec grad_q_quadratic(const Mat& w, std::span<const Mat> w_partials,
                     const Vec& p, QuadraticForm form) {
  Vec out(static_cast<Eigen::Index>(w_partials.size()));
  if (form == QuadraticForm::Direct) {
    for (std::size_t i = 0; i < w_partials.size(); ++i)
      out[static_cast<Eigen::Index>(i)] = p.dot(w_partials[i] * p);
    return out;
  }
  // d(W^-1)/dq_i = -W^-1 (dW/dq_i) W^-1
  Eigen::LLT<Mat> llt(w);
  if (llt.info() != Eigen::Success)
    throw ModelError("grad_q_quadratic: matrix is not positive definite");
  const Vec wp = llt.solve(p);
  for (std::size_t i = 0; i < w_partials.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = -wp.dot(w_partials[i] * wp);
  return out;
}

double hamiltonian(const MechanicalModel& model, const State& s) {
  const auto llt = factor_spd(model.mass(s.q), "mass matrix", s.q);
  return 0.5 * s.p.dot(llt.solve(s.p)) + model.potential(s.q);
}

Vec hamiltonian_grad_q(const MechanicalModel& model, const State& s) {
  const Mat m = model.mass(s.q);
  factor_spd(m, "mass matrix", s.q);
  const MatList dm = model.mass_partials(s.q);
  return 0.5 * grad_q_quadratic(m, dm, s.p, QuadraticForm::Inverse) +
         model.potential_grad(s.q);
}

StateRate plant_rhs(const MechanicalModel& model, const State& s,
                    const Vec& u) {
  const Mat m = model.mass(s.q);
  const auto llt = factor_spd(m, "mass matrix", s.q);
  const Vec minv_p = llt.solve(s.p);
  const MatList dm = model.mass_partials(s.q);
  Vec grad_h = model.potential_grad(s.q);
  for (std::size_t i = 0; i < dm.size(); ++i)
    grad_h[static_cast<Eigen::Index>(i)] -= 0.5 * minv_p.dot(dm[i] * minv_p);
  return {minv_p, -grad_h + model.input_map() * u};
}

Mat left_annihilator(const Mat& g) {
  const Eigen::Index n = g.rows();
  const Eigen::Index m = g.cols();
  if (m >= n) return Mat(0, n);
  Eigen::JacobiSVD<Mat> svd(g, Eigen::ComputeFullU);
  if (svd.rank() != m) throw ModelError("input map must have full column rank");
  return svd.matrixU().rightCols(n - m).transpose();
}

// ---------------------------------------------------------------------------

void PendubotParams::validate() const {
  const double a = c1(), b = c2(), c = c3();
  if (!(g > 0.0)) throw ModelError("pendubot: gravity must be positive");
  if (!(a > 0.0) || !(b > 0.0))
    throw ModelError("pendubot: c1 and c2 must be positive");
  if (!(a * b > c * c))
    throw ModelError("pendubot: c1*c2 > c3^2 required for M(q) > 0");
  if (!(c4() > 0.0) || !(c5() > 0.0))
    throw ModelError("pendubot: c4 and c5 must be positive");
}

Pendubot::Pendubot(PendubotParams params) : params_(params) {
  params_.validate();
  c1_ = params_.c1();
  c2_ = params_.c2();
  c3_ = params_.c3();
  c4_ = params_.c4();
  c5_ = params_.c5();
  g_ = Mat(2, 1);
  g_ << 1.0, 0.0;
  g_perp_ = Mat(1, 2);
  g_perp_ << 0.0, 1.0;
}

Mat Pendubot::mass(const Vec& q) const {
  const double c = std::cos(q[1]);
  Mat m(2, 2);
  m << c1_ + c2_ + 2.0 * c3_ * c, c2_ + c3_ * c,  //
      c2_ + c3_ * c, c2_;
  return m;
}

MatList Pendubot::mass_partials(const Vec& q) const {
  const double s = std::sin(q[1]);
  Mat d2(2, 2);
  d2 << -2.0 * c3_ * s, -c3_ * s,  //
      -c3_ * s, 0.0;
  return {Mat::Zero(2, 2), d2};
}

double Pendubot::potential(const Vec& q) const {
  return -c4_ * params_.g * std::cos(q[0]) -
         c5_ * params_.g * std::cos(q[0] + q[1]);
}

Vec Pendubot::potential_grad(const Vec& q) const {
  const double s12 = std::sin(q[0] + q[1]);
  Vec grad(2);
  grad << params_.g * (c4_ * std::sin(q[0]) + c5_ * s12),
      params_.g * c5_ * s12;
  return grad;
}

// ---------------------------------------------------------------------------

void TouchParams::validate() const {
  if (!(phi1 > 0.0) || !(phi3 > 0.0))
    throw ModelError("touch: phi1 and phi3 must be positive");
  // M22 M33 - M23^2 = phi1 phi3 - phi2^2 cos^2(q3) must stay positive.
  if (!(phi1 * phi3 > phi2 * phi2))
    throw ModelError("touch: phi1*phi3 > phi2^2 required for M(q) > 0");
  if (!(g > 0.0)) throw ModelError("touch: gravity must be positive");
}

Touch::Touch(TouchParams params) : params_(params) {
  params_.validate();
  g_ = Mat::Identity(3, 3);
  g_perp_ = Mat(0, 3);
}

Mat Touch::mass(const Vec& q) const {
  const auto& k = params_;
  const double c2 = std::cos(q[1]);
  const double c23 = std::cos(q[1] + q[2]);
  const double s23 = std::sin(q[1] + q[2]);
  const double c3 = std::cos(q[2]);
  Mat m = Mat::Zero(3, 3);
  m(0, 0) = k.phi1 * c2 * c2 + k.phi2 * c2 * c23 + k.phi3 * s23 * s23;
  m(1, 1) = k.phi1 + 2.0 * k.phi2 * c3 + k.phi3;
  m(1, 2) = m(2, 1) = k.phi2 * c3 + k.phi3;
  m(2, 2) = k.phi3;
  return m;
}

MatList Touch::mass_partials(const Vec& q) const {
  const auto& k = params_;
  const double q2 = q[1], q3 = q[2];
  const double s3 = std::sin(q3);
  MatList d(3, Mat::Zero(3, 3));
  d[1](0, 0) = -k.phi1 * std::sin(2.0 * q2) -
               k.phi2 * std::sin(2.0 * q2 + q3) +
               k.phi3 * std::sin(2.0 * (q2 + q3));
  d[2](0, 0) = -k.phi2 * std::cos(q2) * std::sin(q2 + q3) +
               k.phi3 * std::sin(2.0 * (q2 + q3));
  d[2](1, 1) = -2.0 * k.phi2 * s3;
  d[2](1, 2) = d[2](2, 1) = -k.phi2 * s3;
  return d;
}

double Touch::potential(const Vec& q) const {
  return params_.g *
         (params_.phi4 * std::sin(q[1]) + params_.phi5 * std::sin(q[1] + q[2]));
}

Vec Touch::potential_grad(const Vec& q) const {
  const double c23 = std::cos(q[1] + q[2]);
  Vec grad(3);
  grad << 0.0, params_.g * (params_.phi4 * std::cos(q[1]) + params_.phi5 * c23),
      params_.g * params_.phi5 * c23;
  return grad;
}

// ---------------------------------------------------------------------------

QuadraticModel::QuadraticModel(Mat mass, Mat stiffness, Mat input_map)
    : mass_(std::move(mass)),
      stiffness_(std::move(stiffness)),
      g_(std::move(input_map)) {
  const Eigen::Index n = mass_.rows();
  if (mass_.cols() != n || stiffness_.rows() != n || stiffness_.cols() != n ||
      g_.rows() != n || g_.cols() < 1 || g_.cols() > n)
    throw ModelError("custom model: inconsistent matrix dimensions");
  if (!mass_.isApprox(mass_.transpose(), 0.0))
    throw ModelError("custom model: mass matrix must be symmetric");
  factor_spd(mass_, "custom mass matrix", Vec::Zero(n));
  g_perp_ = left_annihilator(g_);
}

}  // namespace kinshape
