#include "kinshape/sweep.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace kinshape {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <typename Fn>
void for_each_index(long count, Exec exec, Fn&& fn) {
  if (exec == Exec::Serial) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < count; ++i) fn(i);
}

Mat uniform_matrix(std::mt19937_64& rng, int rows, int cols, double range) {
  std::uniform_real_distribution<double> d(-range, range);
  Mat a(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) a(i, j) = d(rng);
  return a;
}

// --- Theorem-1 instances ----------------------------------------------------

struct ShapeRecord {
  double oracle_dev, closed_form_dev, witness_margin, skew_dev, sym_dev, a_s,
      orthogonality, residual_dev, cancel_residual, xi_spread, sym_eig;
};

ShapeRecord check_shape(const ShapeInstance& inst, int witnesses,
                        std::uint64_t seed, double oracle_tol) {
  const Vec& x = inst.x;
  const Vec& b = inst.b;
  const auto n = static_cast<int>(x.size());
  const ShapeSolution sol = solve(x, b);
  const Mat a = sol.matrix();
  const double x_sq = x.squaredNorm();

  ShapeRecord r{};
  r.oracle_dev = std::abs(sol.phi - oracle_phi(x, b, oracle_tol));
  r.closed_form_dev = std::abs(sol.phi - std::max(0.0, x.dot(b) / x.lpNorm<1>()));
  r.skew_dev = (sol.a_skew + sol.a_skew.transpose()).cwiseAbs().maxCoeff();
  r.sym_dev = (sol.a_sym - (sol.a_s / x_sq) * Mat::Identity(n, n))
                  .cwiseAbs()
                  .maxCoeff();
  r.a_s = sol.a_s;
  const double vn = sol.v.norm() * x.norm();
  r.orthogonality = vn > 0.0 ? std::abs(sol.v.dot(x)) / vn : std::abs(sol.v.dot(x));
  const double res = (a * x - b).lpNorm<Eigen::Infinity>();
  r.residual_dev = std::abs(res - sol.phi);
  r.cancel_residual = x.dot(b) <= 0.0 ? res : 0.0;

  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (int i = 0; i < n; ++i) {
    if (x[i] == 0.0) continue;
    lo = std::min(lo, std::abs(sol.xi[i]));
    hi = std::max(hi, std::abs(sol.xi[i]));
  }
  r.xi_spread = hi - lo;
  r.sym_eig = max_sym_eigenvalue(a);

  std::mt19937_64 rng(seed);
  double margin = std::numeric_limits<double>::infinity();
  for (int w = 0; w < witnesses; ++w) {
    const Mat cand = random_feasible(rng, n, w % 2 ? a : Mat());
    margin = std::min(margin, (cand * x - b).lpNorm<Eigen::Infinity>() - sol.phi);
  }
  r.witness_margin = witnesses > 0 ? margin : 0.0;
  return r;
}

// --- sampled states ---------------------------------------------------------

enum Check : int {
  kGradH,
  kMassPartials,
  kMassPd,
  kMassDPd,
  kLambdaNsd,
  kTheorem1Oracle,
  kTh1Phi,
  kReducedNotWorse,
  kKineticResidual,
  kPotentialResidual,
  kAnnihilation,
  kEvaluation,
  kCheckCount
};

struct CheckSpec {
  const char* name;
  CheckKind kind;
  double tolerance;
};

constexpr CheckSpec kSpecs[kCheckCount] = {
    {"grad_h_fd", CheckKind::AtMost, 1e-5},
    {"mass_partials_fd", CheckKind::AtMost, 1e-5},
    {"mass_pd", CheckKind::AtLeast, 1e-12},
    {"mass_d_pd", CheckKind::AtLeast, 1e-12},
    {"lambda_nsd", CheckKind::AtMost, 1e-9},
    {"theorem1_oracle", CheckKind::AtMost, 1e-9},
    {"th1_phi_identity", CheckKind::AtMost, 1e-10},
    {"reduced_not_worse", CheckKind::AtMost, 0.0},
    {"kinetic_residual", CheckKind::AtMost, 1e-9},
    {"potential_residual", CheckKind::AtMost, 1e-9},
    {"annihilation", CheckKind::AtMost, 1e-13},
    {"evaluation_errors", CheckKind::AtMost, 0.0},
};

using StateRecord = std::array<double, kCheckCount>;

double min_eig(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (m + m.transpose()),
                                         Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

StateRecord check_state(const MechanicalModel& model,
                        const ShapingDesign& design, const State& s,
                        const Thresholds& th) {
  StateRecord r;
  r.fill(kNaN);
  r[kEvaluation] = 0.0;
  const int n = model.dof();
  const bool underactuated = model.annihilator().rows() > 0;

  try {
    const Mat mass = model.mass(s.q);
    r[kMassPd] = min_eig(mass);
    if (r[kMassPd] <= 0.0) return r;

    // dH/dq against central differences of H
    const Vec grad = hamiltonian_grad_q(model, s);
    Vec fd(n);
    for (int i = 0; i < n; ++i) {
      const double h = 1e-5 * std::max(1.0, std::abs(s.q[i]));
      State sp = s, sm = s;
      sp.q[i] += h;
      sm.q[i] -= h;
      fd[i] = (hamiltonian(model, sp) - hamiltonian(model, sm)) /
              (sp.q[i] - sm.q[i]);
    }
    r[kGradH] = (grad - fd).lpNorm<Eigen::Infinity>() /
                std::max(grad.lpNorm<Eigen::Infinity>(), 1e-6);

    const MatList dm = model.mass_partials(s.q);
    const MatList dm_fd = finite_difference_partials(
        [&model](const Vec& q) { return model.mass(q); }, s.q);
    double worst = 0.0;
    const double scale = mass.cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      worst = std::max(worst, (dm[k] - dm_fd[k]).cwiseAbs().maxCoeff() /
                                  std::max(dm[k].cwiseAbs().maxCoeff(), scale));
    }
    r[kMassPartials] = worst;

    r[kMassDPd] = min_eig(design.mass_d(s.q));
    if (r[kMassDPd] <= 0.0) return r;

    const ControlBreakdown ida = u_ida(model, design, s);
    const ControlBreakdown th1 = u_th1(model, design, s, th.x);
    const ControlBreakdown red = u_reduced(model, design, s, th.x);

    r[kLambdaNsd] =
        max_sym_eigenvalue(assemble_lambda(model, design, s, th1.lambda_uan));
    if (th1.selected == Branch::Th1) {
      r[kTheorem1Oracle] = std::abs(th1.phi - oracle_phi(th1.x, -th1.u_ki, 1e-12));
      r[kTh1Phi] = std::abs(th1.u_ovki.lpNorm<Eigen::Infinity>() - th1.phi);
    }
    r[kReducedNotWorse] = red.u.lpNorm<Eigen::Infinity>() -
                          ida.u.lpNorm<Eigen::Infinity>();

    if (underactuated) {
      const PdeResiduals plain = pde_residuals(model, design, s);
      const PdeResiduals shaped =
          pde_residuals(model, design, s, th1.lambda_uan);
      r[kPotentialResidual] = plain.potential.lpNorm<Eigen::Infinity>();
      r[kAnnihilation] =
          std::max((plain.kinetic - shaped.kinetic).lpNorm<Eigen::Infinity>(),
                   (plain.potential - shaped.potential).lpNorm<Eigen::Infinity>());
      // Inside the clamp band of the gyroscopic solution the kinetic equation
      // is intentionally left unsolved.
      const Vec md_inv_p = design.mass_d(s.q).llt().solve(s.p);
      const Vec w = model.input_map().transpose() * md_inv_p;
      if (w.lpNorm<Eigen::Infinity>() >= th.p)
        r[kKineticResidual] = plain.kinetic.lpNorm<Eigen::Infinity>();
    }
  } catch (const std::exception&) {
    r[kEvaluation] = 1.0;
  }
  return r;
}

}  // namespace

std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finaliser over (seed, index)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::vector<ShapeInstance> random_instances(int n, int count,
                                            std::uint64_t seed, double range) {
  std::vector<ShapeInstance> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    std::mt19937_64 rng(sample_seed(seed, static_cast<std::uint64_t>(i)));
    ShapeInstance inst;
    do {
      inst.x = uniform_matrix(rng, n, 1, range);
    } while (inst.x.lpNorm<1>() <= 1e-6);
    inst.b = uniform_matrix(rng, n, 1, range);
    out.push_back(std::move(inst));
  }
  return out;
}

Mat random_feasible(std::mt19937_64& rng, int n, const Mat& near) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Mat r = uniform_matrix(rng, n, n, 10.0);
  const Mat b = uniform_matrix(rng, n, n, 1.0);
  const Mat skew = r - r.transpose();
  const Mat nsd = -(b * b.transpose());
  if (near.size() == 0) return skew + 10.0 * unit(rng) * nsd;
  const double scale = std::pow(10.0, -6.0 * unit(rng));
  return near + scale * (0.1 * skew + unit(rng) * nsd);
}

ShapeSweepSummary shape_sweep(std::span<const ShapeInstance> instances,
                              int witnesses, std::uint64_t seed, Exec exec,
                              double oracle_tol) {
  const long count = static_cast<long>(instances.size());
  std::vector<ShapeRecord> records(instances.size());
  for_each_index(count, exec, [&](long i) {
    const auto k = static_cast<std::size_t>(i);
    records[k] = check_shape(instances[k], witnesses,
                             sample_seed(seed ^ 0xA5A5A5A5ull, k), oracle_tol);
  });

  ShapeSweepSummary s;
  s.instances = count;
  s.min_witness_margin = std::numeric_limits<double>::infinity();
  for (const auto& r : records) {
    s.max_oracle_dev = std::max(s.max_oracle_dev, r.oracle_dev);
    s.max_closed_form_dev = std::max(s.max_closed_form_dev, r.closed_form_dev);
    s.min_witness_margin = std::min(s.min_witness_margin, r.witness_margin);
    s.max_skew_dev = std::max(s.max_skew_dev, r.skew_dev);
    s.max_sym_dev = std::max(s.max_sym_dev, r.sym_dev);
    s.max_a_s = std::max(s.max_a_s, r.a_s);
    s.max_orthogonality = std::max(s.max_orthogonality, r.orthogonality);
    s.max_residual_dev = std::max(s.max_residual_dev, r.residual_dev);
    s.max_cancel_residual = std::max(s.max_cancel_residual, r.cancel_residual);
    s.max_xi_spread = std::max(s.max_xi_spread, r.xi_spread);
    s.max_phi_sym_eig = std::max(s.max_phi_sym_eig, r.sym_eig);
  }
  if (records.empty()) s.min_witness_margin = 0.0;
  return s;
}

// ---------------------------------------------------------------------------

bool CheckResult::passed() const {
  if (!skipped.empty()) return true;
  return kind == CheckKind::AtMost ? worst <= tolerance : worst >= tolerance;
}

double CheckResult::breach() const {
  if (passed()) return 0.0;
  const double gap = kind == CheckKind::AtMost ? worst - tolerance
                                               : tolerance - worst;
  return gap / std::max(std::abs(tolerance), 1e-300);
}

State sample_state(const StateBox& box, std::uint64_t seed,
                   std::uint64_t index) {
  std::mt19937_64 rng(sample_seed(seed, index));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  State s{Vec(box.q_low.size()), Vec(box.p_low.size())};
  for (Eigen::Index i = 0; i < s.q.size(); ++i)
    s.q[i] = box.q_low[i] + (box.q_high[i] - box.q_low[i]) * unit(rng);
  for (Eigen::Index i = 0; i < s.p.size(); ++i)
    s.p[i] = box.p_low[i] + (box.p_high[i] - box.p_low[i]) * unit(rng);
  return s;
}

std::vector<CheckResult> state_sweep(const MechanicalModel& model,
                                     const ShapingDesign& design,
                                     const StateBox& box,
                                     const StateSweepOptions& opt, Exec exec) {
  const int n = model.dof();
  if (box.q_low.size() != n || box.q_high.size() != n ||
      box.p_low.size() != n || box.p_high.size() != n)
    throw std::invalid_argument("state box dimension must match the model");

  std::vector<StateRecord> records(static_cast<std::size_t>(opt.samples));
  for_each_index(opt.samples, exec, [&](long i) {
    const auto k = static_cast<std::size_t>(i);
    records[k] = check_state(model, design, sample_state(box, opt.seed, k),
                             opt.thresholds);
  });

  const bool underactuated = model.annihilator().rows() > 0;
  std::vector<CheckResult> out;
  for (int c = 0; c < kCheckCount; ++c) {
    CheckResult r;
    r.name = kSpecs[c].name;
    r.kind = kSpecs[c].kind;
    r.tolerance = kSpecs[c].tolerance;
    r.worst = r.kind == CheckKind::AtMost ? -std::numeric_limits<double>::infinity()
                                          : std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < records.size(); ++k) {
      const double v = records[k][static_cast<std::size_t>(c)];
      if (std::isnan(v)) continue;
      ++r.evaluated;
      const bool worse = r.kind == CheckKind::AtMost ? v > r.worst : v < r.worst;
      if (worse || r.worst_index < 0) {
        r.worst = v;
        r.worst_index = static_cast<long>(k);
      }
    }
    const bool pde_check =
        c == kKineticResidual || c == kPotentialResidual || c == kAnnihilation;
    if (pde_check && !underactuated) r.skipped = "fully actuated";
    else if (r.evaluated == 0) r.skipped = "no applicable samples";
    if (!r.skipped.empty()) r.worst = 0.0;
    out.push_back(r);
  }
  return out;
}

}  // namespace kinshape
