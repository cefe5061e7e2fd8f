#include "kinshape/sim.hpp"

#include <cmath>
#include <exception>
#include <sstream>

namespace kinshape {

namespace {

constexpr double kMomentumBound = 1e6;

using ControlLaw = std::function<ControlBreakdown(const State&)>;
using EnergyFn = std::function<double(const State&)>;

Trajectory run(const MechanicalModel& model, const SimConfig& cfg,
               const ControlLaw& law, const EnergyFn& energy) {
  cfg.validate();
  const int n = model.dof();
  if (cfg.initial_state.q.size() != n || cfg.initial_state.p.size() != n)
    throw std::invalid_argument("sim.initial_state: dimension must match the model");

  const long steps = cfg.step_count();
  const double h = cfg.dt / cfg.substeps;
  Trajectory traj;
  const std::size_t expected =
      static_cast<std::size_t>(steps / cfg.record_stride + 2);
  traj.times.reserve(expected);
  traj.states.reserve(expected);
  traj.controls.reserve(expected);
  traj.hd.reserve(expected);

  State s = cfg.initial_state;
  std::optional<Branch> last;
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    ControlBreakdown c = law(s);
    if (last && *last != c.selected) ++traj.switch_count;
    last = c.selected;

    if (k % cfg.record_stride == 0 || k == steps) {
      traj.times.push_back(t);
      traj.states.push_back(s);
      traj.hd.push_back(energy(s));
      traj.controls.push_back(c);
    }
    if (k == steps) break;

    for (int j = 0; j < cfg.substeps; ++j) s = rk4_step(model, s, c.u, h);
    if (!s.finite() || s.p.lpNorm<Eigen::Infinity>() > kMomentumBound) {
      std::ostringstream os;
      os << "state diverged at t = " << static_cast<double>(k + 1) * cfg.dt;
      throw DivergenceError(os.str(), static_cast<double>(k + 1) * cfg.dt);
    }
  }
  return traj;
}

}  // namespace

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("sim.dt: must be a positive finite number");
  if (!(t_final >= dt) || !std::isfinite(t_final))
    throw std::invalid_argument("sim.t_final: must be finite and >= dt");
  if (substeps < 1) throw std::invalid_argument("sim.substeps: must be >= 1");
  if (record_stride < 1)
    throw std::invalid_argument("sim.record_stride: must be >= 1");
  if (!initial_state.finite())
    throw std::invalid_argument("sim.initial_state: entries must be finite");
  if (initial_state.q.size() != initial_state.p.size())
    throw std::invalid_argument("sim.initial_state: q and p sizes differ");
}

long SimConfig::step_count() const { return std::lround(t_final / dt); }

State rk4_step(const MechanicalModel& model, const State& s, const Vec& u,
               double h) {
  const StateRate k1 = plant_rhs(model, s, u);
  const StateRate k2 = plant_rhs(
      model, {s.q + 0.5 * h * k1.qdot, s.p + 0.5 * h * k1.pdot}, u);
  const StateRate k3 = plant_rhs(
      model, {s.q + 0.5 * h * k2.qdot, s.p + 0.5 * h * k2.pdot}, u);
  const StateRate k4 =
      plant_rhs(model, {s.q + h * k3.qdot, s.p + h * k3.pdot}, u);
  return {s.q + h / 6.0 * (k1.qdot + 2.0 * k2.qdot + 2.0 * k3.qdot + k4.qdot),
          s.p + h / 6.0 * (k1.pdot + 2.0 * k2.pdot + 2.0 * k3.pdot + k4.pdot)};
}

Trajectory integrate(const MechanicalModel& model, const ShapingDesign& design,
                     const SimConfig& cfg) {
  const auto law = [&](const State& s) {
    return evaluate(cfg.controller, model, design, s, cfg.thresholds);
  };
  const auto energy = [&](const State& s) {
    return desired_hamiltonian(design, s);
  };
  return run(model, cfg, law, energy);
}

Trajectory integrate_unforced(const MechanicalModel& model,
                              const SimConfig& cfg) {
  const int m = model.actuators();
  const auto law = [m](const State&) {
    ControlBreakdown c;
    c.u = c.u_ki = c.u_pe = c.u_damp = c.u_ovki = Vec::Zero(m);
    c.lambda_uan = Mat::Zero(m, m);
    return c;
  };
  const auto energy = [&](const State& s) { return hamiltonian(model, s); };
  return run(model, cfg, law, energy);
}

std::array<Trajectory, 3> integrate_all(const MechanicalModel& model,
                                        const ShapingDesign& design,
                                        const SimConfig& cfg, bool parallel) {
  constexpr std::array kControllers{Controller::Ida, Controller::Th1,
                                    Controller::Reduced};
  std::array<Trajectory, 3> out;
  std::array<std::exception_ptr, 3> errors;
#pragma omp parallel for schedule(static, 1) if (parallel)
  for (int i = 0; i < 3; ++i) {
    try {
      SimConfig c = cfg;
      c.controller = kControllers[static_cast<std::size_t>(i)];
      out[static_cast<std::size_t>(i)] = integrate(model, design, c);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

Metrics metrics(const Trajectory& traj, const Vec& q_star, double settle_tol,
                const Trajectory* baseline) {
  if (traj.size() == 0) throw std::invalid_argument("metrics: empty trajectory");
  Metrics mt;
  const Eigen::Index m = traj.controls.front().u.size();
  mt.peak_u_per_channel = Vec::Zero(m);
  for (const auto& c : traj.controls) {
    mt.peak_u_per_channel = mt.peak_u_per_channel.cwiseMax(c.u.cwiseAbs());
    mt.peak_uovki_inf =
        std::max(mt.peak_uovki_inf, c.u_ovki.lpNorm<Eigen::Infinity>());
  }
  mt.peak_u_inf = m > 0 ? mt.peak_u_per_channel.maxCoeff() : 0.0;
  mt.final_q_error = traj.states.back().q - q_star;
  mt.settled = mt.final_q_error.lpNorm<Eigen::Infinity>() <= settle_tol;
  if (baseline) {
    const Metrics base = metrics(*baseline, q_star, settle_tol);
    mt.reduction_vs = base.peak_u_inf > 0.0
                          ? 100.0 * (1.0 - mt.peak_u_inf / base.peak_u_inf)
                          : 0.0;
  }
  return mt;
}

double dissipation_fraction(const Trajectory& traj, double tol) {
  if (traj.hd.size() < 2) return 1.0;
  std::size_t ok = 0;
  for (std::size_t k = 0; k + 1 < traj.hd.size(); ++k)
    if (traj.hd[k + 1] - traj.hd[k] <= tol) ++ok;
  return static_cast<double>(ok) / static_cast<double>(traj.hd.size() - 1);
}

}  // namespace kinshape
