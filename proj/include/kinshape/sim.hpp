#pragma once

#include "kinshape/idapbc.hpp"

#include <array>
#include <functional>
#include <optional>

namespace kinshape {

struct SimConfig {
  double t_final = 1.0;
  /// Control period. The input is sampled once per period and held.
  double dt = 1e-3;
  /// RK4 steps per control period (integration step = dt / substeps).
  int substeps = 1;
  State initial_state;
  Controller controller = Controller::Reduced;
  Thresholds thresholds;
  int record_stride = 1;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  long step_count() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  std::vector<ControlBreakdown> controls;
  std::vector<double> hd;
  /// Number of Ida <-> Th1 branch changes over all control periods.
  int switch_count = 0;

  std::size_t size() const { return times.size(); }
};

/// One classical RK4 step of the plant with u held constant.
State rk4_step(const MechanicalModel& model, const State& s, const Vec& u,
               double h);

/// Closed-loop integration under cfg.controller. Records every
/// record_stride-th period plus the final state.
/// Throws DivergenceError when the state is non-finite or |p|_inf > 1e6, and
/// ModelError / InvariantError when M or M_d stop being positive definite.
Trajectory integrate(const MechanicalModel& model, const ShapingDesign& design,
                     const SimConfig& cfg);

/// Free flow (u = 0). The hd column holds the plant Hamiltonian H.
Trajectory integrate_unforced(const MechanicalModel& model,
                              const SimConfig& cfg);

/// Runs Ida, Th1 and Reduced from the same configuration. The three
/// integrations are independent and run on separate OpenMP threads when
/// `parallel` is set; results are identical either way.
std::array<Trajectory, 3> integrate_all(const MechanicalModel& model,
                                        const ShapingDesign& design,
                                        const SimConfig& cfg, bool parallel);

struct Metrics {
  double peak_u_inf = 0.0;
  Vec peak_u_per_channel;
  double peak_uovki_inf = 0.0;
  Vec final_q_error;
  bool settled = false;
  std::optional<double> reduction_vs;  // percent, against a baseline
};

/// Throws std::invalid_argument on an empty trajectory.
Metrics metrics(const Trajectory& traj, const Vec& q_star, double settle_tol,
                const Trajectory* baseline = nullptr);

/// Fraction of consecutive recorded samples with hd[k+1] - hd[k] <= tol.
double dissipation_fraction(const Trajectory& traj, double tol);

}  // namespace kinshape
