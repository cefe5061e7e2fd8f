#pragma once

// Batch verification kernels. Each sweep evaluates independent samples and
// comes in two flavours: a plain serial loop, kept as the reference, and an
// OpenMP-parallel loop. Samples draw from their own RNG streams and results
// are folded in index order, so both flavours return identical numbers.

#include "kinshape/idapbc.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace kinshape {

enum class Exec { Serial, Parallel };

/// Deterministic per-sample generator; independent of thread scheduling.
std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index);

// ---------------------------------------------------------------------------
// Theorem-1 instance sweep

struct ShapeInstance {
  Vec x;
  Vec b;
};

/// Entries uniform in [-range, range]; x is redrawn until |x|_1 > 1e-6.
std::vector<ShapeInstance> random_instances(int n, int count,
                                            std::uint64_t seed,
                                            double range = 10.0);

/// Random A with A + A' <= 0. Half are unstructured (skew plus -B B'), half
/// are feasible perturbations of `near` (pass an empty matrix to disable).
Mat random_feasible(std::mt19937_64& rng, int n, const Mat& near);

struct ShapeSweepSummary {
  long instances = 0;
  double max_oracle_dev = 0.0;       // |phi - oracle_phi|
  double max_closed_form_dev = 0.0;  // |phi - max(0, x'b/|x|_1)|
  double min_witness_margin = 0.0;   // min ||A x - b||_inf - phi
  double max_skew_dev = 0.0;         // max |A_w + A_w'|
  double max_sym_dev = 0.0;          // max |A_s - (a_s/|x|^2) I|
  double max_a_s = -1e300;           // must stay <= 0
  double max_orthogonality = 0.0;    // |v'x| / (|v||x|)
  double max_residual_dev = 0.0;     // | ||A x - b||_inf - phi |
  double max_cancel_residual = 0.0;  // ||A x - b||_inf where x'b <= 0
  double max_xi_spread = 0.0;        // spread of |xi_i| over x_i != 0
  double max_phi_sym_eig = -1e300;   // largest eig of sym(A*)

  bool operator==(const ShapeSweepSummary&) const = default;
};

ShapeSweepSummary shape_sweep(std::span<const ShapeInstance> instances,
                              int witnesses, std::uint64_t seed, Exec exec,
                              double oracle_tol = 1e-12);

// ---------------------------------------------------------------------------
// Sampled-state sweep over a model/design pair

struct StateBox {
  Vec q_low, q_high, p_low, p_high;
};

struct StateSweepOptions {
  int samples = 1000;
  std::uint64_t seed = 1;
  Thresholds thresholds;
};

enum class CheckKind { AtMost, AtLeast };

struct CheckResult {
  std::string name;
  CheckKind kind = CheckKind::AtMost;
  double tolerance = 0.0;
  double worst = 0.0;
  long evaluated = 0;
  long worst_index = -1;
  std::string skipped;  // reason; empty when the check ran

  bool passed() const;
  /// How far past the tolerance the worst sample is (0 when passing).
  double breach() const;
  bool operator==(const CheckResult&) const = default;
};

/// Draws `samples` states uniformly from the box and checks gradients against
/// finite differences, positive definiteness of M and M_d, negative
/// semidefiniteness of the assembled Lambda, the closed-form optimum against
/// the bisection oracle, the reduced-law selection, and (underactuated only)
/// the matching residuals and their invariance under G Lambda_uan G'.
std::vector<CheckResult> state_sweep(const MechanicalModel& model,
                                     const ShapingDesign& design,
                                     const StateBox& box,
                                     const StateSweepOptions& opt, Exec exec);

State sample_state(const StateBox& box, std::uint64_t seed,
                   std::uint64_t index);

}  // namespace kinshape
