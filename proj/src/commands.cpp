#include "kinshape/commands.hpp"

#include "kinshape/config.hpp"
#include "kinshape/report.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace kinshape {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kEquilibriumGradTol = 1e-8;
constexpr double kEquilibriumHessTol = -1e-6;
constexpr double kRandomOracleTol = 1e-9;
constexpr double kRandomWitnessTol = -1e-9;

// Runs `body`, mapping library exceptions onto exit codes.
template <typename Fn>
int guarded(std::ostream& err, Fn&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DivergenceError& e) {
    err << "divergence: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const InvariantError& e) {
    err << "invariant violation: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const ModelError& e) {
    err << "invariant violation: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

CheckResult make_check(std::string name, CheckKind kind, double tolerance) {
  CheckResult c;
  c.name = std::move(name);
  c.kind = kind;
  c.tolerance = tolerance;
  return c;
}

ExperimentConfig load(const fs::path& path, const CommandOptions& opt) {
  ExperimentConfig cfg = load_config_file(path);
  if (opt.controller) cfg.sim.controller = *opt.controller;
  if (opt.out_dir) cfg.output_dir = *opt.out_dir;
  if (opt.samples) {
    if (*opt.samples < 1) throw ConfigError("--samples: must be >= 1");
    cfg.verify_samples = *opt.samples;
  }
  if (opt.seed) cfg.verify_seed = *opt.seed;
  return cfg;
}

void write_run(const fs::path& dir, const ExperimentConfig& cfg,
               Controller controller, const Trajectory& traj,
               const Metrics& m) {
  fs::create_directories(dir);
  if (cfg.write_csv) write_trajectory_csv(dir / "trajectory.csv", traj);
  if (cfg.write_json) {
    json j = to_json(m);
    j["controller"] = to_string(controller);
    j["switch_count"] = traj.switch_count;
    j["samples"] = traj.size();
    j["config"] = cfg.describe();
    write_json(dir / "metrics.json", j);
  }
}

}  // namespace

Vec parse_csv_vector(const std::string& text) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos)
      throw std::invalid_argument("empty entry in '" + text + "'");
    const std::string tok = item.substr(first, last - first + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || !std::isfinite(v))
      throw std::invalid_argument("not a finite number: '" + tok + "'");
    vals.push_back(v);
  }
  if (vals.empty() || text.back() == ',')
    throw std::invalid_argument("expected a comma-separated list of numbers");
  return Eigen::Map<Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

int cmd_simulate(const fs::path& config, const CommandOptions& opt,
                 std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load(config, opt);
    const auto model = cfg.make_model();
    const auto design = cfg.make_design(*model);
    validate_design(*model, *design);
    const Trajectory traj = integrate(*model, *design, cfg.sim);
    const Metrics m = metrics(traj, design->q_star(), cfg.settle_tol);
    write_run(cfg.output_dir, cfg, cfg.sim.controller, traj, m);
    out << to_string(cfg.sim.controller) << ": peak |u|_inf "
        << format_double(m.peak_u_inf) << ", peak |u_ovki|_inf "
        << format_double(m.peak_uovki_inf) << ", settled "
        << (m.settled ? "yes" : "no") << ", switches " << traj.switch_count
        << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_compare(const fs::path& config, const CommandOptions& opt,
                std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load(config, opt);
    const auto model = cfg.make_model();
    const auto design = cfg.make_design(*model);
    validate_design(*model, *design);
    const auto runs = integrate_all(*model, *design, cfg.sim, true);

    constexpr std::array kOrder{Controller::Ida, Controller::Th1,
                                Controller::Reduced};
    json summary;
    summary["config"] = cfg.describe();
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const Metrics m =
          metrics(runs[i], design->q_star(), cfg.settle_tol, &runs[0]);
      const char* name = to_string(kOrder[i]);
      write_run(cfg.output_dir / name, cfg, kOrder[i], runs[i], m);
      summary["controllers"][name] = {
          {"peak_u_inf", m.peak_u_inf},
          {"peak_uovki_inf", m.peak_uovki_inf},
          {"reduction_pct", *m.reduction_vs},
          {"switch_count", runs[i].switch_count},
          {"settled", m.settled},
          {"final_q_error", to_json(m.final_q_error)}};
      out << name << ": peak |u|_inf " << format_double(m.peak_u_inf)
          << ", reduction vs ida " << format_double(*m.reduction_vs)
          << " %, switches " << runs[i].switch_count << ", settled "
          << (m.settled ? "yes" : "no") << '\n';
    }
    fs::create_directories(cfg.output_dir);
    write_json(cfg.output_dir / "comparison.json", summary);
    return static_cast<int>(kExitOk);
  });
}

int cmd_solve(const std::string& x_csv, const std::string& b_csv,
              std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Vec x = parse_csv_vector(x_csv);
    const Vec b = parse_csv_vector(b_csv);
    if (x.size() != b.size())
      throw std::invalid_argument("x and b must have the same length");
    out << to_json(solve(x, b), x, b).dump(2) << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_verify(const fs::path& config, const CommandOptions& opt,
               std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load(config, opt);
    const auto model = cfg.make_model();
    const auto design = cfg.make_design(*model);

    StateSweepOptions sweep_opt;
    sweep_opt.samples = cfg.verify_samples;
    sweep_opt.seed = cfg.verify_seed;
    sweep_opt.thresholds = cfg.sim.thresholds;
    std::vector<CheckResult> checks =
        state_sweep(*model, *design, cfg.verify_box, sweep_opt, Exec::Parallel);

    // Equilibrium of the design
    const Vec& qs = design->q_star();
    const int n = model->dof();
    CheckResult grad = make_check("design_equilibrium_grad", CheckKind::AtMost, kEquilibriumGradTol);
    grad.worst = design->potential_d_grad(qs).lpNorm<Eigen::Infinity>();
    grad.evaluated = 1;
    grad.worst_index = 0;
    Mat hess(n, n);
    for (int i = 0; i < n; ++i) {
      const double h = 1e-5 * std::max(1.0, std::abs(qs[i]));
      Vec qp = qs, qm = qs;
      qp[i] += h;
      qm[i] -= h;
      hess.col(i) = (design->potential_d_grad(qp) - design->potential_d_grad(qm)) /
                    (qp[i] - qm[i]);
    }
    CheckResult hess_check = make_check("design_equilibrium_hessian", CheckKind::AtLeast, kEquilibriumHessTol);
    hess_check.worst = -max_sym_eigenvalue(-hess);
    hess_check.evaluated = 1;
    hess_check.worst_index = 0;
    checks.push_back(grad);
    checks.push_back(hess_check);

    // Closed form against the oracle on random instances, n = 1..6
    ShapeSweepSummary total;
    total.min_witness_margin = std::numeric_limits<double>::infinity();
    long instances = 0;
    for (int dim = 1; dim <= 6; ++dim) {
      const int count = std::max(1, cfg.verify_samples / 6);
      const auto inst = random_instances(dim, count, cfg.verify_seed + dim);
      const auto s = shape_sweep(inst, 20, cfg.verify_seed + dim, Exec::Parallel);
      total.max_oracle_dev = std::max(total.max_oracle_dev, s.max_oracle_dev);
      total.min_witness_margin =
          std::min(total.min_witness_margin, s.min_witness_margin);
      instances += s.instances;
    }
    CheckResult oracle = make_check("theorem1_random_oracle", CheckKind::AtMost, kRandomOracleTol);
    oracle.worst = total.max_oracle_dev;
    oracle.evaluated = instances;
    CheckResult witness = make_check("theorem1_random_witness", CheckKind::AtLeast, kRandomWitnessTol);
    witness.worst = total.min_witness_margin;
    witness.evaluated = instances;
    checks.push_back(oracle);
    checks.push_back(witness);

    json report;
    report["model"] = cfg.model_name;
    report["samples"] = cfg.verify_samples;
    report["seed"] = cfg.verify_seed;
    report["box"] = {{"q_low", to_json(cfg.verify_box.q_low)},
                     {"q_high", to_json(cfg.verify_box.q_high)},
                     {"p_low", to_json(cfg.verify_box.p_low)},
                     {"p_high", to_json(cfg.verify_box.p_high)}};
    const CheckResult* worst = nullptr;
    for (const auto& c : checks) {
      json j = to_json(c);
      if (c.worst_index >= 0 && c.skipped.empty() &&
          c.name.rfind("design_", 0) != 0 && c.name.rfind("theorem1_random", 0) != 0) {
        const State s = sample_state(cfg.verify_box, cfg.verify_seed,
                                     static_cast<std::uint64_t>(c.worst_index));
        j["worst_state"] = {{"q", to_json(s.q)}, {"p", to_json(s.p)}};
      }
      report["checks"][c.name] = j;
      out << (c.skipped.empty() ? (c.passed() ? "ok      " : "FAILED  ")
                                : "skipped ")
          << c.name;
      if (c.skipped.empty())
        out << "  worst " << format_double(c.worst) << " (tol "
            << (c.kind == CheckKind::AtMost ? "<= " : ">= ")
            << format_double(c.tolerance) << ")";
      else
        out << "  " << c.skipped;
      out << '\n';
      if (!c.passed() && (!worst || c.breach() > worst->breach())) worst = &c;
    }
    report["passed"] = worst == nullptr;
    if (worst) report["worst_offender"] = worst->name;
    fs::create_directories(cfg.output_dir);
    write_json(cfg.output_dir / "verify_report.json", report);

    if (worst) {
      err << "verify: check '" << worst->name << "' breached its tolerance (worst "
          << format_double(worst->worst) << ", tolerance "
          << format_double(worst->tolerance) << ")\n";
      return static_cast<int>(kExitVerifyBreach);
    }
    return static_cast<int>(kExitOk);
  });
}

}  // namespace kinshape
