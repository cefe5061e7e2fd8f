// Serial reference vs OpenMP kernels for the verification sweeps.

#include "kinshape/sweep.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>

using namespace kinshape;

template <typename Fn>
static double seconds(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int main(int argc, char** argv) {
  const int count = argc > 1 ? std::atoi(argv[1]) : 20000;
  std::printf("threads: %d\n", omp_get_max_threads());

  const auto inst = random_instances(6, count, 7);
  ShapeSweepSummary serial, parallel;
  const double ts = seconds([&] { serial = shape_sweep(inst, 50, 7, Exec::Serial); });
  const double tp = seconds([&] { parallel = shape_sweep(inst, 50, 7, Exec::Parallel); });
  std::printf("shape_sweep   n=6 x %d, 50 witnesses: serial %.3f s, omp %.3f s, speedup %.2f, identical %s\n",
              count, ts, tp, ts / tp, serial == parallel ? "yes" : "NO");

  const Pendubot model;
  const PendubotDesign design(model, PendubotGains{});
  StateBox box{Vec(2), Vec(2), Vec::Constant(2, -2.0), Vec::Constant(2, 2.0)};
  box.q_low << 2.74, -0.4;
  box.q_high << 3.54, 0.4;
  StateSweepOptions opt;
  opt.samples = count;
  std::vector<CheckResult> rs, rp;
  const double ss = seconds([&] { rs = state_sweep(model, design, box, opt, Exec::Serial); });
  const double sp = seconds([&] { rp = state_sweep(model, design, box, opt, Exec::Parallel); });
  std::printf("state_sweep   pendubot x %d: serial %.3f s, omp %.3f s, speedup %.2f, identical %s\n",
              count, ss, sp, ss / sp, rs == rp ? "yes" : "NO");
  return serial == parallel && rs == rp ? 0 : 1;
}
