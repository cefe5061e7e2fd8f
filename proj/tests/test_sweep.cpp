#include "kinshape/sweep.hpp"
#include "support.hpp"

#include <doctest.h>

#include <numbers>

using namespace kinshape;

namespace {

StateBox pendubot_box() {
  StateBox box{Vec(2), Vec(2), Vec::Constant(2, -2.0), Vec::Constant(2, 2.0)};
  box.q_low << std::numbers::pi - 0.4, -0.4;
  box.q_high << std::numbers::pi + 0.4, 0.4;
  return box;
}

}  // namespace

TEST_CASE("per-sample seeds are deterministic and distinct") {
  CHECK(sample_seed(1, 5) == sample_seed(1, 5));
  CHECK(sample_seed(1, 5) != sample_seed(1, 6));
  CHECK(sample_seed(1, 5) != sample_seed(2, 5));
}

TEST_CASE("random instances") {
  const auto a = random_instances(4, 100, 9);
  const auto b = random_instances(4, 100, 9);
  REQUIRE(a.size() == 100);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].b == b[i].b);
    CHECK(a[i].x.norm() > kDegenerateNorm);
    CHECK(a[i].x.lpNorm<Eigen::Infinity>() <= 10.0);
    CHECK(a[i].b.lpNorm<Eigen::Infinity>() <= 10.0);
  }
}

TEST_CASE("property: random feasible matrices are feasible") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 500; ++k) {
    const int n = 1 + k % 6;
    const Mat a = random_feasible(rng, n, -Mat::Identity(n, n));
    CHECK(max_sym_eigenvalue(a) <= 1e-12);
  }
}

TEST_CASE("shape sweep: serial reference equals the parallel kernel") {
  for (int n = 1; n <= 6; ++n) {
    const auto inst = random_instances(n, 300, 100 + n);
    const auto s = shape_sweep(inst, 20, 5, Exec::Serial);
    const auto p = shape_sweep(inst, 20, 5, Exec::Parallel);
    CHECK(s == p);
    CHECK(s.instances == 300);
    CHECK(s.max_oracle_dev <= 1e-9);
    CHECK(s.max_closed_form_dev == 0.0);
    CHECK(s.min_witness_margin >= -1e-9);
    CHECK(s.max_a_s <= 0.0);
    CHECK(s.max_skew_dev == 0.0);
    CHECK(s.max_residual_dev <= 1e-12 * 10);
    CHECK(s.max_cancel_residual <= 1e-12 * 10);
  }
}

TEST_CASE("state sweep: serial reference equals the parallel kernel") {
  const Pendubot pend;
  const PendubotDesign pd(pend, {});
  StateSweepOptions opt;
  opt.samples = 300;
  const auto s = state_sweep(pend, pd, pendubot_box(), opt, Exec::Serial);
  const auto p = state_sweep(pend, pd, pendubot_box(), opt, Exec::Parallel);
  CHECK(s == p);
  for (const auto& c : s) {
    CAPTURE(c.name);
    CHECK(c.passed());
    CHECK(c.skipped.empty());
  }
}

TEST_CASE("state sweep flags a broken design") {
  const Pendubot pend;
  PendubotGains g;
  g.kv = -1.0;
  const PendubotDesign pd(pend, g);
  StateSweepOptions opt;
  opt.samples = 50;
  const auto r = state_sweep(pend, pd, pendubot_box(), opt, Exec::Serial);
  bool lambda_failed = false;
  for (const auto& c : r)
    if (c.name == "lambda_nsd") lambda_failed = !c.passed() && c.breach() > 0.0;
  CHECK(lambda_failed);
}

TEST_CASE("fully actuated sweeps skip the matching checks") {
  const Touch touch;
  const TouchDesign td;
  StateBox box{Vec::Constant(3, -1.0), Vec::Constant(3, 1.0), Vec::Constant(3, -0.01),
               Vec::Constant(3, 0.01)};
  StateSweepOptions opt;
  opt.samples = 100;
  int skipped = 0;
  for (const auto& c : state_sweep(touch, td, box, opt, Exec::Parallel)) {
    CAPTURE(c.name);
    CHECK(c.passed());
    if (!c.skipped.empty()) {
      CHECK(c.skipped == "fully actuated");
      ++skipped;
    }
  }
  CHECK(skipped == 3);
}

TEST_CASE("sample_state stays in the box and is reproducible") {
  const StateBox box = pendubot_box();
  for (std::uint64_t i = 0; i < 200; ++i) {
    const State s = sample_state(box, 4, i);
    CHECK((s.q.array() >= box.q_low.array()).all());
    CHECK((s.q.array() <= box.q_high.array()).all());
    CHECK((s.p.array() >= box.p_low.array()).all());
    CHECK((s.p.array() <= box.p_high.array()).all());
    CHECK(sample_state(box, 4, i).q == s.q);
  }
}

TEST_CASE("check results") {
  CheckResult at_most;
  at_most.kind = CheckKind::AtMost;
  at_most.tolerance = 1.0;
  at_most.worst = 0.5;
  CHECK(at_most.passed());
  CHECK(at_most.breach() == 0.0);
  at_most.worst = 3.0;
  CHECK_FALSE(at_most.passed());
  CHECK(at_most.breach() > 0.0);

  CheckResult at_least;
  at_least.kind = CheckKind::AtLeast;
  at_least.tolerance = 0.0;
  at_least.worst = -1.0;
  CHECK_FALSE(at_least.passed());
  at_least.skipped = "fully actuated";
  CHECK(at_least.passed());
}
