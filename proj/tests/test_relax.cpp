#include "milo/relax/builder.hpp"
#include "milo/relax/envelope.hpp"
#include "milo/relax/fix.hpp"
#include "milo/relax/rollout.hpp"
#include "milo/relax/serialize.hpp"
#include "milo/qp/solver.hpp"
#include "milo/srb/model.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace milo;
using namespace milo::relax;

namespace {

srb::ProblemInstance standing_instance(int horizon = 5) {
  srb::ProblemInstance inst;
  inst.horizon_n = horizon;
  inst.x0.p = {0, 0, 0.20};
  for (int i = 0; i < 4; ++i) {
    inst.feet0.p_w[i] = inst.x0.p + inst.params.nominal_arm(i);
    inst.feet0.c[i] = 1;
    inst.feet0.f[i] = {0, 0, inst.params.mass * 9.81 / 4};
  }
  inst.regions.push_back(srb::TerrainRegion::flat_patch(0, 0, 5, 5));
  inst.z_ref = 0.20;
  return inst;
}

// full vector satisfying the envelope model for given factor values
Vec envelope_point(const MixedIntegerQP& m, std::initializer_list<std::pair<int, double>> vals) {
  Vec x = Vec::Zero(m.num_vars());
  for (auto [col, v] : vals) x[col] = v;
  for (const auto& g : m.selectors) {
    if (g.bins.empty()) continue;
    int r = g.region_of(x[g.var]);
    for (auto [col, v] : g.values_for_region(r)) x[col] = v;
  }
  return x;
}

}  // namespace

TEST_CASE("mccormick rows: corner tightness and midpoint looseness") {
  // corner (2,3) of [0,2]x[0,3] forces z = 6
  Interval corner = mccormick_interval({0, 2}, {0, 3}, 2.0, 3.0);
  CHECK(corner.lo == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(corner.hi == doctest::Approx(6.0).epsilon(1e-12));

  // midpoint of [-1,1]^2: feasible z spans [-1,1]
  Interval mid = mccormick_interval({-1, 1}, {-1, 1}, 0.0, 0.0);
  CHECK(mid.lo == doctest::Approx(-1.0));
  CHECK(mid.hi == doctest::Approx(1.0));
}

TEST_CASE("mccormick soundness over random boxes") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-4, 4);
  for (int t = 0; t < 100000; ++t) {
    double a = d(rng), b = d(rng), c = d(rng), e = d(rng);
    Interval ix{std::min(a, b), std::max(a, b) + 0.1};
    Interval iy{std::min(c, e), std::max(c, e) + 0.1};
    std::uniform_real_distribution<double> dx(ix.lo, ix.hi), dy(iy.lo, iy.hi);
    double x = dx(rng), y = dy(rng);
    auto rows = mccormick(ix, iy);
    double z = x * y;
    for (const auto& r : rows) CHECK(r.cx * x + r.cy * y + r.cz * z <= r.rhs + 1e-9);
  }
}

TEST_CASE("mccormick rejects degenerate intervals") {
  CHECK_THROWS_AS((void)mccormick({0.0, 1e-13}, {0, 1}), DegenerateInterval);
}

TEST_CASE("segmented envelope with 1x1 regions is exactly mccormick") {
  ClassSpec xs{{0, 2}, 1}, ys{{0, 3}, 1};
  auto env = segmented_envelope(xs, ys);
  CHECK(env.model.num_binaries() == 0);
  REQUIRE(env.model.num_rows() == 4);

  auto rows = mccormick(xs.range, ys.range);
  Eigen::MatrixXd A = Eigen::MatrixXd(env.model.cons.A);
  for (int i = 0; i < 4; ++i) {
    CHECK(A(i, env.x) == doctest::Approx(rows[i].cx));
    CHECK(A(i, env.y) == doctest::Approx(rows[i].cy));
    CHECK(A(i, env.z) == doctest::Approx(rows[i].cz));
    CHECK(env.model.cons.u[i] == doctest::Approx(rows[i].rhs));
  }
}

TEST_CASE("segmented envelope gap bound on [-1,1]^2 with 4x4 regions") {
  ClassSpec xs{{-1, 1}, 4}, ys{{-1, 1}, 4};
  double max_gap = 0.0;
  const int grid = 101;
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      double x = -1.0 + 2.0 * i / (grid - 1);
      double y = -1.0 + 2.0 * j / (grid - 1);
      Interval cx = xs.range.sub(xs.range.region_of(x, 4), 4);
      Interval cy = ys.range.sub(ys.range.region_of(y, 4), 4);
      Interval z = mccormick_interval(cx, cy, x, y);
      max_gap = std::max({max_gap, z.hi - x * y, x * y - z.lo});
    }
  CHECK(max_gap <= 0.0625 + 1e-12);
  CHECK(max_gap >= 0.05);  // the bound is nearly attained
}

TEST_CASE("segmented envelope feasibility sampling (one-hot and coded)") {
  for (auto kind : {SelectorGroup::Kind::OneHot, SelectorGroup::Kind::Coded}) {
    ClassSpec xs{{-0.08, 0.08}, 4}, ys{{-15, 15}, kind == SelectorGroup::Kind::Coded ? 16 : 4};
    auto env = segmented_envelope(xs, ys, SelectorGroup::Kind::OneHot, kind);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dx(xs.range.lo, xs.range.hi);
    std::uniform_real_distribution<double> dy(ys.range.lo, ys.range.hi);
    double worst = 0.0;
    for (int t = 0; t < 100000; ++t) {
      double x = dx(rng), y = dy(rng);
      Vec pt = envelope_point(env.model, {{env.x, x}, {env.y, y}, {env.z, x * y}});
      worst = std::max(worst, env.model.max_violation(pt));
    }
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("refining the segmentation never increases the measured gap") {
  ClassSpec xs{{-1, 1}, 4}, ys{{-10, 10}, 4};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dx(-1, 1), dy(-10, 10);
  for (int t = 0; t < 2000; ++t) {
    double x = dx(rng), y = dy(rng);
    double gap[2];
    for (int lvl = 0; lvl < 2; ++lvl) {
      int r = 4 << lvl;
      Interval cx = xs.range.sub(xs.range.region_of(x, r), r);
      Interval cy = ys.range.sub(ys.range.region_of(y, r), r);
      Interval z = mccormick_interval(cx, cy, x, y);
      gap[lvl] = std::max(z.hi - x * y, x * y - z.lo);
    }
    CHECK(gap[1] <= gap[0] + 1e-12);
  }
}

TEST_CASE("trilinear envelope: corner tightness and soundness") {
  ClassSpec xs{{0.5, 2}, 2}, ys{{0.25, 3}, 2}, ws{{1, 4}, 2}, mid{{-1, 1}, 2};
  auto env = trilinear_envelope(xs, ys, ws, mid);

  // all-positive corner forces a = x*y*w through the chain
  {
    double x = 2, y = 3, w = 4;
    Interval s1 = mccormick_interval(xs.range.sub(1, 2), ys.range.sub(1, 2), x, y);
    CHECK(s1.hi - s1.lo <= 1e-9);
    Interval a12r = Interval::product(xs.range, ys.range);
    Interval s2 =
        mccormick_interval(a12r.sub(a12r.region_of(x * y, 2), 2), ws.range.sub(1, 2), x * y, w);
    CHECK(s2.hi - s2.lo <= 1e-9);
    CHECK(s2.lo == doctest::Approx(x * y * w));
  }

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> dx(0.5, 2), dy(0.25, 3), dw(1, 4);
  double worst = 0.0;
  for (int t = 0; t < 100000; ++t) {
    double x = dx(rng), y = dy(rng), w = dw(rng);
    Vec pt = envelope_point(
        env.model,
        {{env.x, x}, {env.y, y}, {env.w, w}, {env.a12, x * y}, {env.a, x * y * w}});
    worst = std::max(worst, env.model.max_violation(pt));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("piecewise trig band: exactness, width bound, soundness") {
  ClassSpec angle{{-1.5707963267948966, 1.5707963267948966}, 4};
  auto env = piecewise_trig(angle);

  // theta = 0 sits on a region boundary; the band contains (sin, cos) = (0, 1)
  Vec pt = envelope_point(env.model, {{env.theta, 0.0}, {env.s, 0.0}, {env.c, 1.0}});
  CHECK(env.model.max_violation(pt) <= 1e-9);

  double wmax = std::max(trig_band_max_width(TrigFn::Sin, angle.range, 4),
                         trig_band_max_width(TrigFn::Cos, angle.range, 4));
  CHECK(wmax <= 1.0 - std::cos(3.14159265358979323846 / 8) + 1e-9);

  for (int i = 0; i <= 2000; ++i) {
    double th = angle.range.lo + angle.range.width() * i / 2000.0;
    Vec q = envelope_point(env.model, {{env.theta, th}, {env.s, std::sin(th)}, {env.c, std::cos(th)}});
    CHECK(env.model.max_violation(q) <= 1e-9);
  }
}

TEST_CASE("approx_error") {
  CHECK(approx_error(0.9, 1.0) == doctest::Approx(0.1));
  CHECK(approx_error(0.37, 0.37) == 0.0);
  CHECK(approx_error(0.0, 0.0) == 0.0);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> d(-5, 5);
  for (int t = 0; t < 1000; ++t) {
    double a = d(rng), b = d(rng);
    CHECK(approx_error(a, b) == doctest::Approx(approx_error(b, a)));
  }
}

TEST_CASE("build_miqp: binary count matches the documented formula") {
  auto inst = standing_instance(5);
  auto seg = SegmentationSpec::paper_default();
  auto m = build_miqp(inst, seg);
  CHECK(m.num_binaries() == expected_binary_count(5, 1, seg));

  // paper-reported online problem shape: 488 binaries, 44478 constraints
  CHECK(m.num_binaries() >= 488 * 0.8);
  CHECK(m.num_binaries() <= 488 * 1.2);
  CHECK(m.num_rows() >= 44478 * 0.7);
  CHECK(m.num_rows() <= 44478 * 1.3);

  auto i9 = standing_instance(9);
  auto m9 = build_miqp(i9, seg);
  CHECK(m9.num_binaries() == expected_binary_count(9, 1, seg));
}

TEST_CASE("build_miqp: P is PSD by the eigenvalue probe") {
  auto inst = standing_instance(4);
  auto m = build_miqp(inst, SegmentationSpec::planar_desk());
  CHECK(m.min_eigenvalue_probe() >= -1e-9);
}

TEST_CASE("build_miqp is deterministic") {
  auto inst = standing_instance(4);
  auto seg = SegmentationSpec::paper_default();
  auto a = miqp_to_json(build_miqp(inst, seg)).dump();
  auto b = miqp_to_json(build_miqp(inst, seg)).dump();
  CHECK(a == b);
}

TEST_CASE("build_miqp rejects out-of-range initial states") {
  auto inst = standing_instance(4);
  inst.x0.theta_dot[1] = 50.0;  // outside the rate segmentation
  CHECK_THROWS_AS((void)build_miqp(inst, SegmentationSpec::paper_default()), InfeasibleBounds);
}

TEST_CASE("equilibrium stance rollout is feasible for the full model") {
  auto inst = standing_instance(5);
  auto m = build_miqp(inst, SegmentationSpec::paper_default());

  std::vector<srb::SrbState> states{inst.x0};
  std::vector<srb::FootState> feet(5, inst.feet0);
  for (int n = 0; n + 1 < 5; ++n)
    states.push_back(srb::simulate_step(states.back(), inst.feet0, inst.params));

  Vec x = trajectory_vector(m, inst, states, feet);
  CHECK(m.max_violation(x) <= 1e-9);

  auto a = assignment_from_vector(m, x);
  CHECK_NOTHROW(a.validate(m));
}

TEST_CASE("simulate_step rollouts satisfy every equality row") {
  auto inst = standing_instance(9);
  inst.x0.v = {0.05, 0.0, 0.0};
  inst.x0.theta = {0.01, -0.02, 0.015};
  inst.x0.theta_dot = {0.1, 0.15, -0.05};
  auto m = build_miqp(inst, SegmentationSpec::paper_default());

  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> d(-0.3, 0.3);
  std::vector<srb::SrbState> states{inst.x0};
  std::vector<srb::FootState> feet;
  for (int n = 0; n < 9; ++n) {
    srb::FootState fs = inst.feet0;
    for (int i = 0; i < 4; ++i)
      fs.f[i] = srb::Vec3(d(rng), d(rng), inst.params.mass * 9.81 / 4 + d(rng));
    feet.push_back(fs);
    if (n + 1 < 9) states.push_back(srb::simulate_step(states.back(), fs, inst.params));
  }
  Vec x = trajectory_vector(m, inst, states, feet);
  CHECK(m.max_violation(x, /*equality_only=*/true) <= 1e-9);
}

TEST_CASE("fix_integers: equilibrium all-stance QP has (near) zero cost") {
  auto inst = standing_instance(4);
  inst.v_ref.setZero();
  inst.theta_ref.setZero();
  inst.z_ref = inst.x0.p[2];
  auto m = build_miqp(inst, SegmentationSpec::planar_desk());

  std::vector<srb::SrbState> states{inst.x0};
  std::vector<srb::FootState> feet(4, inst.feet0);
  for (int n = 0; n + 1 < 4; ++n)
    states.push_back(srb::simulate_step(states.back(), inst.feet0, inst.params));
  Vec traj = trajectory_vector(m, inst, states, feet);
  auto assign = assignment_from_vector(m, traj);

  auto fixed = fix_integers(m, assign);
  REQUIRE_FALSE(fixed.trivially_infeasible);

  auto ext_rows = fixed.A.rows();
  CHECK(ext_rows < m.num_rows());  // deactivated big-M rows got dropped

  // append variable-bound rows and solve
  std::vector<Eigen::Triplet<double>> trips;
  for (int j = 0; j < fixed.A.outerSize(); ++j)
    for (SpMat::InnerIterator it(fixed.A, j); it; ++it)
      trips.emplace_back(it.row(), j, it.value());
  int extra = 0;
  std::vector<double> lv(fixed.l.data(), fixed.l.data() + fixed.l.size());
  std::vector<double> uv(fixed.u.data(), fixed.u.data() + fixed.u.size());
  for (int j = 0; j < fixed.num_vars(); ++j)
    if (std::isfinite(fixed.lb[j]) || std::isfinite(fixed.ub[j])) {
      trips.emplace_back(ext_rows + extra, j, 1.0);
      lv.push_back(fixed.lb[j]);
      uv.push_back(fixed.ub[j]);
      ++extra;
    }
  SpMat A(ext_rows + extra, fixed.num_vars());
  A.setFromTriplets(trips.begin(), trips.end());
  Vec l = Eigen::Map<const Vec>(lv.data(), lv.size());
  Vec u = Eigen::Map<const Vec>(uv.data(), uv.size());

  qp::QpSettings st;
  st.eps_abs = 1e-6;
  st.eps_rel = 1e-6;
  st.max_iter = 20000;
  auto sol = qp::solve_qp(fixed.P, fixed.q, A, l, u, st);
  REQUIRE(sol.status == qp::QpStatus::Solved);
  double cost = sol.objective + fixed.obj_const;
  CHECK(cost <= 1e-4);
  // the known equilibrium trajectory is feasible, so the optimum cannot
  // exceed its cost
  CHECK(cost <= m.objective_at(traj) + 1e-6);
}

TEST_CASE("fix_integers rejects a broken assignment") {
  auto inst = standing_instance(3);
  auto m = build_miqp(inst, SegmentationSpec::planar_desk());
  std::vector<srb::SrbState> states{inst.x0};
  std::vector<srb::FootState> feet(3, inst.feet0);
  for (int n = 0; n + 1 < 3; ++n)
    states.push_back(srb::simulate_step(states.back(), inst.feet0, inst.params));
  auto assign = assignment_from_vector(m, trajectory_vector(m, inst, states, feet));

  // flipping one contact without updating the linked z group is inconsistent
  auto broken = assign;
  int c_pos = m.binary_pos(m.names.at("c[1][0]"));
  REQUIRE(c_pos >= 0);
  broken.value[c_pos] = 1 - broken.value[c_pos];
  CHECK_THROWS_AS((void)fix_integers(m, broken), InconsistentAssignment);
}

TEST_CASE("planted stance while the body drifts is infeasible after fixing") {
  // 1.4 m/s of initial speed moves the body 11 cm in one knot; a toe pinned
  // by no-slip then leaves the moment-arm segmentation range
  auto inst = standing_instance(3);
  inst.planar = true;
  inst.x0.v = {1.4, 0, 0};
  auto m = build_miqp(inst, SegmentationSpec::planar_desk());

  std::vector<srb::SrbState> states{inst.x0};
  std::vector<srb::FootState> feet(3, inst.feet0);
  for (int n = 0; n + 1 < 3; ++n)
    states.push_back(srb::simulate_step(states.back(), inst.feet0, inst.params));
  auto assign = assignment_from_vector(m, trajectory_vector(m, inst, states, feet));
  // force the all-stance gait
  for (int n = 1; n < 3; ++n)
    for (int i = 0; i < 4; ++i) {
      assign.value[m.binary_pos(m.names.at("c[" + std::to_string(n) + "][" + std::to_string(i) +
                                           "]"))] = 1;
      assign.value[m.binary_pos(m.names.at("z[" + std::to_string(n) + "][" + std::to_string(i) +
                                           "][0]"))] = 1;
    }

  auto fixed = fix_integers(m, assign);
  bool infeasible = fixed.trivially_infeasible;
  if (!infeasible) {
    std::vector<Eigen::Triplet<double>> trips;
    for (int j = 0; j < fixed.A.outerSize(); ++j)
      for (SpMat::InnerIterator it(fixed.A, j); it; ++it)
        trips.emplace_back(it.row(), j, it.value());
    int rows = fixed.A.rows(), extra = 0;
    std::vector<double> lv(fixed.l.data(), fixed.l.data() + fixed.l.size());
    std::vector<double> uv(fixed.u.data(), fixed.u.data() + fixed.u.size());
    for (int j = 0; j < fixed.num_vars(); ++j)
      if (std::isfinite(fixed.lb[j]) || std::isfinite(fixed.ub[j])) {
        trips.emplace_back(rows + extra, j, 1.0);
        lv.push_back(fixed.lb[j]);
        uv.push_back(fixed.ub[j]);
        ++extra;
      }
    SpMat A(rows + extra, fixed.num_vars());
    A.setFromTriplets(trips.begin(), trips.end());
    qp::QpSettings st;
    st.max_iter = 20000;
    auto sol = qp::solve_qp(fixed.P, fixed.q, A, Eigen::Map<const Vec>(lv.data(), lv.size()),
                            Eigen::Map<const Vec>(uv.data(), uv.size()), st);
    infeasible = sol.status == qp::QpStatus::PrimalInfeasible;
  }
  CHECK(infeasible);
}
