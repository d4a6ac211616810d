#include "milo/srb/model.hpp"

#include "milo/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace milo;
using namespace milo::srb;

namespace {
const double kPi = 3.14159265358979323846;

Vec3 random_angles(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-kPi / 2, kPi / 2);
  return Vec3(d(rng), d(rng), d(rng));
}

// Four toes under the shoulders at ground level, body at nominal height.
FootState nominal_stance(const SrbParams& p, const SrbState& s) {
  FootState feet;
  for (int i = 0; i < kNumToes; ++i) {
    feet.p_w[i] = s.p + p.nominal_arm(i);
    feet.f[i] = Vec3::Zero();
    feet.c[i] = 1;
  }
  return feet;
}

SrbState nominal_state() {
  SrbState s;
  s.p = Vec3(0, 0, 0.20);
  return s;
}
}  // namespace

TEST_CASE("rotation matrix basics") {
  CHECK(rotation_matrix(Vec3::Zero()).isApprox(Mat3::Identity(), 1e-15));

  Mat3 yaw90;
  yaw90 << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  CHECK(rotation_matrix(Vec3(0, 0, kPi / 2)).isApprox(yaw90, 1e-12));
}

TEST_CASE("rotation matrix is orthonormal with unit determinant") {
  std::mt19937_64 rng(101);
  for (int t = 0; t < 10000; ++t) {
    Mat3 R = rotation_matrix(random_angles(rng));
    CHECK((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(std::fabs(R.determinant() - 1.0) <= 1e-12);
  }
}

TEST_CASE("euler rate map entries and singularity") {
  CHECK(euler_rate_map(Vec3::Zero()).isApprox(Mat3::Identity(), 1e-15));

  Mat3 expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  CHECK(euler_rate_map(Vec3(0, 0, kPi / 2)).isApprox(expected, 1e-12));

  Mat3 singular = euler_rate_map(Vec3(0, kPi / 2, 0));
  CHECK(singular(2, 0) == doctest::Approx(-1.0));
  CHECK(singular(2, 1) == doctest::Approx(0.0));
  CHECK(singular(2, 2) == doctest::Approx(1.0));
  CHECK(std::fabs(singular.determinant()) <= 1e-12);

  // determinant equals cos(pitch)
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    Vec3 th = random_angles(rng);
    CHECK(euler_rate_map(th).determinant() == doctest::Approx(std::cos(th[1])).epsilon(1e-12));
  }
}

TEST_CASE("dynamics residual at equilibrium and in free flight") {
  SrbParams params;
  SrbState s = nominal_state();
  FootState feet = nominal_stance(params, s);
  double fz = params.mass * params.g[2] / 4.0;
  for (int i = 0; i < kNumToes; ++i) feet.f[i] = Vec3(0, 0, fz);

  Accel a;  // zero
  CHECK(dynamics_residual(s, feet, a, params).cwiseAbs().maxCoeff() <= 1e-12);

  // ballistic: all forces zero, a = -g
  FootState flight = feet;
  for (int i = 0; i < kNumToes; ++i) flight.f[i].setZero();
  Accel fall;
  fall.linear = -params.g;
  CHECK(dynamics_residual(s, flight, fall, params).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("dynamics residual reacts linearly to a force perturbation") {
  SrbParams params;
  SrbState s = nominal_state();
  FootState feet = nominal_stance(params, s);
  double fz = params.mass * params.g[2] / 4.0;
  for (int i = 0; i < kNumToes; ++i) feet.f[i] = Vec3(0, 0, fz);
  Accel a;

  FootState bumped = feet;
  bumped.f[1] += Vec3(1, 0, 0);
  auto res = dynamics_residual(s, bumped, a, params);
  CHECK(res.head<3>().isApprox(Vec3(-1, 0, 0), 1e-12));
  Vec3 r = feet.p_w[1] - s.p;
  CHECK(res.tail<3>().isApprox(-r.cross(Vec3(1, 0, 0)), 1e-12));

  // full Jacobian check against analytic columns
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> d(-5, 5);
  for (int t = 0; t < 200; ++t) {
    FootState base = feet;
    for (int i = 0; i < kNumToes; ++i) base.f[i] = Vec3(d(rng), d(rng), d(rng));
    Vec3 delta(d(rng), d(rng), d(rng));
    int toe = t % kNumToes;
    FootState pert = base;
    pert.f[toe] += delta;
    Eigen::Matrix<double, 6, 1> diff =
        dynamics_residual(s, pert, a, params) - dynamics_residual(s, base, a, params);
    Vec3 arm = base.p_w[toe] - s.p;
    CHECK(diff.head<3>().isApprox(-delta, 1e-12));
    CHECK(diff.tail<3>().isApprox(-arm.cross(delta), 1e-12));
  }
}

TEST_CASE("friction cone test and pyramid containment") {
  CHECK(friction_feasible(Vec3(3, 0, 10), 0.7));
  CHECK_FALSE(friction_feasible(Vec3(8, 0, 10), 0.7));

  auto rows = friction_pyramid_rows(0.7);
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> d(-20, 20);
  std::uniform_real_distribution<double> dz(0, 20);
  int inside = 0;
  for (int t = 0; t < 100000; ++t) {
    Vec3 f(d(rng), d(rng), dz(rng));
    bool in_pyramid = true;
    for (const auto& r : rows)
      if (r.dot(f) > 0) { in_pyramid = false; break; }
    if (!in_pyramid) continue;
    ++inside;
    CHECK(friction_feasible(f, 0.7));
  }
  CHECK(inside > 100);  // the sampler actually hits the pyramid
}

TEST_CASE("simulate_step drop test and equilibrium") {
  SrbParams params;
  SrbState s;
  s.p = Vec3(0, 0, 1);
  FootState feet;  // all zero forces
  for (int i = 0; i < kNumToes; ++i) feet.p_w[i] = params.nominal_arm(i);

  SrbState next = simulate_step(s, feet, params);
  CHECK(next.p.isApprox(Vec3(0, 0, 1), 1e-15));
  CHECK(next.v[2] == doctest::Approx(-0.7848).epsilon(1e-12));

  SrbState eq = nominal_state();
  FootState stance = nominal_stance(params, eq);
  for (int i = 0; i < kNumToes; ++i) stance.f[i] = Vec3(0, 0, params.mass * params.g[2] / 4.0);
  SrbState still = simulate_step(eq, stance, params);
  CHECK(still.p.isApprox(eq.p, 1e-14));
  CHECK(still.v.cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(still.theta.cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(still.theta_dot.cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("simulate_step conserves horizontal momentum under zero force") {
  SrbParams params;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> d(-1, 1);
  for (int t = 0; t < 100; ++t) {
    SrbState s;
    s.p = Vec3(d(rng), d(rng), 1.0 + d(rng));
    s.v = Vec3(d(rng), d(rng), d(rng));
    s.theta = 0.3 * Vec3(d(rng), d(rng), d(rng));
    s.theta_dot = 0.5 * Vec3(d(rng), d(rng), d(rng));
    FootState feet;
    for (int i = 0; i < kNumToes; ++i) feet.p_w[i] = s.p + params.nominal_arm(i);
    SrbState next = simulate_step(s, feet, params);
    CHECK(next.v[0] == doctest::Approx(s.v[0]).epsilon(1e-12));
    CHECK(next.v[1] == doctest::Approx(s.v[1]).epsilon(1e-12));
  }
}

TEST_CASE("simulate_step throws at the rate-map singularity") {
  SrbParams params;
  SrbState s;
  s.p = Vec3(0, 0, 1);
  s.theta = Vec3(0, kPi / 2 - 1e-12, 0);
  FootState feet;
  for (int i = 0; i < kNumToes; ++i) feet.p_w[i] = params.nominal_arm(i);
  CHECK_THROWS_AS((void)simulate_step(s, feet, params), SingularKinematics);
}

TEST_CASE("workspace feasibility") {
  SrbParams params;
  SrbState s = nominal_state();

  Vec3 nominal_toe = s.p + params.nominal_arm(0);
  CHECK(workspace_feasible(s, nominal_toe, 0, params));
  CHECK_FALSE(workspace_feasible(
      s, nominal_toe + Vec3(2 * params.box_half_extents[0], 0, 0), 0, params));

  // feasibility is invariant when body and toe rotate together
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> d(-1, 1);
  for (int t = 0; t < 500; ++t) {
    Vec3 offset = Vec3(d(rng), d(rng), d(rng)).cwiseProduct(1.5 * params.box_half_extents);
    Vec3 toe_body = params.nominal_arm(0) + offset;
    bool base = workspace_feasible(s, s.p + toe_body, 0, params);

    SrbState rotated = s;
    rotated.theta = Vec3(0, 0, kPi / 6);
    Mat3 R = rotation_matrix(rotated.theta);
    bool rot = workspace_feasible(rotated, rotated.p + R * toe_body, 0, params);
    CHECK(base == rot);
  }
}
