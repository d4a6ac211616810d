#pragma once

#include "milo/srb/types.hpp"

#include <utility>
#include <vector>

namespace milo::srb {

// Body-to-world rotation for Z-Y-X Euler angles [phi, theta, psi]:
// R = Rz(psi) * Ry(theta) * Rx(phi).
Mat3 rotation_matrix(const Vec3& theta);

// Maps Euler-angle rates to the world angular velocity: omega = E(theta) * theta_dot.
// Singular where cos(pitch) = 0; callers decide whether that matters.
Mat3 euler_rate_map(const Vec3& theta);

inline Vec3 angular_velocity(const SrbState& s) { return euler_rate_map(s.theta) * s.theta_dot; }

struct Accel {
  Vec3 linear = Vec3::Zero();    // com acceleration, m/s^2
  Vec3 angular = Vec3::Zero();   // world angular acceleration, rad/s^2
};

// Newton/Euler residual; zero iff (state, feet, accel) satisfy the dynamics.
// Linear part: m*a - sum(f) + m*g. Angular: I*omega_dot + omega x (I omega) - sum(r x f),
// with r_i = p_w,i - p.
Eigen::Matrix<double, 6, 1> dynamics_residual(const SrbState& state, const FootState& feet,
                                              const Accel& accel, const SrbParams& params);

// Exact second-order cone test: mu * f_z >= sqrt(f_x^2 + f_y^2).
bool friction_feasible(const Vec3& f, double mu);

// Inner pyramid rows over (f_x, f_y, f_z): a . f <= 0. Any f satisfying all rows
// lies inside the exact cone (1/sqrt(2) margin).
std::vector<Vec3> friction_pyramid_rows(double mu);

// One forward-Euler knot: position with current velocity, then velocity from the
// Newton law; angles with current rates, then rates recovered from the updated
// angular velocity through the rate map inverse.
// Throws SingularKinematics when |cos(pitch)| < 1e-9 at the updated angles.
SrbState simulate_step(const SrbState& state, const FootState& feet, const SrbParams& params);

// True iff R^T (p_w - H_w - R*o) lies in the box B componentwise,
// with H_w = p + R * H_b.
bool workspace_feasible(const SrbState& state, const Vec3& toe_w, int toe,
                        const SrbParams& params);

}  // namespace milo::srb
