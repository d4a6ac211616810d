#include "milo/srb/model.hpp"

#include "milo/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace milo::srb {

void SrbParams::validate() const {
  if (!(mass > 0.0)) throw std::invalid_argument("mass must be positive");
  if ((inertia - inertia.transpose()).norm() > 1e-12)
    throw std::invalid_argument("inertia must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat3> es(inertia);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("inertia must be positive definite");
  if (mu < 0.0) throw std::invalid_argument("mu must be nonnegative");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (min_contacts < 0 || min_contacts > kNumToes)
    throw std::invalid_argument("min_contacts must be in [0,4]");
  // Beyond a box traversal plus one knot of body travel the no-slip rows stop binding.
  double reach = 2.0 * box_half_extents.maxCoeff();
  if (big_m <= reach) throw std::invalid_argument("big_m too small for workspace box");
  // a swinging toe sits lift_height above its stance level; it must stay
  // inside the workspace box
  if (lift_height > box_half_extents[2])
    throw std::invalid_argument("lift_height exceeds the workspace box z extent");
}

bool TerrainRegion::contains(const Vec3& x, double tol) const {
  for (const auto& h : halfspaces)
    if (h.normal.dot(x) > h.offset + tol) return false;
  return true;
}

void TerrainRegion::validate() const {
  if (halfspaces.empty()) throw std::invalid_argument("region has no halfspaces");
  // Chebyshev-style probe on a coarse grid over the offsets' bounding scale.
  double scale = 0.0;
  for (const auto& h : halfspaces) scale = std::max(scale, std::fabs(h.offset));
  scale = std::max(scale, 1.0);
  const int steps = 9;
  for (int ix = 0; ix < steps; ++ix)
    for (int iy = 0; iy < steps; ++iy)
      for (int iz = 0; iz < steps; ++iz) {
        Vec3 x(scale * (2.0 * ix / (steps - 1) - 1.0), scale * (2.0 * iy / (steps - 1) - 1.0),
               scale * (2.0 * iz / (steps - 1) - 1.0));
        if (contains(x, 1e-9)) return;
      }
  throw std::invalid_argument("region feasibility probe failed (empty region?)");
}

TerrainRegion TerrainRegion::flat_patch(double cx, double cy, double hx, double hy,
                                        double height) {
  TerrainRegion r;
  r.halfspaces = {
      {Vec3(0, 0, 1), height},   {Vec3(0, 0, -1), -height},
      {Vec3(1, 0, 0), cx + hx},  {Vec3(-1, 0, 0), -(cx - hx)},
      {Vec3(0, 1, 0), cy + hy},  {Vec3(0, -1, 0), -(cy - hy)},
  };
  return r;
}

void ProblemInstance::validate() const {
  params.validate();
  if (horizon_n < 2) throw std::invalid_argument("horizon_n must be >= 2");
  if (w_v.minCoeff() < 0 || w_theta.minCoeff() < 0 || w_h < 0)
    throw std::invalid_argument("objective weights must be nonnegative");
  if (!v_ref.allFinite() || !theta_ref.allFinite() || !std::isfinite(z_ref))
    throw std::invalid_argument("references must be finite");
  if (regions.empty()) throw std::invalid_argument("at least one terrain region required");
  for (const auto& r : regions) r.validate();
}

Mat3 rotation_matrix(const Vec3& theta) {
  const double sphi = std::sin(theta[0]), cphi = std::cos(theta[0]);
  const double sth = std::sin(theta[1]), cth = std::cos(theta[1]);
  const double spsi = std::sin(theta[2]), cpsi = std::cos(theta[2]);
  Mat3 R;
  R << cth * cpsi, sphi * sth * cpsi - spsi * cphi, sphi * spsi + sth * cphi * cpsi,
       spsi * cth, cphi * cpsi + sphi * sth * spsi, sth * spsi * cphi - sphi * cpsi,
       -sth,       sphi * cth,                      cphi * cth;
  return R;
}

Mat3 euler_rate_map(const Vec3& theta) {
  const double sth = std::sin(theta[1]), cth = std::cos(theta[1]);
  const double spsi = std::sin(theta[2]), cpsi = std::cos(theta[2]);
  Mat3 E;
  E << cth * cpsi, -spsi, 0,
       cth * spsi, cpsi,  0,
       -sth,       0,     1;
  return E;
}

Eigen::Matrix<double, 6, 1> dynamics_residual(const SrbState& state, const FootState& feet,
                                              const Accel& accel, const SrbParams& params) {
  Vec3 force_sum = Vec3::Zero();
  Vec3 moment_sum = Vec3::Zero();
  for (int i = 0; i < kNumToes; ++i) {
    force_sum += feet.f[i];
    moment_sum += (feet.p_w[i] - state.p).cross(feet.f[i]);
  }
  const Vec3 omega = angular_velocity(state);
  Eigen::Matrix<double, 6, 1> res;
  res.head<3>() = params.mass * accel.linear - force_sum + params.mass * params.g;
  res.tail<3>() =
      params.inertia * accel.angular + omega.cross(params.inertia * omega) - moment_sum;
  return res;
}

bool friction_feasible(const Vec3& f, double mu) {
  return mu * f[2] >= std::hypot(f[0], f[1]);
}

std::vector<Vec3> friction_pyramid_rows(double mu) {
  const double k = mu / std::sqrt(2.0);
  return {Vec3(1, 0, -k), Vec3(-1, 0, -k), Vec3(0, 1, -k), Vec3(0, -1, -k), Vec3(0, 0, -1)};
}

SrbState simulate_step(const SrbState& state, const FootState& feet, const SrbParams& params) {
  const double dt = params.dt;

  Vec3 force_sum = Vec3::Zero();
  Vec3 moment_sum = Vec3::Zero();
  for (int i = 0; i < kNumToes; ++i) {
    force_sum += feet.f[i];
    moment_sum += (feet.p_w[i] - state.p).cross(feet.f[i]);
  }
  const Vec3 a = force_sum / params.mass - params.g;

  const Vec3 omega = angular_velocity(state);
  const Vec3 omega_dot =
      params.inertia.ldlt().solve(moment_sum - omega.cross(params.inertia * omega));

  SrbState next;
  next.p = state.p + state.v * dt;
  next.v = state.v + a * dt;
  next.theta = state.theta + state.theta_dot * dt;
  const Vec3 omega_next = omega + omega_dot * dt;

  const Mat3 E = euler_rate_map(next.theta);
  if (std::fabs(std::cos(next.theta[1])) < 1e-9)
    throw SingularKinematics("euler rate map singular: |cos(pitch)| < 1e-9");
  next.theta_dot = E.inverse() * omega_next;
  return next;
}

bool workspace_feasible(const SrbState& state, const Vec3& toe_w, int toe,
                        const SrbParams& params) {
  const Mat3 R = rotation_matrix(state.theta);
  const Vec3 shoulder_w = state.p + R * params.shoulder_offsets[toe];
  const Vec3 offset_body = R.transpose() * (toe_w - shoulder_w - R * params.hip_offsets[toe]);
  return (offset_body.array().abs() <= params.box_half_extents.array() + 1e-12).all();
}

}  // namespace milo::srb
