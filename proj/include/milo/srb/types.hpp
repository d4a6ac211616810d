#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

namespace milo::srb {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr int kNumToes = 4;

// Toe index order is contractual everywhere (features, gait seeds, logs):
// 0 = front-left, 1 = front-right, 2 = rear-left, 3 = rear-right.
enum Toe : int { kFrontLeft = 0, kFrontRight = 1, kRearLeft = 2, kRearRight = 3 };

struct SrbParams {
  double mass = 2.0;                                   // kg
  Mat3 inertia = (Mat3() << 0.008, 0, 0,               // kg m^2, body frame
                  0, 0.022, 0,
                  0, 0, 0.028).finished();
  double mu = 0.7;                                     // friction coefficient
  Vec3 g{0.0, 0.0, 9.81};                              // gravity magnitude vector
  std::array<Vec3, kNumToes> shoulder_offsets{         // H_b,i: com -> shoulder
      Vec3{0.175, 0.10, 0.0}, Vec3{0.175, -0.10, 0.0},
      Vec3{-0.175, 0.10, 0.0}, Vec3{-0.175, -0.10, 0.0}};
  std::array<Vec3, kNumToes> hip_offsets{              // o_i: shoulder -> workspace box center
      Vec3{0.0, 0.0, -0.20}, Vec3{0.0, 0.0, -0.20},
      Vec3{0.0, 0.0, -0.20}, Vec3{0.0, 0.0, -0.20}};
  Vec3 box_half_extents{0.06, 0.04, 0.06};             // workspace box B
  double f_max = 12.0;                                 // per-axis force bound, N
  double lift_height = 0.05;                           // H, m (world toe height when swinging)
  double big_m = 1.0;                                  // no-slip big-M, m
  double dt = 0.08;                                    // knot spacing, s
  int min_contacts = 2;                                // stance feet floor per knot

  // Nominal moment arm of toe i: com -> workspace box center.
  Vec3 nominal_arm(int toe) const { return shoulder_offsets[toe] + hip_offsets[toe]; }

  void validate() const;  // throws std::invalid_argument
};

struct SrbState {
  Vec3 p = Vec3::Zero();          // world position, m
  Vec3 v = Vec3::Zero();          // world velocity, m/s
  Vec3 theta = Vec3::Zero();      // Z-Y-X Euler angles [phi, theta, psi], rad
  Vec3 theta_dot = Vec3::Zero();  // Euler angle rates, rad/s
};

struct FootState {
  // Eigen vectors do not zero-initialize; spell the zeros out.
  std::array<Vec3, kNumToes> p_w{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  std::array<Vec3, kNumToes> f{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  std::array<int, kNumToes> c{0, 0, 0, 0};
};

struct TerrainRegion {
  struct Halfspace {
    Vec3 normal;    // unit
    double offset;  // normal . x <= offset
  };
  std::vector<Halfspace> halfspaces;

  bool contains(const Vec3& x, double tol = 1e-9) const;
  // Emptiness probe: samples the bounded box implied by the halfspaces.
  // Throws std::invalid_argument for an empty region.
  void validate() const;

  // Flat ground patch: z == height, |x - cx| <= hx, |y - cy| <= hy.
  static TerrainRegion flat_patch(double cx, double cy, double hx, double hy, double height = 0.0);
};

struct ProblemInstance {
  SrbParams params;
  int horizon_n = 5;     // knot count
  SrbState x0;
  FootState feet0;
  Vec3 v_ref = Vec3::Zero();
  Vec3 theta_ref = Vec3::Zero();
  double z_ref = 0.20;   // body height reference, m
  Vec3 w_v{100.0, 100.0, 10.0};
  Vec3 w_theta{10.0, 10.0, 10.0};
  double w_h = 10.0;
  std::vector<TerrainRegion> regions;
  // Planar walking variant: y/roll/yaw pinned to zero, diagonal toe pairs
  // {FL,RR} and {FR,RL} share their contact state.
  bool planar = false;

  void validate() const;  // throws std::invalid_argument
};

}  // namespace milo::srb
