#pragma once

#include "milo/learn/learn.hpp"
#include "milo/qp/solver.hpp"
#include "milo/relax/fix.hpp"
#include "milo/srb/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace milo::mpc {

struct Disturbance {
  int tick = 0;
  srb::Vec3 dv = srb::Vec3::Zero();  // velocity impulse added to the plant
};

struct MpcConfig {
  int horizon = 5;       // 400 ms at the default knot spacing
  int candidate_k = 5;
  qp::QpSettings qp;
  std::vector<Disturbance> disturbances;
  srb::ProblemInstance base;  // params, references, regions, planar flag
  relax::SegmentationSpec seg = relax::SegmentationSpec::paper_default();

  void validate() const;
};

struct MpcCommand {
  std::array<srb::Vec3, srb::kNumToes> forces{};       // first-interval contact forces
  std::array<int, srb::kNumToes> contacts{};           // commanded next-knot contacts
  std::array<srb::Vec3, srb::kNumToes> toe_targets{};  // next-knot toe positions
};

struct StepLog {
  int tick = 0;
  learn::FeatureVector features;
  int candidate_tried = -1;  // 1-based rank of the successful candidate
  std::vector<std::string> candidate_status;
  int qp_iters = 0;
  double qp_solve_time = 0.0;  // seconds, winning solve only
  MpcCommand command;
  srb::SrbState state_after;
  bool all_stance_commanded = false;
  bool failed = false;
};

// Features -> KNN candidates -> fixed-integer QP; the first Solved candidate
// wins. Throws AllCandidatesFailed with per-candidate statuses.
MpcCommand mpc_step(const std::vector<learn::Snapshot>& history, const learn::Dataset& ds,
                    const MpcConfig& cfg, StepLog& log);

struct ClosedLoopResult {
  std::vector<learn::Snapshot> trajectory;  // plant state after each tick
  std::vector<StepLog> logs;
  bool aborted = false;
  std::string abort_reason;
};

// mpc_step -> apply the first knot through simulate_step -> inject scheduled
// velocity impulses. Halts with a diagnostic on AllCandidatesFailed.
ClosedLoopResult run_closed_loop(const srb::SrbState& x0, const srb::FootState& feet0,
                                 const learn::Dataset& ds, const MpcConfig& cfg, int ticks);

struct AdmittanceGains {
  srb::Vec3 M_d = srb::Vec3::Ones();   // diagonal desired inertia, > 0
  srb::Vec3 D_d = srb::Vec3::Zero();   // damping
  srb::Vec3 K_d = srb::Vec3::Zero();   // stiffness
  srb::Vec3 K_f = srb::Vec3::Ones();   // force gain
};

struct AdmittanceState {
  srb::Vec3 x = srb::Vec3::Zero();
  srb::Vec3 x_dot = srb::Vec3::Zero();
};

// xdd = M^-1 (-D x_dot - K (x - x0) + Kf (f_meas - F_ref)); the command is
// the doubly integrated position (position advances with the pre-update
// velocity, matching the plant integrator).
AdmittanceState admittance_update(const AdmittanceState& s, const srb::Vec3& x0,
                                  const srb::Vec3& f_meas, const srb::Vec3& F_ref,
                                  const AdmittanceGains& g, double dt);

}  // namespace milo::mpc
