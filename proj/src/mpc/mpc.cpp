#include "milo/mpc/mpc.hpp"

#include "milo/errors.hpp"
#include "milo/relax/builder.hpp"
#include "milo/srb/model.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace milo::mpc {

using relax::MixedIntegerQP;
using relax::Vec;

void MpcConfig::validate() const {
  if (horizon < 2) throw std::invalid_argument("mpc horizon must be >= 2");
  if (candidate_k < 1) throw std::invalid_argument("candidate_k must be >= 1");
  qp.validate();
}

namespace {

// extended system of a fixed QP (bound rows appended)
void assemble(const relax::FixedQp& f, relax::SpMat& A, Vec& l, Vec& u) {
  std::vector<Eigen::Triplet<double>> trips;
  for (int j = 0; j < f.A.outerSize(); ++j)
    for (relax::SpMat::InnerIterator it(f.A, j); it; ++it)
      trips.emplace_back(it.row(), j, it.value());
  int rows = static_cast<int>(f.A.rows());
  std::vector<double> lv(f.l.data(), f.l.data() + f.l.size());
  std::vector<double> uv(f.u.data(), f.u.data() + f.u.size());
  for (int j = 0; j < f.num_vars(); ++j)
    if (std::isfinite(f.lb[j]) || std::isfinite(f.ub[j])) {
      trips.emplace_back(rows, j, 1.0);
      lv.push_back(f.lb[j]);
      uv.push_back(f.ub[j]);
      ++rows;
    }
  A.resize(rows, f.num_vars());
  A.setFromTriplets(trips.begin(), trips.end());
  l = Eigen::Map<const Vec>(lv.data(), lv.size());
  u = Eigen::Map<const Vec>(uv.data(), uv.size());
}

}  // namespace

MpcCommand mpc_step(const std::vector<learn::Snapshot>& history, const learn::Dataset& ds,
                    const MpcConfig& cfg, StepLog& log) {
  cfg.validate();
  if (history.size() < 2) throw InsufficientHistory("mpc_step needs 2 knots of history");
  if (ds.points.empty()) throw EmptyDataset("mpc_step with an empty dataset");

  const learn::Snapshot& now = history.back();
  srb::ProblemInstance inst = cfg.base;
  inst.horizon_n = cfg.horizon;
  inst.x0 = now.state;
  inst.feet0 = now.feet;

  MixedIntegerQP m = relax::build_miqp(inst, cfg.seg);
  if (m.num_binaries() != static_cast<int>(ds.binary_names.size()))
    throw InvalidWarmStart("dataset binaries do not match the online model");

  log.features = learn::extract_features(history, inst.params.dt);
  auto candidates = learn::knn_query(ds, log.features, cfg.candidate_k);

  log.candidate_status.clear();
  for (std::size_t rank = 0; rank < candidates.size(); ++rank) {
    relax::FixedQp fixed;
    try {
      fixed = relax::fix_integers(m, candidates[rank]);
    } catch (const InconsistentAssignment& e) {
      log.candidate_status.emplace_back(std::string("Inconsistent: ") + e.what());
      continue;
    }
    if (fixed.trivially_infeasible) {
      log.candidate_status.emplace_back("TriviallyInfeasible");
      continue;
    }
    relax::SpMat A;
    Vec l, u;
    assemble(fixed, A, l, u);
    qp::QpSolution sol;
    try {
      sol = qp::solve_qp(fixed.P, fixed.q, A, l, u, cfg.qp);
    } catch (const NumericalBreakdown& e) {
      log.candidate_status.emplace_back(std::string("Breakdown: ") + e.what());
      continue;
    }
    log.candidate_status.emplace_back(qp::to_string(sol.status));
    if (sol.status != qp::QpStatus::Solved) continue;

    log.candidate_tried = static_cast<int>(rank) + 1;
    log.qp_iters = sol.iters;
    log.qp_solve_time = sol.solve_time;

    Vec full = fixed.lift(sol.x, m, candidates[rank]);
    MpcCommand cmd;
    for (int i = 0; i < srb::kNumToes; ++i) {
      for (int k = 0; k < 3; ++k) {
        cmd.forces[i][k] = full[m.names.at("f[0][" + std::to_string(i) + "]." +
                                           std::string(1, "xyz"[k]))];
        cmd.toe_targets[i][k] = full[m.names.at("pw[1][" + std::to_string(i) + "]." +
                                                std::string(1, "xyz"[k]))];
      }
      cmd.contacts[i] =
          static_cast<int>(std::lround(full[m.names.at("c[1][" + std::to_string(i) + "]")]));
    }
    log.command = cmd;
    log.all_stance_commanded =
        cmd.contacts[0] && cmd.contacts[1] && cmd.contacts[2] && cmd.contacts[3];
    return cmd;
  }

  std::ostringstream msg;
  msg << "all " << candidates.size() << " candidates failed:";
  for (std::size_t i = 0; i < log.candidate_status.size(); ++i)
    msg << " [" << (i + 1) << "] " << log.candidate_status[i];
  throw AllCandidatesFailed(msg.str());
}

ClosedLoopResult run_closed_loop(const srb::SrbState& x0, const srb::FootState& feet0,
                                 const learn::Dataset& ds, const MpcConfig& cfg, int ticks) {
  cfg.validate();
  ClosedLoopResult out;

  learn::Snapshot current{x0, feet0};
  std::vector<learn::Snapshot> history{current, current};

  for (int tick = 0; tick < ticks; ++tick) {
    for (const auto& d : cfg.disturbances)
      if (d.tick == tick) {
        history.back().state.v += d.dv;
        current.state.v += d.dv;
      }

    StepLog log;
    log.tick = tick;
    MpcCommand cmd;
    try {
      cmd = mpc_step(history, ds, cfg, log);
    } catch (const std::exception& e) {
      log.failed = true;
      out.logs.push_back(log);
      out.aborted = true;
      out.abort_reason = std::string("tick ") + std::to_string(tick) + ": " + e.what();
      return out;
    }

    // apply the first knot: commanded forces act at the current contact
    // geometry, then the toes move to their commanded targets
    srb::FootState applied = current.feet;
    for (int i = 0; i < srb::kNumToes; ++i) applied.f[i] = cmd.forces[i];
    srb::SrbState next = srb::simulate_step(current.state, applied, cfg.base.params);

    srb::FootState next_feet;
    for (int i = 0; i < srb::kNumToes; ++i) {
      next_feet.p_w[i] = cmd.toe_targets[i];
      next_feet.c[i] = cmd.contacts[i];
      next_feet.f[i] = srb::Vec3::Zero();
    }

    current = {next, next_feet};
    log.state_after = next;
    out.logs.push_back(log);
    out.trajectory.push_back(current);

    history.erase(history.begin());
    history.push_back(current);
  }
  return out;
}

AdmittanceState admittance_update(const AdmittanceState& s, const srb::Vec3& x0,
                                  const srb::Vec3& f_meas, const srb::Vec3& F_ref,
                                  const AdmittanceGains& g, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("admittance dt must be positive");
  for (int k = 0; k < 3; ++k)
    if (!(g.M_d[k] > 0.0)) throw std::invalid_argument("M_d must be positive");

  srb::Vec3 xdd;
  for (int k = 0; k < 3; ++k)
    xdd[k] = (-g.D_d[k] * s.x_dot[k] - g.K_d[k] * (s.x[k] - x0[k]) +
              g.K_f[k] * (f_meas[k] - F_ref[k])) /
             g.M_d[k];

  AdmittanceState next;
  next.x = s.x + s.x_dot * dt;  // position first, with the pre-update velocity
  next.x_dot = s.x_dot + xdd * dt;
  return next;
}

}  // namespace milo::mpc
