#pragma once

#include "milo/qp/solver.hpp"

namespace milo::qp {

struct IpmSettings {
  double eps = 1e-7;          // primal residual tolerance; dual and gap are
                              // checked relative to the objective scale
  int max_iter = 120;
  double reg_primal = 1e-8;   // delta on the (1,1) block
  double reg_dual = 1e-8;     // D entry for equality rows
  double step_damp = 0.995;   // fraction-to-boundary damping
  // divergence heuristics for infeasibility
  double dual_blowup = 1e9;
};

// Primal-dual interior-point method for
//   min 0.5 x'Px + q'x   s.t.  l <= Ax <= u
// with two-sided, one-sided, and equality rows. One symbolic factorization of
// the quasi-definite KKT matrix serves every Newton step (and every re-solve
// after update_bounds), which is what the branch-and-bound node loop needs.
// Robust on the degenerate contact-geometry relaxations where operator
// splitting stalls; no warm-start advantage, so the online MPC path keeps
// the ADMM solver.
class IpmSolver {
 public:
  IpmSolver(SpMat P, Vec q, SpMat A, Vec l, Vec u, IpmSettings settings = {});

  void update_bounds(const Vec& l, const Vec& u);
  void update_q(const Vec& q);

  QpSolution solve();

  int num_vars() const { return n_; }
  int num_rows() const { return m_; }

 private:
  IpmSettings settings_;
  int n_ = 0, m_ = 0;
  SpMat P_, A_, At_;
  Vec q_, l_, u_;

  // KKT scaffold: values rewritten every Newton step, pattern fixed
  SpMat kkt_;
  std::vector<double*> d_slots_;  // writable pointers to the -D diagonal
  std::vector<double*> x_slots_;  // writable pointers to the (1,1) diagonal
  Vec x_diag_base_;               // P_jj + reg_primal
  Eigen::SimplicialLDLT<SpMat> ldlt_;
  bool analyzed_ = false;

  void build_kkt_pattern();
};

QpSolution solve_qp_ipm(const SpMat& P, const Vec& q, const SpMat& A, const Vec& l, const Vec& u,
                        const IpmSettings& settings = {});

}  // namespace milo::qp
