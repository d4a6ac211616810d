#pragma once

// Brute-force QP oracle: enumerates every activity pattern of the two-sided
// rows (inactive / at lower / at upper), solves the equality-constrained KKT
// system, and keeps the best point that passes primal feasibility and dual
// sign checks. Independent of the ADMM implementation on purpose.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

namespace milo::testing {

struct OracleQpResult {
  bool found = false;
  double objective = std::numeric_limits<double>::infinity();
  Eigen::VectorXd x;
};

inline OracleQpResult oracle_solve_qp(const Eigen::MatrixXd& P, const Eigen::VectorXd& q,
                                      const Eigen::MatrixXd& A, const Eigen::VectorXd& l,
                                      const Eigen::VectorXd& u, double tol = 1e-7) {
  const int n = static_cast<int>(P.rows());
  const int m = static_cast<int>(A.rows());
  OracleQpResult best;

  long patterns = 1;
  for (int i = 0; i < m; ++i) patterns *= 3;

  for (long code = 0; code < patterns; ++code) {
    long c = code;
    std::vector<int> state(m);  // 0 inactive, 1 at lower, 2 at upper
    bool valid = true;
    for (int i = 0; i < m; ++i) {
      state[i] = static_cast<int>(c % 3);
      c /= 3;
      if (state[i] == 1 && !std::isfinite(l[i])) valid = false;
      if (state[i] == 2 && !std::isfinite(u[i])) valid = false;
      // equality rows must be active; canonicalize to "at lower"
      if (std::isfinite(l[i]) && std::isfinite(u[i]) && u[i] - l[i] < 1e-12 && state[i] != 1)
        valid = false;
    }
    if (!valid) continue;

    std::vector<int> act;
    for (int i = 0; i < m; ++i)
      if (state[i] != 0) act.push_back(i);
    const int ma = static_cast<int>(act.size());

    Eigen::MatrixXd K(n + ma, n + ma);
    K.setZero();
    K.topLeftCorner(n, n) = P;
    Eigen::VectorXd rhs(n + ma);
    rhs.head(n) = -q;
    for (int k = 0; k < ma; ++k) {
      K.block(n + k, 0, 1, n) = A.row(act[k]);
      K.block(0, n + k, n, 1) = A.row(act[k]).transpose();
      rhs[n + k] = state[act[k]] == 1 ? l[act[k]] : u[act[k]];
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (!lu.isInvertible()) continue;
    Eigen::VectorXd sol = lu.solve(rhs);
    Eigen::VectorXd x = sol.head(n);

    // primal feasibility on inactive rows
    Eigen::VectorXd ax = A * x;
    bool feasible = true;
    for (int i = 0; i < m && feasible; ++i) {
      if (ax[i] < l[i] - tol || ax[i] > u[i] + tol) feasible = false;
    }
    if (!feasible) continue;

    // dual signs: lower-active lambda <= 0, upper-active >= 0
    bool signs_ok = true;
    for (int k = 0; k < ma && signs_ok; ++k) {
      double lam = sol[n + k];
      int i = act[k];
      bool eq = std::isfinite(l[i]) && std::isfinite(u[i]) && u[i] - l[i] < 1e-12;
      if (eq) continue;
      if (state[i] == 1 && lam > tol) signs_ok = false;
      if (state[i] == 2 && lam < -tol) signs_ok = false;
    }
    if (!signs_ok) continue;

    double obj = 0.5 * x.dot(P * x) + q.dot(x);
    if (obj < best.objective) {
      best.found = true;
      best.objective = obj;
      best.x = x;
    }
  }
  return best;
}

}  // namespace milo::testing
